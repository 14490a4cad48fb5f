#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "supt/tensor.hpp"

namespace supt {

// Undirected graph with node features and (optionally missing) multi-task
// binary labels. Edge list stores each pair once; no self-loops.
struct Graph {
    int num_nodes = 0;
    std::vector<std::pair<int, int>> edges;
    Tensor2 x;                        // N x d
    std::vector<double> y;            // T
    std::vector<std::uint8_t> y_mask; // T, 1 where the label is present
};

// (D^{-1/2} (A+I) D^{-1/2})^m, materialized densely.
struct NormAdj {
    Tensor2 s;
    int hops = 1;
};

struct Dataset {
    std::vector<Graph> graphs;
    int num_tasks = 0;
    int feature_dim = 0;
    std::string name;
};

struct SplitSpec {
    std::vector<int> train, valid, test;
    std::uint64_t seed = 0;
    bool has_empty_parts = false;
};

// Throws DataError naming the first violated invariant.
void validate_graph(const Graph& g);

// Raw loopless 0/1 adjacency.
Tensor2 adjacency(const Graph& g);
std::vector<int> degrees(const Graph& g);

NormAdj normalized_adjacency(const Graph& g, int hops);

// Lines beginning with '#' are skipped on load; save can emit such lines as a
// provenance header.
Dataset load_dataset_jsonl(const std::string& path);
void save_dataset_jsonl(const Dataset& ds, const std::string& path,
                        const std::vector<std::string>& header = {});

// Random graphs with planted structural motifs; task t is 1 iff motif t is
// present. Tasks cycle through {triangle, four-cycle, star}. Labels are
// balanced per task to within 60/40 by rejection sampling.
Dataset synth_motif_dataset(std::uint64_t seed, int num_graphs, int n_min, int n_max,
                            int feature_dim, int num_tasks);

SplitSpec split_dataset(const Dataset& ds, double train_ratio, double valid_ratio,
                        double test_ratio, std::uint64_t seed);

// Keeps valid/test, replaces train with a uniform n-subset.
SplitSpec few_shot_sample(const SplitSpec& split, int n, std::uint64_t seed);

// Motif predicates used by the generator to label graphs.
bool has_triangle(const Graph& g);
bool has_four_cycle(const Graph& g);
bool has_star(const Graph& g, int min_leaves = 4);

}  // namespace supt
