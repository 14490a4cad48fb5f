#pragma once

#include <vector>

#include "supt/backbone.hpp"
#include "supt/graph.hpp"
#include "supt/prompt.hpp"

namespace supt {

// Constructive witness that a prompt restricted to a node subset can reproduce
// an all-nodes prompt on a single-layer linear GIN with sum readout. The
// subset prompt is the all-nodes prompt scaled by
//   (D + N(1+eps)) / (sum of subset degrees + (1+eps)|S|).
struct UniversalityWitness {
    std::vector<int> subset;
    Tensor2 base_prompt;    // 1 x d
    Tensor2 scaled_prompt;  // 1 x d
    double scale = 1.0;
    int degree_sum = 0;  // D
    int num_nodes = 0;
    double epsilon = 0.0;
};

UniversalityWitness universality_witness(const Graph& g, const std::vector<int>& subset,
                                         double epsilon, const Tensor2& prompt);

struct UniversalityCheck {
    bool pass = false;
    double residual = 0.0;
};

// Compares graph embeddings of the subset-prompted and all-nodes-prompted
// features. cfg must be the single-layer linear form; readout is fixed to sum.
UniversalityCheck universality_check(const Graph& g, const UniversalityWitness& witness,
                                     const GinConfig& cfg, const ParamGroup& backbone,
                                     double tol = 1e-9);

// Mean wall-clock seconds of one prompt application (prompt computation only,
// backbone excluded), warm-started.
double timing_probe(const PromptParams& pp, const Graph& g, int repetitions = 1000);

}  // namespace supt
