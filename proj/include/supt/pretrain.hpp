#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "supt/backbone.hpp"
#include "supt/checkpoint.hpp"
#include "supt/graph.hpp"
#include "supt/tape.hpp"

namespace supt {

// Desk-scale stand-ins for common pre-training strategies: they exist to
// produce frozen backbones with nontrivial structure, nothing more.
enum class PretrainTask { EdgePred, AttrMask, Infomax };

std::string to_string(PretrainTask t);
PretrainTask pretrain_task_from_string(const std::string& s);

struct PretrainConfig {
    PretrainTask task = PretrainTask::EdgePred;
    int epochs = 50;
    double lr = 1e-3;
    double weight_decay = 0.0;
    double mask_fraction = 0.15;  // attrmask
    double negative_ratio = 1.0;  // edgepred
    std::uint64_t seed = 0;
};

// BCE over positive edges and an equal share of sampled non-edges; edge score
// is sigmoid(z_u . z_v).
Value edgepred_loss(Tape& tape, const GinConfig& cfg,
                    const std::map<std::string, Value>& leaves, const Graph& g,
                    double negative_ratio, std::uint64_t seed);

// Zero out a seeded ceil(f*N)-row subset of X, reconstruct those rows with a
// linear decoder ("pretrain.decoder"), MSE over masked rows only.
Value attrmask_loss(Tape& tape, const GinConfig& cfg,
                    const std::map<std::string, Value>& leaves, const Graph& g,
                    double mask_fraction, std::uint64_t seed);

// Bilinear discriminator ("pretrain.disc") of node embeddings against the mean
// readout; negatives come from a feature-row-shuffled corruption.
Value infomax_loss(Tape& tape, const GinConfig& cfg,
                   const std::map<std::string, Value>& leaves, const Graph& g,
                   std::uint64_t seed);

// Auxiliary parameters the task needs on top of the backbone.
ParamGroup init_pretrain_aux_params(PretrainTask task, const GinConfig& cfg, Rng& rng);

struct PretrainResult {
    Checkpoint checkpoint;
    std::vector<double> loss_curve;
    int skipped_graphs = 0;
};

PretrainResult pretrain_run(const PretrainConfig& cfg, const GinConfig& gin, const Dataset& ds);

}  // namespace supt
