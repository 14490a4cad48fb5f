#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "supt/backbone.hpp"
#include "supt/checkpoint.hpp"
#include "supt/graph.hpp"
#include "supt/prompt.hpp"

namespace supt {

struct TuneConfig {
    PromptVariant variant = PromptVariant::Gpf;
    int k = 1;
    double pool_ratio = 0.4;
    int hops = 1;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    int head_layers = 1;
    ReadoutKind pooling = ReadoutKind::Sum;
    int epochs = 50;
    int shots = 0;  // 0 = full-shot, otherwise the few-shot train size
    std::uint64_t seed = 0;
    double aux_lp_lambda = 0.0;
    bool overlap_normalize = false;
    bool column_softmax = false;
    // When set, values outside the reference search grids are rejected.
    bool grid_mode = false;
};

// Returns a warning per knob outside the search grids; throws ConfigError in
// grid mode instead.
std::vector<std::string> check_grids(const TuneConfig& cfg);

// Mean stable sigmoid-BCE over unmasked entries. Throws ContractError when
// everything is masked.
double masked_bce_loss(std::span<const double> logits, std::span<const double> y,
                       std::span<const std::uint8_t> y_mask);

// A tuned model: frozen-or-tunable backbone, prompt, head.
struct Model {
    GinConfig gin;
    ParamGroup backbone;
    PromptParams prompt;
    HeadConfig head_cfg;
    ParamGroup head;
    ReadoutKind pooling = ReadoutKind::Sum;

    std::vector<double> logits(const Graph& g) const;
};

struct EvalResult {
    std::vector<double> per_task_auc;  // NaN where the task was skipped
    double mean_auc = 0.0;
    int tasks_used = 0;
};

EvalResult evaluate_model(const Model& model, const Dataset& ds, std::span<const int> indices);

struct TrainResult {
    double best_valid_auc = 0.0;
    double test_auc_at_best_valid = 0.0;
    std::vector<double> loss_curve;
    std::size_t params_tuned = 0;
    std::size_t params_backbone = 0;
    double wall_ms = 0.0;
    int best_epoch = -1;
    Model model;
};

TrainResult tune_run(const TuneConfig& cfg, const Checkpoint& checkpoint, const Dataset& ds,
                     const SplitSpec& split);

struct SweepRow {
    std::string dataset;
    std::string pretrain;
    TuneConfig cfg;
    std::optional<TrainResult> result;
    std::string error;  // non-empty when the run failed
};

struct SweepSummary {
    std::vector<SweepRow> rows;
    double mean_test_auc = 0.0;
    double stddev_test_auc = 0.0;  // sample stddev
    int failures = 0;
};

// One run per seed, fanned out over at most `workers` threads. Throws on the
// first failure unless allow_partial.
SweepSummary seed_sweep(const TuneConfig& tmpl, const std::vector<std::uint64_t>& seeds,
                        const Checkpoint& checkpoint, const Dataset& ds, const SplitSpec& split,
                        int workers = 1, bool allow_partial = false);

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

// Scalar program "prompt -> backbone -> readout -> head -> masked BCE
// (+ lambda * link loss)" over one graph, for gradient checking. The
// ParamGroup it receives must carry the gin.*, prompt.* and head.* tensors;
// prompt_meta supplies the variant configuration only.
std::function<Value(Tape&, const ParamGroup&)> make_end_to_end_program(
    GinConfig gin, PromptParams prompt_meta, HeadConfig head_cfg, ReadoutKind pooling, Graph g,
    double aux_lambda = 0.0);

}  // namespace supt
