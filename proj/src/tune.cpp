#include "supt/tune.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

#include "supt/metrics.hpp"
#include "supt/optim.hpp"

namespace supt {

namespace {

bool contains_d(std::initializer_list<double> grid, double v) {
    for (double g : grid)
        if (std::fabs(g - v) < 1e-12) return true;
    return false;
}

bool contains_i(std::initializer_list<int> grid, int v) {
    for (int g : grid)
        if (g == v) return true;
    return false;
}

}  // namespace

std::vector<std::string> check_grids(const TuneConfig& cfg) {
    std::vector<std::string> warnings;
    auto note = [&](const std::string& msg) {
        if (cfg.grid_mode) throw ConfigError("grid mode: " + msg);
        warnings.push_back(msg);
    };
    if (!contains_i({1, 2, 3, 4, 5}, cfg.k)) note("k=" + std::to_string(cfg.k) + " outside {1..5}");
    if (cfg.variant == PromptVariant::SuptHard &&
        !contains_d({0.2, 0.4, 0.6}, cfg.pool_ratio)) {
        note("r=" + std::to_string(cfg.pool_ratio) + " outside {0.2,0.4,0.6}");
    }
    if (!contains_d({1e-3, 5e-4, 1e-4}, cfg.lr)) note("lr outside {1e-3,5e-4,1e-4}");
    if (!contains_d({1e-3, 1e-4, 1e-5}, cfg.weight_decay)) {
        note("weight_decay outside {1e-3,1e-4,1e-5}");
    }
    if (!contains_i({1, 2, 3, 4}, cfg.head_layers)) note("head_layers outside {1..4}");
    if (!contains_i({50, 100, 300}, cfg.epochs)) note("epochs outside {50,100,300}");
    return warnings;
}

double masked_bce_loss(std::span<const double> logits, std::span<const double> y,
                       std::span<const std::uint8_t> y_mask) {
    if (logits.size() != y.size() || logits.size() != y_mask.size()) {
        throw ContractError("masked_bce_loss: length mismatch");
    }
    double loss = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!y_mask[i]) continue;
        const double z = logits[i];
        loss += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::fabs(z)));
        ++count;
    }
    if (count == 0) throw ContractError("EmptyMask: every label is masked");
    return loss / count;
}

std::vector<double> Model::logits(const Graph& g) const {
    const PromptedFeatures prompted = prompt_apply(g.x, g, prompt);
    const Tensor2 z = backbone_forward(gin, backbone, g, prompted.x_star);
    const Tensor2 z_g = readout(z, pooling);
    const Tensor2 out = head_forward(head_cfg, head, z_g);
    return {out.data().begin(), out.data().end()};
}

EvalResult evaluate_model(const Model& model, const Dataset& ds, std::span<const int> indices) {
    if (indices.empty()) throw ContractError("evaluate_model: no indices");
    const int T = ds.num_tasks;
    std::vector<std::vector<double>> scores(static_cast<std::size_t>(T));
    std::vector<std::vector<std::uint8_t>> labels(static_cast<std::size_t>(T));
    for (int i : indices) {
        const Graph& g = ds.graphs[static_cast<std::size_t>(i)];
        const auto out = model.logits(g);
        for (int t = 0; t < T; ++t) {
            if (!g.y_mask[static_cast<std::size_t>(t)]) continue;
            scores[t].push_back(out[static_cast<std::size_t>(t)]);
            labels[t].push_back(g.y[static_cast<std::size_t>(t)] > 0.5 ? 1 : 0);
        }
    }
    EvalResult res;
    double sum = 0.0;
    for (int t = 0; t < T; ++t) {
        try {
            const double auc = roc_auc(scores[t], labels[t]);
            res.per_task_auc.push_back(auc);
            sum += auc;
            ++res.tasks_used;
        } catch (const MetricError&) {
            res.per_task_auc.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    if (res.tasks_used == 0) {
        throw MetricError("evaluate_model: every task has a single class in this subset");
    }
    res.mean_auc = sum / res.tasks_used;
    return res;
}

TrainResult tune_run(const TuneConfig& cfg, const Checkpoint& checkpoint, const Dataset& ds,
                     const SplitSpec& split_in) {
    if (checkpoint.config.input_dim != ds.feature_dim) {
        throw ConfigError("tune_run: checkpoint input dim " +
                          std::to_string(checkpoint.config.input_dim) + " != dataset dim " +
                          std::to_string(ds.feature_dim));
    }
    const auto t_start = std::chrono::steady_clock::now();

    SplitSpec split = split_in;
    if (cfg.shots > 0) split = few_shot_sample(split_in, cfg.shots, cfg.seed);

    const bool fine_tune = cfg.variant == PromptVariant::None;
    Rng rng(cfg.seed);

    Model model;
    model.gin = checkpoint.config;
    model.backbone = checkpoint.to_params(fine_tune ? Role::Tunable : Role::Frozen);
    model.pooling = cfg.pooling;
    {
        Rng prng = rng.child("prompt-init");
        model.prompt = init_prompt_params(cfg.variant, cfg.k, ds.feature_dim, cfg.pool_ratio,
                                          cfg.hops, prng);
        model.prompt.overlap_normalize = cfg.overlap_normalize;
        model.prompt.column_softmax = cfg.column_softmax;
    }
    {
        Rng hrng = rng.child("head-init");
        model.head_cfg = HeadConfig{cfg.head_layers, checkpoint.config.hidden_dim, ds.num_tasks};
        model.head = init_head_params(model.head_cfg, hrng);
    }

    TrainResult result;
    result.params_backbone = model.backbone.count_all();
    result.params_tuned = prompt_param_count(model.prompt) + model.head.count_all() +
                          (fine_tune ? model.backbone.count_all() : 0);

    Adam adam({.lr = cfg.lr, .weight_decay = cfg.weight_decay});

    auto validation_auc = [&]() {
        if (split.valid.empty()) return std::numeric_limits<double>::quiet_NaN();
        try {
            return evaluate_model(model, ds, split.valid).mean_auc;
        } catch (const MetricError&) {
            return 0.5;
        }
    };

    Model best = model;
    double best_auc = -1.0;

    auto consider = [&](int epoch) {
        const double auc = validation_auc();
        const double key = std::isnan(auc) ? 0.5 : auc;
        if (key > best_auc) {
            best_auc = key;
            best = model;
            result.best_epoch = epoch;
            result.best_valid_auc = auc;
        }
    };
    consider(0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        ParamGroup all;
        all.absorb(model.backbone);
        all.absorb(model.prompt.params);
        all.absorb(model.head);

        Tape tape;
        auto leaves = register_params(tape, all);

        std::optional<Value> task_total;
        std::optional<Value> aux_total;
        int used = 0;
        for (int gi : split.train) {
            const Graph& g = ds.graphs[static_cast<std::size_t>(gi)];
            bool any_label = false;
            for (auto m : g.y_mask) any_label |= (m != 0);
            if (!any_label) continue;

            TapedPrompt prompted = prompt_apply(tape, g, tape.constant(g.x), model.prompt, leaves);
            Value agg = tape.constant(gin_aggregation(g, model.gin.epsilon));
            Value z = backbone_forward(tape, model.gin, leaves, agg, prompted.x_star);
            Value z_g = readout(tape, z, cfg.pooling);
            Value logits = head_forward(tape, model.head_cfg, leaves, z_g);

            Tensor2 y(1, ds.num_tasks);
            Tensor2 mask(1, ds.num_tasks);
            for (int t = 0; t < ds.num_tasks; ++t) {
                y.at(0, t) = g.y[static_cast<std::size_t>(t)];
                mask.at(0, t) = g.y_mask[static_cast<std::size_t>(t)] ? 1.0 : 0.0;
            }
            Value loss = tape.bce_with_logits_masked(logits, y, mask);
            task_total = task_total ? tape.add(*task_total, loss) : loss;
            ++used;

            if (cfg.aux_lp_lambda > 0.0 && cfg.variant == PromptVariant::SuptSoft &&
                prompted.normalized_scores) {
                Value lp = aux_link_loss(tape, g, *prompted.normalized_scores);
                aux_total = aux_total ? tape.add(*aux_total, lp) : lp;
            }
        }
        if (!task_total) throw ContractError("tune_run: no graph with an unmasked label in train");

        Value total = tape.scale(*task_total, 1.0 / used);
        if (aux_total) {
            total = tape.add(total, tape.scale(*aux_total, cfg.aux_lp_lambda / used));
        }
        const double lv = tape.value(total).scalar();
        if (!std::isfinite(lv)) {
            throw NumericError("tune_run: loss diverged at epoch " + std::to_string(epoch));
        }
        result.loss_curve.push_back(lv);

        Gradients grads = tape.backward(total);
        adam.step(all, grads);

        // Copy updated tensors back into the model groups.
        for (auto& e : model.backbone.entries())
            if (e.role == Role::Tunable) e.tensor = all.tensor(e.name);
        for (auto& e : model.prompt.params.entries()) e.tensor = all.tensor(e.name);
        for (auto& e : model.head.entries()) e.tensor = all.tensor(e.name);

        consider(epoch + 1);
    }

    result.model = best;
    if (!split.test.empty()) {
        try {
            result.test_auc_at_best_valid = evaluate_model(best, ds, split.test).mean_auc;
        } catch (const MetricError&) {
            result.test_auc_at_best_valid = std::numeric_limits<double>::quiet_NaN();
        }
    } else {
        result.test_auc_at_best_valid = std::numeric_limits<double>::quiet_NaN();
    }

    result.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    return result;
}

SweepSummary seed_sweep(const TuneConfig& tmpl, const std::vector<std::uint64_t>& seeds,
                        const Checkpoint& checkpoint, const Dataset& ds, const SplitSpec& split,
                        int workers, bool allow_partial) {
    if (seeds.empty()) throw ContractError("seed_sweep: need at least one seed");
    workers = std::max(1, workers);

    SweepSummary summary;
    summary.rows.resize(seeds.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= seeds.size()) return;
            SweepRow& row = summary.rows[i];
            row.dataset = ds.name;
            row.pretrain = checkpoint.pretrain_tag;
            row.cfg = tmpl;
            row.cfg.seed = seeds[i];
            try {
                row.result = tune_run(row.cfg, checkpoint, ds, split);
            } catch (const std::exception& e) {
                row.error = std::string("seed ") + std::to_string(seeds[i]) + ": " + e.what();
            }
        }
    };
    if (workers == 1 || seeds.size() == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    double sum = 0.0, sum2 = 0.0;
    int ok = 0;
    for (const auto& row : summary.rows) {
        if (!row.result) {
            ++summary.failures;
            if (!allow_partial) throw NumericError("seed_sweep: " + row.error);
            continue;
        }
        const double auc = row.result->test_auc_at_best_valid;
        sum += auc;
        sum2 += auc * auc;
        ++ok;
    }
    if (ok > 0) {
        summary.mean_test_auc = sum / ok;
        if (ok > 1) {
            const double var = (sum2 - sum * sum / ok) / (ok - 1);
            summary.stddev_test_auc = std::sqrt(std::max(0.0, var));
        }
    }
    return summary;
}

std::function<Value(Tape&, const ParamGroup&)> make_end_to_end_program(
    GinConfig gin, PromptParams prompt_meta, HeadConfig head_cfg, ReadoutKind pooling, Graph g,
    double aux_lambda) {
    prompt_meta.params = ParamGroup{};  // tensors come from the program's ParamGroup
    return [gin, prompt_meta, head_cfg, pooling, g, aux_lambda](Tape& tape,
                                                                const ParamGroup& params) {
        auto leaves = register_params(tape, params);
        TapedPrompt prompted = prompt_apply(tape, g, tape.constant(g.x), prompt_meta, leaves);
        Value agg = tape.constant(gin_aggregation(g, gin.epsilon));
        Value z = backbone_forward(tape, gin, leaves, agg, prompted.x_star);
        Value logits = head_forward(tape, head_cfg, leaves, readout(tape, z, pooling));

        const int T = static_cast<int>(g.y.size());
        Tensor2 y(1, T);
        Tensor2 mask(1, T);
        for (int t = 0; t < T; ++t) {
            y.at(0, t) = g.y[static_cast<std::size_t>(t)];
            mask.at(0, t) = g.y_mask[static_cast<std::size_t>(t)] ? 1.0 : 0.0;
        }
        Value loss = tape.bce_with_logits_masked(logits, y, mask);
        if (aux_lambda > 0.0 && prompted.normalized_scores &&
            prompt_meta.variant == PromptVariant::SuptSoft) {
            loss = tape.add(loss, tape.scale(aux_link_loss(tape, g, *prompted.normalized_scores),
                                             aux_lambda));
        }
        return loss;
    };
}

std::string sweep_csv_header() {
    return "dataset,pretrain,variant,k,r,m,seed,shots,valid_auc,test_auc,params_tuned,wall_ms";
}

std::string sweep_csv_row(const SweepRow& row) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os << row.dataset << ',' << row.pretrain << ',' << to_string(row.cfg.variant) << ','
       << row.cfg.k << ',';
    os.precision(2);
    os << row.cfg.pool_ratio << ',' << row.cfg.hops << ',' << row.cfg.seed << ','
       << (row.cfg.shots > 0 ? std::to_string(row.cfg.shots) : std::string("full")) << ',';
    os.precision(6);
    if (row.result) {
        os << row.result->best_valid_auc << ',' << row.result->test_auc_at_best_valid << ','
           << row.result->params_tuned << ',';
        os.precision(3);
        os << row.result->wall_ms;
    } else {
        os << "nan,nan,0,0";
    }
    return os.str();
}

}  // namespace supt
