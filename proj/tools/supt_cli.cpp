// supt: command-line front end for the graph prompt-tuning laboratory.
//
// One binary, eight subcommands:
//   datagen | pretrain | tune | sweep | eval | gradcheck | universality | timing
//
// Every subcommand accepts --config FILE (flat key=value lines; keys mirror the
// long flag names, unknown keys rejected) with command-line flags taking
// precedence. Every artifact embeds the merged run configuration and the tool
// version: '#'-prefixed header lines for JSONL/CSV, a "provenance" object in
// the checkpoint manifest and JSON reports.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure,
// 5 acceptance failure (a requested check did not pass).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "supt/backbone.hpp"
#include "supt/checkpoint.hpp"
#include "supt/errors.hpp"
#include "supt/graph.hpp"
#include "supt/metrics.hpp"
#include "supt/optim.hpp"
#include "supt/pretrain.hpp"
#include "supt/prompt.hpp"
#include "supt/theory.hpp"
#include "supt/tune.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Reproducibility header: tool identity followed by the merged run config in
// registration order.
KeyValues provenance(const std::string& command, KeyValues config) {
    KeyValues out{{"tool", "supt"}, {"version", kVersion}, {"command", command}};
    out.insert(out.end(), config.begin(), config.end());
    return out;
}

std::vector<std::string> header_lines(const KeyValues& kv) {
    std::vector<std::string> lines;
    lines.reserve(kv.size());
    for (const auto& [k, v] : kv) lines.push_back(k + "=" + v);
    return lines;
}

// Opens `path` for writing, or returns stdout when path is empty.
class OutputStream {
public:
    explicit OutputStream(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw supt::DataError("cannot write output file: " + path);
        }
    }
    std::ostream& get() { return file_.is_open() ? file_ : std::cout; }
    void finish(const std::string& path) {
        if (file_.is_open()) {
            file_.flush();
            if (!file_) throw supt::DataError("write failure on output file: " + path);
        }
    }

private:
    std::ofstream file_;
};

void write_csv_header(std::ostream& os, const KeyValues& kv) {
    for (const auto& line : header_lines(kv)) os << "# " << line << "\n";
}

supt::Graph random_er_graph(supt::Rng& rng, int n, int d, double edge_prob) {
    supt::Graph g;
    g.num_nodes = n;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (rng.uniform() < edge_prob) g.edges.emplace_back(i, j);
        }
    }
    g.x = supt::Tensor2::random_uniform(n, d, -1.0, 1.0, rng);
    return g;
}

// Shared flat-key=value config handling for a subcommand. The file is merged
// into the argument list in main() before parsing; this only registers the
// option so it appears in --help and is accepted.
void enable_config(CLI::App* cmd) {
    static std::string sink;
    cmd->add_option("--config", sink,
                    "flat key=value config file; keys mirror the long flag names, flags "
                    "override file values");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Reads the config file named by --config (if any) and appends --key=value
// tokens for every key not already given on the command line, so flags keep
// precedence. Keys are validated against the subcommand's options.
std::vector<std::string> merge_config_file(const std::vector<std::string>& args,
                                           const CLI::App& app) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
    }
    if (path.empty()) return args;

    const CLI::App* sub = nullptr;
    for (const auto& a : args) {
        if (!a.empty() && a[0] != '-') {
            for (const auto* s : app.get_subcommands(nullptr)) {
                if (s->get_name() == a) sub = s;
            }
            break;
        }
    }

    std::ifstream file(path);
    if (!file) throw supt::ConfigError("cannot open config file: " + path);
    std::vector<std::string> out = args;
    std::string line;
    int line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw supt::ConfigError(path + ":" + std::to_string(line_no) +
                                    ": expected key=value, got \"" + s + "\"");
        }
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const std::string flag = "--" + key;
        if (sub != nullptr && sub->get_option_no_throw(flag) == nullptr) {
            throw supt::ConfigError(path + ":" + std::to_string(line_no) + ": unknown key \"" +
                                    key + "\"");
        }
        const bool given_on_command_line =
            std::any_of(args.begin(), args.end(), [&](const std::string& a) {
                return a == flag || a.rfind(flag + "=", 0) == 0;
            });
        if (!given_on_command_line) out.push_back(flag + "=" + value);
    }
    return out;
}

// ---------------------------------------------------------------- datagen ---

struct DatagenOpts {
    std::string out;
    std::string name = "synth-motif";
    std::uint64_t seed = 0;
    int num_graphs = 200;
    int n_min = 5;
    int n_max = 12;
    int feature_dim = 8;
    int num_tasks = 2;
};

void add_datagen(CLI::App& app, DatagenOpts& o, int& rc) {
    auto* cmd = app.add_subcommand("datagen", "generate a synthetic motif dataset (JSONL)");
    enable_config(cmd);
    cmd->add_option("--out", o.out, "output JSONL path")->required();
    cmd->add_option("--name", o.name, "dataset name recorded in the file");
    cmd->add_option("--seed", o.seed, "generator seed");
    cmd->add_option("--num-graphs", o.num_graphs, "number of graphs");
    cmd->add_option("--n-min", o.n_min, "minimum nodes per graph");
    cmd->add_option("--n-max", o.n_max, "maximum nodes per graph");
    cmd->add_option("--feature-dim", o.feature_dim, "node feature width d");
    cmd->add_option("--num-tasks", o.num_tasks, "binary tasks (motifs cycle triangle/4-cycle/star)");
    cmd->callback([&o, &rc] {
        supt::Dataset ds = supt::synth_motif_dataset(o.seed, o.num_graphs, o.n_min, o.n_max,
                                                     o.feature_dim, o.num_tasks);
        ds.name = o.name;
        const KeyValues kv = provenance(
            "datagen", {{"out", o.out},
                        {"name", o.name},
                        {"seed", std::to_string(o.seed)},
                        {"num-graphs", std::to_string(o.num_graphs)},
                        {"n-min", std::to_string(o.n_min)},
                        {"n-max", std::to_string(o.n_max)},
                        {"feature-dim", std::to_string(o.feature_dim)},
                        {"num-tasks", std::to_string(o.num_tasks)}});
        supt::save_dataset_jsonl(ds, o.out, header_lines(kv));
        std::cout << "wrote " << ds.graphs.size() << " graphs (d=" << ds.feature_dim
                  << ", T=" << ds.num_tasks << ") to " << o.out << "\n";
        rc = 0;
    });
}

// --------------------------------------------------------------- pretrain ---

struct PretrainOpts {
    std::string data;
    std::string out;
    std::string task = "edgepred";
    int epochs = 50;
    double lr = 1e-3;
    double weight_decay = 0.0;
    double mask_fraction = 0.15;
    double negative_ratio = 1.0;
    std::uint64_t seed = 0;
    int layers = 5;
    int hidden_dim = 300;
    double epsilon = 0.0;
    bool mlp_per_layer = false;
};

void add_pretrain(CLI::App& app, PretrainOpts& o, int& rc) {
    auto* cmd = app.add_subcommand("pretrain", "pre-train a GIN backbone, write a checkpoint");
    enable_config(cmd);
    cmd->add_option("--data", o.data, "input dataset (JSONL)")->required();
    cmd->add_option("--out", o.out, "output checkpoint path")->required();
    cmd->add_option("--task", o.task, "edgepred | attrmask | infomax");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--weight-decay", o.weight_decay, "L2 coefficient folded into the gradient");
    cmd->add_option("--mask-fraction", o.mask_fraction, "attrmask: fraction of rows masked");
    cmd->add_option("--negative-ratio", o.negative_ratio, "edgepred: negatives per positive edge");
    cmd->add_option("--seed", o.seed, "training seed");
    cmd->add_option("--layers", o.layers, "GIN layers L");
    cmd->add_option("--hidden-dim", o.hidden_dim, "GIN hidden width h");
    cmd->add_option("--epsilon", o.epsilon, "GIN epsilon");
    cmd->add_flag("--mlp-per-layer", o.mlp_per_layer, "two-linear MLP per layer (2h intermediate)");
    cmd->callback([&o, &rc] {
        const supt::Dataset ds = supt::load_dataset_jsonl(o.data);
        supt::PretrainConfig cfg;
        cfg.task = supt::pretrain_task_from_string(o.task);
        cfg.epochs = o.epochs;
        cfg.lr = o.lr;
        cfg.weight_decay = o.weight_decay;
        cfg.mask_fraction = o.mask_fraction;
        cfg.negative_ratio = o.negative_ratio;
        cfg.seed = o.seed;
        const supt::GinConfig gin{.num_layers = o.layers,
                                  .hidden_dim = o.hidden_dim,
                                  .input_dim = ds.feature_dim,
                                  .epsilon = o.epsilon,
                                  .mlp_per_layer = o.mlp_per_layer};
        supt::PretrainResult res = supt::pretrain_run(cfg, gin, ds);
        const KeyValues kv = provenance(
            "pretrain", {{"data", o.data},
                         {"out", o.out},
                         {"task", o.task},
                         {"epochs", std::to_string(o.epochs)},
                         {"lr", fmt_double(o.lr)},
                         {"weight-decay", fmt_double(o.weight_decay)},
                         {"mask-fraction", fmt_double(o.mask_fraction)},
                         {"negative-ratio", fmt_double(o.negative_ratio)},
                         {"seed", std::to_string(o.seed)},
                         {"layers", std::to_string(o.layers)},
                         {"hidden-dim", std::to_string(o.hidden_dim)},
                         {"epsilon", fmt_double(o.epsilon)},
                         {"mlp-per-layer", o.mlp_per_layer ? "true" : "false"}});
        for (const auto& [k, v] : kv) res.checkpoint.provenance[k] = v;
        supt::save_checkpoint(res.checkpoint, o.out);
        std::cout << "pretrained " << o.task << " on " << ds.graphs.size() << " graphs; "
                  << "final loss "
                  << (res.loss_curve.empty() ? 0.0 : res.loss_curve.back()) << "; wrote "
                  << o.out << "\n";
        if (res.skipped_graphs > 0) {
            std::cerr << "supt pretrain: warning: " << res.skipped_graphs
                      << " graphs unusable for this task were skipped\n";
        }
        rc = 0;
    });
}

// ------------------------------------------------------------- tune/sweep ---

struct TuneOpts {
    std::string data;
    std::string checkpoint;
    std::string out;  // empty = stdout
    std::string prompt = "gpf";
    int k = 1;
    double r = 0.4;
    int m = 1;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    int head_layers = 1;
    std::string pooling = "sum";
    int epochs = 50;
    int shots = 0;
    std::uint64_t seed = 0;
    double aux_lp_lambda = 0.0;
    bool overlap_normalize = false;
    bool column_softmax = false;
    bool grid_mode = false;
    double train_ratio = 0.8;
    double valid_ratio = 0.1;
    double test_ratio = 0.1;
    std::uint64_t split_seed = 0;
    // sweep only
    int seeds = 10;
    std::uint64_t seed_base = 0;
    int workers = 0;  // 0 = hardware parallelism
    bool allow_partial = false;
};

void add_tune_options(CLI::App* cmd, TuneOpts& o) {
    cmd->add_option("--data", o.data, "input dataset (JSONL)")->required();
    cmd->add_option("--checkpoint", o.checkpoint, "frozen backbone checkpoint")->required();
    cmd->add_option("--out", o.out, "output CSV path (default: stdout)");
    cmd->add_option("--prompt", o.prompt,
                    "ft | gpf | gpf-plus | supt-soft | supt-hard (grids: prompt basis count k in "
                    "{1..5} for SUPT and {5,10,20} for GPF-plus)");
    cmd->add_option("--k", o.k, "prompt basis count (grid {1,2,3,4,5} SUPT, {5,10,20} GPF-plus)");
    cmd->add_option("--r", o.r, "SUPT-hard pool ratio (grid {0.2,0.4,0.6,0.8})");
    cmd->add_option("--m", o.m, "SUPT propagation hops (grid {1,2,3})");
    cmd->add_option("--lr", o.lr, "Adam learning rate (grid {1e-4,5e-4,1e-3,5e-3})");
    cmd->add_option("--weight-decay", o.weight_decay, "L2 coefficient (grid {0,1e-5,1e-4})");
    cmd->add_option("--head-layers", o.head_layers, "projection head layers (grid {1,2,3,4})");
    cmd->add_option("--pooling", o.pooling, "graph readout: sum | mean");
    cmd->add_option("--epochs", o.epochs, "tuning epochs");
    cmd->add_option("--shots", o.shots, "few-shot train size (0 = full-shot)");
    cmd->add_option("--aux-lp-lambda", o.aux_lp_lambda, "auxiliary link-reconstruction weight");
    cmd->add_flag("--overlap-normalize", o.overlap_normalize,
                  "SUPT-hard: average overlapping basis contributions");
    cmd->add_flag("--column-softmax", o.column_softmax,
                  "SUPT-soft: normalize scores per column instead of per row");
    cmd->add_flag("--grid-mode", o.grid_mode, "reject hyperparameters outside the search grids");
    cmd->add_option("--train-ratio", o.train_ratio, "train split fraction");
    cmd->add_option("--valid-ratio", o.valid_ratio, "validation split fraction");
    cmd->add_option("--test-ratio", o.test_ratio, "test split fraction");
    cmd->add_option("--split-seed", o.split_seed, "split shuffling seed");
}

supt::TuneConfig to_tune_config(const TuneOpts& o, std::uint64_t seed) {
    supt::TuneConfig cfg;
    cfg.variant = supt::prompt_variant_from_string(o.prompt == "ft" ? "none" : o.prompt);
    cfg.k = o.k;
    cfg.pool_ratio = o.r;
    cfg.hops = o.m;
    cfg.lr = o.lr;
    cfg.weight_decay = o.weight_decay;
    cfg.head_layers = o.head_layers;
    if (o.pooling == "sum") {
        cfg.pooling = supt::ReadoutKind::Sum;
    } else if (o.pooling == "mean") {
        cfg.pooling = supt::ReadoutKind::Mean;
    } else {
        throw supt::ConfigError("pooling must be sum or mean, got \"" + o.pooling + "\"");
    }
    cfg.epochs = o.epochs;
    cfg.shots = o.shots;
    cfg.seed = seed;
    cfg.aux_lp_lambda = o.aux_lp_lambda;
    cfg.overlap_normalize = o.overlap_normalize;
    cfg.column_softmax = o.column_softmax;
    cfg.grid_mode = o.grid_mode;
    return cfg;
}

KeyValues tune_keyvalues(const TuneOpts& o) {
    return {{"data", o.data},
            {"checkpoint", o.checkpoint},
            {"out", o.out},
            {"prompt", o.prompt},
            {"k", std::to_string(o.k)},
            {"r", fmt_double(o.r)},
            {"m", std::to_string(o.m)},
            {"lr", fmt_double(o.lr)},
            {"weight-decay", fmt_double(o.weight_decay)},
            {"head-layers", std::to_string(o.head_layers)},
            {"pooling", o.pooling},
            {"epochs", std::to_string(o.epochs)},
            {"shots", std::to_string(o.shots)},
            {"aux-lp-lambda", fmt_double(o.aux_lp_lambda)},
            {"overlap-normalize", o.overlap_normalize ? "true" : "false"},
            {"column-softmax", o.column_softmax ? "true" : "false"},
            {"grid-mode", o.grid_mode ? "true" : "false"},
            {"train-ratio", fmt_double(o.train_ratio)},
            {"valid-ratio", fmt_double(o.valid_ratio)},
            {"test-ratio", fmt_double(o.test_ratio)},
            {"split-seed", std::to_string(o.split_seed)}};
}

void warn_grids(const char* cmd, const supt::TuneConfig& cfg) {
    for (const auto& w : supt::check_grids(cfg)) {
        std::cerr << "supt " << cmd << ": warning: " << w << "\n";
    }
}

void add_tune(CLI::App& app, TuneOpts& o, int& rc) {
    auto* cmd = app.add_subcommand("tune", "tune one prompt/head against a frozen backbone");
    enable_config(cmd);
    add_tune_options(cmd, o);
    cmd->add_option("--seed", o.seed, "tuning seed");
    cmd->callback([&o, &rc] {
        const supt::Dataset ds = supt::load_dataset_jsonl(o.data);
        const supt::Checkpoint ckpt = supt::load_checkpoint(o.checkpoint);
        const supt::SplitSpec split =
            supt::split_dataset(ds, o.train_ratio, o.valid_ratio, o.test_ratio, o.split_seed);
        const supt::TuneConfig cfg = to_tune_config(o, o.seed);
        warn_grids("tune", cfg);
        const supt::TrainResult res = supt::tune_run(cfg, ckpt, ds, split);

        KeyValues kv = tune_keyvalues(o);
        kv.emplace_back("seed", std::to_string(o.seed));
        OutputStream out(o.out);
        write_csv_header(out.get(), provenance("tune", kv));
        out.get() << supt::sweep_csv_header() << "\n";
        supt::SweepRow row{ds.name, ckpt.pretrain_tag, cfg, res, ""};
        out.get() << supt::sweep_csv_row(row) << "\n";
        out.finish(o.out);
        std::cerr << "supt tune: best valid AUC " << res.best_valid_auc << " (epoch "
                  << res.best_epoch << "), test AUC " << res.test_auc_at_best_valid << ", "
                  << res.params_tuned << " tuned parameters\n";
        rc = 0;
    });
}

void add_sweep(CLI::App& app, TuneOpts& o, int& rc) {
    auto* cmd = app.add_subcommand("sweep", "run one tuning config across many seeds");
    enable_config(cmd);
    add_tune_options(cmd, o);
    cmd->add_option("--seeds", o.seeds, "number of seeds (seed-base .. seed-base+seeds-1)");
    cmd->add_option("--seed-base", o.seed_base, "first seed");
    cmd->add_option("--workers", o.workers, "worker threads (0 = available parallelism)");
    cmd->add_flag("--allow-partial", o.allow_partial, "keep going when individual seeds fail");
    cmd->callback([&o, &rc] {
        if (o.seeds < 1) throw supt::ConfigError("seeds must be >= 1");
        const supt::Dataset ds = supt::load_dataset_jsonl(o.data);
        const supt::Checkpoint ckpt = supt::load_checkpoint(o.checkpoint);
        const supt::SplitSpec split =
            supt::split_dataset(ds, o.train_ratio, o.valid_ratio, o.test_ratio, o.split_seed);
        const supt::TuneConfig tmpl = to_tune_config(o, o.seed_base);
        warn_grids("sweep", tmpl);
        std::vector<std::uint64_t> seeds(static_cast<std::size_t>(o.seeds));
        for (int i = 0; i < o.seeds; ++i) seeds[static_cast<std::size_t>(i)] = o.seed_base + i;
        const int workers =
            o.workers > 0 ? o.workers
                          : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
        const supt::SweepSummary summary =
            supt::seed_sweep(tmpl, seeds, ckpt, ds, split, workers, o.allow_partial);

        KeyValues kv = tune_keyvalues(o);
        kv.emplace_back("seeds", std::to_string(o.seeds));
        kv.emplace_back("seed-base", std::to_string(o.seed_base));
        kv.emplace_back("workers", std::to_string(o.workers));
        kv.emplace_back("allow-partial", o.allow_partial ? "true" : "false");
        OutputStream out(o.out);
        write_csv_header(out.get(), provenance("sweep", kv));
        out.get() << supt::sweep_csv_header() << "\n";
        for (const auto& row : summary.rows) out.get() << supt::sweep_csv_row(row) << "\n";
        out.finish(o.out);
        std::cerr << "supt sweep: " << summary.rows.size() - summary.failures << "/"
                  << summary.rows.size() << " runs ok, mean test AUC " << summary.mean_test_auc
                  << " +- " << summary.stddev_test_auc << "\n";
        rc = 0;
    });
}

// ------------------------------------------------------------------- eval ---

struct EvalOpts {
    std::string in;
    std::string out;  // empty = stdout
};

void add_eval(CLI::App& app, EvalOpts& o, int& rc) {
    auto* cmd = app.add_subcommand("eval", "aggregate tune/sweep CSV rows over seeds");
    enable_config(cmd);
    cmd->add_option("--in", o.in, "input CSV from tune or sweep")->required();
    cmd->add_option("--out", o.out, "output CSV path (default: stdout)");
    cmd->callback([&o, &rc] {
        std::ifstream in(o.in);
        if (!in) throw supt::DataError("cannot open input CSV: " + o.in);
        std::string line;
        bool saw_header = false;
        // Aggregation key: everything identifying a configuration except the
        // seed. Values: test AUCs, in input order.
        std::vector<std::pair<std::string, std::vector<double>>> groups;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            if (!saw_header) {
                if (line != supt::sweep_csv_header()) {
                    throw supt::DataError("line " + std::to_string(line_no) +
                                          ": unexpected CSV header \"" + line + "\"");
                }
                saw_header = true;
                continue;
            }
            std::vector<std::string> fields;
            std::stringstream ss(line);
            std::string f;
            while (std::getline(ss, f, ',')) fields.push_back(f);
            if (fields.size() != 12) {
                throw supt::DataError("line " + std::to_string(line_no) + ": expected 12 fields, got " +
                                      std::to_string(fields.size()));
            }
            if (fields[9] == "nan" || fields[9].empty()) continue;  // failed run
            const std::string key = fields[0] + "," + fields[1] + "," + fields[2] + "," +
                                    fields[3] + "," + fields[4] + "," + fields[5] + "," +
                                    fields[7];
            double auc = 0.0;
            try {
                auc = std::stod(fields[9]);
            } catch (const std::exception&) {
                throw supt::DataError("line " + std::to_string(line_no) +
                                      ": test_auc is not a number: \"" + fields[9] + "\"");
            }
            auto it = std::find_if(groups.begin(), groups.end(),
                                   [&](const auto& g) { return g.first == key; });
            if (it == groups.end()) {
                groups.emplace_back(key, std::vector<double>{auc});
            } else {
                it->second.push_back(auc);
            }
        }
        if (!saw_header) throw supt::DataError("input CSV has no header line: " + o.in);

        OutputStream out(o.out);
        write_csv_header(out.get(), provenance("eval", {{"in", o.in}, {"out", o.out}}));
        out.get() << "dataset,pretrain,variant,k,r,m,shots,n,mean_test_auc,stddev_test_auc\n";
        out.get().setf(std::ios::fixed);
        out.get().precision(6);
        for (const auto& [key, aucs] : groups) {
            double mean = 0.0;
            for (double a : aucs) mean += a;
            mean /= static_cast<double>(aucs.size());
            double var = 0.0;
            for (double a : aucs) var += (a - mean) * (a - mean);
            const double stddev =
                aucs.size() > 1 ? std::sqrt(var / static_cast<double>(aucs.size() - 1)) : 0.0;
            out.get() << key << ',' << aucs.size() << ',' << mean << ',' << stddev << "\n";
        }
        out.finish(o.out);
        rc = 0;
    });
}

// -------------------------------------------------------------- gradcheck ---

struct GradcheckOpts {
    int trials = 10;
    std::uint64_t seed = 0;
    double tol = 1e-4;
};

void add_gradcheck(CLI::App& app, GradcheckOpts& o, int& rc) {
    auto* cmd = app.add_subcommand(
        "gradcheck", "finite-difference check of end-to-end gradients for every variant");
    enable_config(cmd);
    cmd->add_option("--trials", o.trials, "random instances per variant");
    cmd->add_option("--seed", o.seed, "instance seed");
    cmd->add_option("--tol", o.tol, "max relative error allowed");
    cmd->callback([&o, &rc] {
        supt::Rng rng(o.seed);
        const supt::GinConfig gin{.num_layers = 2, .hidden_dim = 4, .input_dim = 3,
                                  .epsilon = 0.0, .mlp_per_layer = false};
        const supt::HeadConfig head_cfg{.num_layers = 2, .input_dim = 4, .num_tasks = 2};
        bool all_pass = true;
        for (auto variant :
             {supt::PromptVariant::None, supt::PromptVariant::Gpf, supt::PromptVariant::GpfPlus,
              supt::PromptVariant::SuptSoft, supt::PromptVariant::SuptHard}) {
            double worst = 0.0;
            std::string worst_param;
            bool pass = true;
            for (int t = 0; t < o.trials; ++t) {
                supt::Graph g =
                    random_er_graph(rng, 3 + static_cast<int>(rng.next() % 4), 3, 0.5);
                g.y = {1.0, 0.0};
                g.y_mask = {1, 1};
                auto prompt = supt::init_prompt_params(
                    variant, variant == supt::PromptVariant::Gpf ? 1 : 2, 3, 0.5, 1, rng);
                supt::ParamGroup params =
                    supt::init_backbone_params(gin, rng, supt::Role::Tunable);
                params.absorb(prompt.params);
                params.absorb(supt::init_head_params(head_cfg, rng));
                // Zero-initialized biases can leave a relu pre-activation exactly
                // on its kink, where no finite-difference step is valid; probe at
                // a generic point instead.
                for (auto& e : params.entries()) {
                    if (e.name.ends_with(".b")) {
                        e.tensor = supt::Tensor2::random_uniform(e.tensor.rows(),
                                                                 e.tensor.cols(), -0.1, 0.1, rng);
                    }
                }
                const double lambda = variant == supt::PromptVariant::SuptSoft ? 0.1 : 0.0;
                auto f = supt::make_end_to_end_program(gin, prompt, head_cfg,
                                                       supt::ReadoutKind::Sum, g, lambda);
                supt::GradCheckReport r;
                // A kink within the probe step corrupts the central difference
                // but not the gradient; shrinking the step separates the cases.
                for (double step : {1e-5, 1e-6, 1e-7}) {
                    r = supt::finite_diff_check(f, params, step, o.tol);
                    if (r.pass) break;
                }
                if (r.max_rel_err > worst) {
                    worst = r.max_rel_err;
                    worst_param = r.worst_param;
                }
                pass = pass && r.pass;
            }
            std::cout << (pass ? "PASS" : "FAIL") << "  " << supt::to_string(variant) << ": "
                      << o.trials << " trials, worst rel err " << worst;
            if (!worst_param.empty()) std::cout << " at " << worst_param;
            std::cout << "\n";
            all_pass = all_pass && pass;
        }
        rc = all_pass ? 0 : 5;
    });
}

// ----------------------------------------------------------- universality ---

struct UniversalityOpts {
    int trials = 100;
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    double tol = 1e-9;
    int layers = 1;
    bool mlp_per_layer = false;
    std::string readout = "sum";
    std::string out;  // empty = stdout
};

void add_universality(CLI::App& app, UniversalityOpts& o, int& rc) {
    auto* cmd = app.add_subcommand(
        "universality", "check the constructive subset-prompt equivalence numerically");
    enable_config(cmd);
    cmd->add_option("--trials", o.trials, "random (graph, subset, prompt) instances");
    cmd->add_option("--seed", o.seed, "instance seed");
    cmd->add_option("--epsilon", o.epsilon, "GIN epsilon (must be > -1)");
    cmd->add_option("--tol", o.tol, "embedding residual tolerance");
    cmd->add_option("--layers", o.layers, "GIN layers (the construction covers 1 only)");
    cmd->add_flag("--mlp-per-layer", o.mlp_per_layer, "MLP layers (not covered)");
    cmd->add_option("--readout", o.readout, "sum | mean (the construction covers sum only)");
    cmd->add_option("--out", o.out, "output JSON path (default: stdout)");
    cmd->callback([&o, &rc] {
        nlohmann::json report;
        nlohmann::json cfg;
        for (const auto& [k, v] : provenance(
                 "universality", {{"trials", std::to_string(o.trials)},
                                  {"seed", std::to_string(o.seed)},
                                  {"epsilon", fmt_double(o.epsilon)},
                                  {"tol", fmt_double(o.tol)},
                                  {"layers", std::to_string(o.layers)},
                                  {"mlp-per-layer", o.mlp_per_layer ? "true" : "false"},
                                  {"readout", o.readout},
                                  {"out", o.out}})) {
            cfg[k] = v;
        }
        report["run_config"] = cfg;

        if (o.layers != 1 || o.mlp_per_layer || o.readout != "sum") {
            report["status"] = "out-of-scope";
            report["note"] =
                "the constructive equivalence covers a single-layer linear GIN with sum "
                "readout only; nothing was checked";
            OutputStream out(o.out);
            out.get() << report.dump(2) << "\n";
            out.finish(o.out);
            rc = 0;
            return;
        }

        supt::Rng rng(o.seed);
        int failures = 0;
        double max_residual = 0.0;
        const supt::GinConfig gin_tmpl{.num_layers = 1, .hidden_dim = 6, .input_dim = 4,
                                       .epsilon = o.epsilon, .mlp_per_layer = false};
        for (int t = 0; t < o.trials; ++t) {
            const int n = 2 + static_cast<int>(rng.next() % 9);
            supt::Graph g = random_er_graph(rng, n, gin_tmpl.input_dim, 0.4);
            std::vector<int> subset;
            for (int i = 0; i < n; ++i) {
                if (rng.uniform() < 0.5) subset.push_back(i);
            }
            if (subset.empty()) subset.push_back(static_cast<int>(rng.next() % n));
            const supt::Tensor2 p =
                supt::Tensor2::random_uniform(1, gin_tmpl.input_dim, -1.0, 1.0, rng);
            const auto witness = supt::universality_witness(g, subset, o.epsilon, p);
            supt::Rng brng = rng.child("backbone", t);
            const supt::ParamGroup backbone =
                supt::init_backbone_params(gin_tmpl, brng, supt::Role::Frozen);
            const auto check =
                supt::universality_check(g, witness, gin_tmpl, backbone, o.tol);
            max_residual = std::max(max_residual, check.residual);
            if (!check.pass) ++failures;
        }
        report["status"] = "checked";
        report["trials"] = o.trials;
        report["failures"] = failures;
        report["max_residual"] = max_residual;
        OutputStream out(o.out);
        out.get() << report.dump(2) << "\n";
        out.finish(o.out);
        rc = failures == 0 ? 0 : 5;
    });
}

// ----------------------------------------------------------------- timing ---

struct TimingOpts {
    int n = 50;
    int feature_dim = 8;
    double edge_prob = 0.15;
    int reps = 200;
    double r = 0.6;
    std::uint64_t seed = 0;
    std::string out;  // empty = stdout
};

void add_timing(CLI::App& app, TimingOpts& o, int& rc) {
    auto* cmd = app.add_subcommand("timing", "wall-clock cost of one prompt application");
    enable_config(cmd);
    cmd->add_option("--n", o.n, "graph size (nodes)");
    cmd->add_option("--feature-dim", o.feature_dim, "feature width d");
    cmd->add_option("--edge-prob", o.edge_prob, "edge probability of the probe graph");
    cmd->add_option("--reps", o.reps, "repetitions per variant");
    cmd->add_option("--r", o.r, "SUPT-hard pool ratio");
    cmd->add_option("--seed", o.seed, "probe graph seed");
    cmd->add_option("--out", o.out, "output CSV path (default: stdout)");
    cmd->callback([&o, &rc] {
        supt::Rng rng(o.seed);
        const supt::Graph g = random_er_graph(rng, o.n, o.feature_dim, o.edge_prob);
        OutputStream out(o.out);
        write_csv_header(out.get(),
                         provenance("timing", {{"n", std::to_string(o.n)},
                                               {"feature-dim", std::to_string(o.feature_dim)},
                                               {"edge-prob", fmt_double(o.edge_prob)},
                                               {"reps", std::to_string(o.reps)},
                                               {"r", fmt_double(o.r)},
                                               {"seed", std::to_string(o.seed)},
                                               {"out", o.out}}));
        out.get() << "variant,k,mean_seconds\n";
        const std::vector<std::pair<supt::PromptVariant, int>> probes = {
            {supt::PromptVariant::Gpf, 1},      {supt::PromptVariant::GpfPlus, 1},
            {supt::PromptVariant::GpfPlus, 5},  {supt::PromptVariant::SuptSoft, 1},
            {supt::PromptVariant::SuptSoft, 5}, {supt::PromptVariant::SuptHard, 1},
            {supt::PromptVariant::SuptHard, 5}};
        out.get().setf(std::ios::scientific);
        out.get().precision(6);
        for (const auto& [variant, k] : probes) {
            supt::Rng prng = rng.child(supt::to_string(variant), k);
            const auto pp =
                supt::init_prompt_params(variant, k, o.feature_dim, o.r, 1, prng);
            const double sec = supt::timing_probe(pp, g, o.reps);
            out.get() << supt::to_string(variant) << ',' << k << ',' << sec << "\n";
        }
        out.finish(o.out);
        rc = 0;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"supt: desk-scale graph prompt-tuning laboratory"};
    app.set_version_flag("--version", std::string("supt ") + kVersion);
    app.require_subcommand(1);

    int rc = 0;
    DatagenOpts datagen_opts;
    PretrainOpts pretrain_opts;
    TuneOpts tune_opts;
    TuneOpts sweep_opts;
    EvalOpts eval_opts;
    GradcheckOpts gradcheck_opts;
    UniversalityOpts universality_opts;
    TimingOpts timing_opts;
    add_datagen(app, datagen_opts, rc);
    add_pretrain(app, pretrain_opts, rc);
    add_tune(app, tune_opts, rc);
    add_sweep(app, sweep_opts, rc);
    add_eval(app, eval_opts, rc);
    add_gradcheck(app, gradcheck_opts, rc);
    add_universality(app, universality_opts, rc);
    add_timing(app, timing_opts, rc);

    const char* cmd = argc > 1 ? argv[1] : "";
    try {
        app.name("supt");
        std::vector<std::string> args(argv + 1, argv + argc);
        args = merge_config_file(args, app);
        std::reverse(args.begin(), args.end());  // the vector overload wants them reversed
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return 2;
    } catch (const supt::ConfigError& e) {
        std::cerr << "supt " << cmd << ": config error: " << e.what() << "\n";
        return 2;
    } catch (const supt::DataError& e) {
        std::cerr << "supt " << cmd << ": data error: " << e.what() << "\n";
        return 3;
    } catch (const supt::Error& e) {
        std::cerr << "supt " << cmd << ": numeric failure: " << e.what() << "\n";
        return 4;
    }
    return rc;
}
