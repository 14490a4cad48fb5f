// Python bindings for the supt core: graph/dataset types, prompt operations,
// pre-training and tuning entry points, metrics, and the constructive
// universality check. Matrices cross the boundary as numpy float64 arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "supt/backbone.hpp"
#include "supt/checkpoint.hpp"
#include "supt/errors.hpp"
#include "supt/graph.hpp"
#include "supt/metrics.hpp"
#include "supt/pretrain.hpp"
#include "supt/prompt.hpp"
#include "supt/rng.hpp"
#include "supt/theory.hpp"
#include "supt/tune.hpp"

namespace py = pybind11;
using namespace supt;

namespace {

py::array_t<double> to_array(const Tensor2& t) {
    py::array_t<double> out({t.rows(), t.cols()});
    std::memcpy(out.mutable_data(), t.data().data(),
                static_cast<std::size_t>(t.size()) * sizeof(double));
    return out;
}

Tensor2 to_tensor(const py::array& arr) {
    auto a = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(arr);
    if (!a || a.ndim() != 2) throw ShapeError("expected a 2-d float array");
    Tensor2 t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::memcpy(t.data().data(), a.data(),
                static_cast<std::size_t>(t.size()) * sizeof(double));
    return t;
}

// SUPT prompt configuration assembled from plain arrays.
PromptParams make_supt_params(PromptVariant variant, const py::array& b, const py::array& w,
                              int hops, double pool_ratio, bool overlap_normalize,
                              bool column_softmax) {
    PromptParams pp;
    pp.variant = variant;
    Tensor2 bt = to_tensor(b);
    pp.k = bt.rows();
    pp.hops = hops;
    pp.pool_ratio = pool_ratio;
    pp.overlap_normalize = overlap_normalize;
    pp.column_softmax = column_softmax;
    pp.params.add("prompt.b", std::move(bt), Role::Tunable);
    pp.params.add("prompt.w", to_tensor(w), Role::Tunable);
    return pp;
}

void register_errors(py::module_& m) {
    static py::exception<Error> base(m, "SuptError");
    py::register_exception<ShapeError>(m, "SuptShapeError", base.ptr());
    py::register_exception<ContractError>(m, "SuptContractError", base.ptr());
    py::register_exception<DataError>(m, "SuptDataError", base.ptr());
    py::register_exception<ConfigError>(m, "SuptConfigError", base.ptr());
    py::register_exception<NumericError>(m, "SuptNumericError", base.ptr());
    py::register_exception<MetricError>(m, "SuptMetricError", base.ptr());
}

}  // namespace

PYBIND11_MODULE(_supt, m) {
    m.doc() = "desk-scale graph prompt-tuning laboratory (C++ core)";
    m.attr("__version__") = "0.1.0";
    register_errors(m);

    // ----------------------------------------------------------- graphs ---
    py::class_<Graph>(m, "Graph")
        .def(py::init([](int num_nodes, std::vector<std::pair<int, int>> edges, py::array x,
                         std::vector<double> y, std::vector<std::uint8_t> y_mask) {
                 Graph g;
                 g.num_nodes = num_nodes;
                 g.edges = std::move(edges);
                 g.x = to_tensor(x);
                 g.y = std::move(y);
                 g.y_mask = std::move(y_mask);
                 validate_graph(g);
                 return g;
             }),
             py::arg("num_nodes"), py::arg("edges"), py::arg("x"),
             py::arg("y") = std::vector<double>{},
             py::arg("y_mask") = std::vector<std::uint8_t>{})
        .def_readonly("num_nodes", &Graph::num_nodes)
        .def_readonly("edges", &Graph::edges)
        .def_property_readonly("x", [](const Graph& g) { return to_array(g.x); })
        .def_readonly("y", &Graph::y)
        .def_readonly("y_mask", &Graph::y_mask)
        .def("__repr__", [](const Graph& g) {
            return "Graph(num_nodes=" + std::to_string(g.num_nodes) + ", edges=" +
                   std::to_string(g.edges.size()) + ")";
        });

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("graphs", &Dataset::graphs)
        .def_readonly("num_tasks", &Dataset::num_tasks)
        .def_readonly("feature_dim", &Dataset::feature_dim)
        .def_readwrite("name", &Dataset::name)
        .def("__len__", [](const Dataset& ds) { return ds.graphs.size(); });

    py::class_<SplitSpec>(m, "SplitSpec")
        .def_readonly("train", &SplitSpec::train)
        .def_readonly("valid", &SplitSpec::valid)
        .def_readonly("test", &SplitSpec::test)
        .def_readonly("seed", &SplitSpec::seed)
        .def_readonly("has_empty_parts", &SplitSpec::has_empty_parts);

    m.def("validate_graph", &validate_graph, py::arg("graph"));
    m.def("adjacency", [](const Graph& g) { return to_array(adjacency(g)); }, py::arg("graph"),
          "raw loopless 0/1 adjacency");
    m.def("degrees", &degrees, py::arg("graph"));
    m.def(
        "normalized_adjacency",
        [](const Graph& g, int hops) { return to_array(normalized_adjacency(g, hops).s); },
        py::arg("graph"), py::arg("hops") = 1,
        "(D^-1/2 (A+I) D^-1/2)^m, materialized densely");
    m.def("load_dataset_jsonl", &load_dataset_jsonl, py::arg("path"));
    m.def("save_dataset_jsonl", &save_dataset_jsonl, py::arg("dataset"), py::arg("path"),
          py::arg("header") = std::vector<std::string>{});
    m.def("synth_motif_dataset", &synth_motif_dataset, py::arg("seed"), py::arg("num_graphs"),
          py::arg("n_min"), py::arg("n_max"), py::arg("feature_dim"), py::arg("num_tasks"),
          "random motif-labelled graphs (triangle / 4-cycle / star tasks)");
    m.def("split_dataset", &split_dataset, py::arg("dataset"), py::arg("train_ratio") = 0.8,
          py::arg("valid_ratio") = 0.1, py::arg("test_ratio") = 0.1, py::arg("seed") = 0);
    m.def("few_shot_sample", &few_shot_sample, py::arg("split"), py::arg("n"), py::arg("seed"));

    // ---------------------------------------------------------- prompts ---
    m.def(
        "gpf_apply",
        [](const py::array& x, const py::array& p) {
            return to_array(gpf_apply(to_tensor(x), to_tensor(p)));
        },
        py::arg("x"), py::arg("p"), "X + p broadcast over rows");
    m.def(
        "gpf_plus_apply",
        [](const py::array& x, const py::array& b, const py::array& a) {
            auto r = gpf_plus_apply(to_tensor(x), to_tensor(b), to_tensor(a));
            return py::make_tuple(to_array(r.x_star), to_array(r.scores.normalized));
        },
        py::arg("x"), py::arg("b"), py::arg("a"),
        "attention-weighted per-node prompt; returns (x_star, attention)");
    m.def(
        "supt_scores",
        [](const Graph& g, const py::array& x, const py::array& b, const py::array& w, int hops,
           bool column_softmax) {
            const auto pp = make_supt_params(PromptVariant::SuptSoft, b, w, hops, 0.5, false,
                                             column_softmax);
            const auto s = supt_scores(to_tensor(x), g, pp);
            return py::make_tuple(to_array(s.alpha), to_array(s.normalized));
        },
        py::arg("graph"), py::arg("x"), py::arg("b"), py::arg("w"), py::arg("hops") = 1,
        py::arg("column_softmax") = false,
        "propagated assignment scores; returns (raw, normalized)");
    m.def(
        "supt_soft_apply",
        [](const Graph& g, const py::array& x, const py::array& b, const py::array& w, int hops,
           bool column_softmax) {
            const auto pp = make_supt_params(PromptVariant::SuptSoft, b, w, hops, 0.5, false,
                                             column_softmax);
            const Tensor2 xt = to_tensor(x);
            const auto s = supt_scores(xt, g, pp);
            return to_array(supt_soft_apply(xt, s, pp.params.tensor("prompt.b")));
        },
        py::arg("graph"), py::arg("x"), py::arg("b"), py::arg("w"), py::arg("hops") = 1,
        py::arg("column_softmax") = false);
    m.def(
        "supt_hard_apply",
        [](const Graph& g, const py::array& x, const py::array& b, const py::array& w, double r,
           int hops, bool overlap_normalize) {
            const auto pp = make_supt_params(PromptVariant::SuptHard, b, w, hops, r,
                                             overlap_normalize, false);
            const Tensor2 xt = to_tensor(x);
            const auto s = supt_scores(xt, g, pp);
            const auto out = supt_hard_apply(xt, s, pp);
            return py::make_tuple(to_array(out.x_star), out.selection);
        },
        py::arg("graph"), py::arg("x"), py::arg("b"), py::arg("w"), py::arg("r") = 0.4,
        py::arg("hops") = 1, py::arg("overlap_normalize") = false,
        "top-ceil(rN) hard selection; returns (x_star, per-basis node lists)");
    m.def(
        "aux_link_loss",
        [](const Graph& g, const py::array& normalized_scores) {
            ScoreMatrix s;
            s.normalized = to_tensor(normalized_scores);
            s.alpha = s.normalized;
            return aux_link_loss(g, s);
        },
        py::arg("graph"), py::arg("normalized_scores"),
        "|| A - alpha alpha^T ||_F against the raw loopless adjacency");

    // --------------------------------------------------- backbone/tasks ---
    py::class_<GinConfig>(m, "GinConfig")
        .def(py::init([](int num_layers, int hidden_dim, int input_dim, double epsilon,
                         bool mlp_per_layer) {
                 return GinConfig{num_layers, hidden_dim, input_dim, epsilon, mlp_per_layer};
             }),
             py::arg("num_layers") = 5, py::arg("hidden_dim") = 300, py::arg("input_dim") = 8,
             py::arg("epsilon") = 0.0, py::arg("mlp_per_layer") = false)
        .def_readwrite("num_layers", &GinConfig::num_layers)
        .def_readwrite("hidden_dim", &GinConfig::hidden_dim)
        .def_readwrite("input_dim", &GinConfig::input_dim)
        .def_readwrite("epsilon", &GinConfig::epsilon)
        .def_readwrite("mlp_per_layer", &GinConfig::mlp_per_layer);

    py::class_<Checkpoint>(m, "Checkpoint")
        .def_readonly("config", &Checkpoint::config)
        .def_readonly("pretrain_tag", &Checkpoint::pretrain_tag)
        .def_readonly("seed", &Checkpoint::seed)
        .def_readonly("provenance", &Checkpoint::provenance)
        .def_property_readonly("tensor_names", [](const Checkpoint& c) {
            std::vector<std::string> names;
            for (const auto& [n, t] : c.tensors) names.push_back(n);
            return names;
        })
        .def("tensor",
             [](const Checkpoint& c, const std::string& name) { return to_array(c.tensor(name)); },
             py::arg("name"));
    m.def("save_checkpoint", &save_checkpoint, py::arg("checkpoint"), py::arg("path"));
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

    py::class_<PretrainConfig>(m, "PretrainConfig")
        .def(py::init([](const std::string& task, int epochs, double lr, double weight_decay,
                         double mask_fraction, double negative_ratio, std::uint64_t seed) {
                 PretrainConfig cfg;
                 cfg.task = pretrain_task_from_string(task);
                 cfg.epochs = epochs;
                 cfg.lr = lr;
                 cfg.weight_decay = weight_decay;
                 cfg.mask_fraction = mask_fraction;
                 cfg.negative_ratio = negative_ratio;
                 cfg.seed = seed;
                 return cfg;
             }),
             py::arg("task") = "edgepred", py::arg("epochs") = 50, py::arg("lr") = 1e-3,
             py::arg("weight_decay") = 0.0, py::arg("mask_fraction") = 0.15,
             py::arg("negative_ratio") = 1.0, py::arg("seed") = 0)
        .def_property_readonly("task",
                               [](const PretrainConfig& c) { return to_string(c.task); })
        .def_readwrite("epochs", &PretrainConfig::epochs)
        .def_readwrite("lr", &PretrainConfig::lr)
        .def_readwrite("seed", &PretrainConfig::seed);

    py::class_<PretrainResult>(m, "PretrainResult")
        .def_readonly("checkpoint", &PretrainResult::checkpoint)
        .def_readonly("loss_curve", &PretrainResult::loss_curve)
        .def_readonly("skipped_graphs", &PretrainResult::skipped_graphs);
    m.def("pretrain_run", &pretrain_run, py::arg("config"), py::arg("gin"), py::arg("dataset"),
          py::call_guard<py::gil_scoped_release>());

    // ------------------------------------------------------------- tune ---
    py::class_<TuneConfig>(m, "TuneConfig")
        .def(py::init([](const std::string& prompt, int k, double r, int m_hops, double lr,
                         double weight_decay, int head_layers, const std::string& pooling,
                         int epochs, int shots, std::uint64_t seed, double aux_lp_lambda,
                         bool overlap_normalize, bool column_softmax, bool grid_mode) {
                 TuneConfig cfg;
                 cfg.variant = prompt_variant_from_string(prompt == "ft" ? "none" : prompt);
                 cfg.k = k;
                 cfg.pool_ratio = r;
                 cfg.hops = m_hops;
                 cfg.lr = lr;
                 cfg.weight_decay = weight_decay;
                 cfg.head_layers = head_layers;
                 if (pooling == "sum") {
                     cfg.pooling = ReadoutKind::Sum;
                 } else if (pooling == "mean") {
                     cfg.pooling = ReadoutKind::Mean;
                 } else {
                     throw ConfigError("pooling must be sum or mean, got \"" + pooling + "\"");
                 }
                 cfg.epochs = epochs;
                 cfg.shots = shots;
                 cfg.seed = seed;
                 cfg.aux_lp_lambda = aux_lp_lambda;
                 cfg.overlap_normalize = overlap_normalize;
                 cfg.column_softmax = column_softmax;
                 cfg.grid_mode = grid_mode;
                 return cfg;
             }),
             py::arg("prompt") = "gpf", py::arg("k") = 1, py::arg("r") = 0.4, py::arg("m") = 1,
             py::arg("lr") = 1e-3, py::arg("weight_decay") = 1e-4, py::arg("head_layers") = 1,
             py::arg("pooling") = "sum", py::arg("epochs") = 50, py::arg("shots") = 0,
             py::arg("seed") = 0, py::arg("aux_lp_lambda") = 0.0,
             py::arg("overlap_normalize") = false, py::arg("column_softmax") = false,
             py::arg("grid_mode") = false)
        .def_property_readonly("prompt",
                               [](const TuneConfig& c) { return to_string(c.variant); })
        .def_readwrite("k", &TuneConfig::k)
        .def_readwrite("epochs", &TuneConfig::epochs)
        .def_readwrite("lr", &TuneConfig::lr)
        .def_readwrite("shots", &TuneConfig::shots)
        .def_readwrite("seed", &TuneConfig::seed);
    m.def("check_grids", &check_grids, py::arg("config"),
          "warnings for hyperparameters outside the search grids");

    py::class_<Model>(m, "Model").def("logits", &Model::logits, py::arg("graph"));

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("best_valid_auc", &TrainResult::best_valid_auc)
        .def_readonly("test_auc_at_best_valid", &TrainResult::test_auc_at_best_valid)
        .def_readonly("loss_curve", &TrainResult::loss_curve)
        .def_readonly("params_tuned", &TrainResult::params_tuned)
        .def_readonly("params_backbone", &TrainResult::params_backbone)
        .def_readonly("best_epoch", &TrainResult::best_epoch)
        .def_readonly("wall_ms", &TrainResult::wall_ms)
        .def_readonly("model", &TrainResult::model);
    m.def("tune_run", &tune_run, py::arg("config"), py::arg("checkpoint"), py::arg("dataset"),
          py::arg("split"), py::call_guard<py::gil_scoped_release>());

    // ---------------------------------------------------------- metrics ---
    m.def(
        "roc_auc",
        [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
            return roc_auc(scores, labels);
        },
        py::arg("scores"), py::arg("labels"),
        "rank-sum ROC-AUC with tie-averaged ranks; raises SuptMetricError on a single class");

    // ----------------------------------------------------- universality ---
    m.def(
        "universality_check",
        [](const Graph& g, const std::vector<int>& subset, double epsilon,
           const py::array& prompt, std::uint64_t seed, int hidden_dim) {
            const auto witness = universality_witness(g, subset, epsilon, to_tensor(prompt));
            const GinConfig gin{.num_layers = 1, .hidden_dim = hidden_dim,
                                .input_dim = g.x.cols(), .epsilon = epsilon,
                                .mlp_per_layer = false};
            Rng rng(seed);
            const ParamGroup backbone = init_backbone_params(gin, rng, Role::Frozen);
            const auto check = universality_check(g, witness, gin, backbone);
            return py::make_tuple(check.pass, check.residual, witness.scale);
        },
        py::arg("graph"), py::arg("subset"), py::arg("epsilon"), py::arg("prompt"),
        py::arg("seed") = 0, py::arg("hidden_dim") = 8,
        "subset-prompt equivalence on a random single-layer linear GIN; returns "
        "(pass, residual, scale)");
}
