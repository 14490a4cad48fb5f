#include "supt/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>

#include "supt/optim.hpp"

namespace supt {

std::string to_string(PretrainTask t) {
    switch (t) {
        case PretrainTask::EdgePred: return "edgepred";
        case PretrainTask::AttrMask: return "attrmask";
        case PretrainTask::Infomax: return "infomax";
    }
    return "?";
}

PretrainTask pretrain_task_from_string(const std::string& s) {
    if (s == "edgepred") return PretrainTask::EdgePred;
    if (s == "attrmask") return PretrainTask::AttrMask;
    if (s == "infomax") return PretrainTask::Infomax;
    throw ConfigError("unknown pretrain task: " + s);
}

Value edgepred_loss(Tape& tape, const GinConfig& cfg,
                    const std::map<std::string, Value>& leaves, const Graph& g,
                    double negative_ratio, std::uint64_t seed) {
    if (g.edges.empty()) throw DataError("edgepred_loss: graph has no edges");

    std::set<std::pair<int, int>> present;
    for (auto [u, v] : g.edges) present.insert(u < v ? std::make_pair(u, v) : std::make_pair(v, u));
    std::vector<std::pair<int, int>> non_edges;
    for (int u = 0; u < g.num_nodes; ++u)
        for (int v = u + 1; v < g.num_nodes; ++v)
            if (!present.contains({u, v})) non_edges.emplace_back(u, v);
    if (non_edges.empty()) {
        throw DataError("edgepred_loss: graph is complete, no negative pair exists");
    }

    const int num_neg = std::max(
        1, static_cast<int>(std::ceil(negative_ratio * static_cast<double>(g.edges.size()))));
    Rng rng = Rng(seed).child("edgepred-neg");

    std::vector<int> us, vs;
    for (auto [u, v] : g.edges) {
        us.push_back(u);
        vs.push_back(v);
    }
    for (int i = 0; i < num_neg; ++i) {
        const auto& [u, v] = non_edges[static_cast<std::size_t>(rng.next() % non_edges.size())];
        us.push_back(u);
        vs.push_back(v);
    }

    Value agg = tape.constant(gin_aggregation(g, cfg.epsilon));
    Value z = backbone_forward(tape, cfg, leaves, agg, tape.constant(g.x));
    Value dots = tape.sum_rows(tape.mul(tape.gather_rows(z, us), tape.gather_rows(z, vs)));

    const int total = static_cast<int>(us.size());
    Tensor2 labels(total, 1);
    for (std::size_t i = 0; i < g.edges.size(); ++i) labels.at(static_cast<int>(i), 0) = 1.0;
    return tape.bce_with_logits_masked(dots, labels, Tensor2(total, 1, 1.0));
}

Value attrmask_loss(Tape& tape, const GinConfig& cfg,
                    const std::map<std::string, Value>& leaves, const Graph& g,
                    double mask_fraction, std::uint64_t seed) {
    if (mask_fraction <= 0.0 || mask_fraction >= 1.0) {
        throw ConfigError("attrmask_loss: mask fraction must be in (0,1)");
    }
    const int n = g.num_nodes;
    const int num_masked = static_cast<int>(std::ceil(mask_fraction * n));

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = Rng(seed).child("attrmask");
    rng.shuffle(perm);
    std::vector<int> masked(perm.begin(), perm.begin() + num_masked);
    std::sort(masked.begin(), masked.end());

    Tensor2 x_masked = g.x;
    for (int i : masked)
        for (int c = 0; c < g.x.cols(); ++c) x_masked.at(i, c) = 0.0;

    Value agg = tape.constant(gin_aggregation(g, cfg.epsilon));
    Value z = backbone_forward(tape, cfg, leaves, agg, tape.constant(x_masked));
    Value recon = tape.matmul(z, leaves.at("pretrain.decoder"));
    Value diff = tape.sub(tape.gather_rows(recon, masked),
                          tape.constant(gather_rows(g.x, masked)));
    return tape.scale(tape.sum_all(tape.mul(diff, diff)),
                      1.0 / (static_cast<double>(num_masked) * g.x.cols()));
}

Value infomax_loss(Tape& tape, const GinConfig& cfg,
                   const std::map<std::string, Value>& leaves, const Graph& g,
                   std::uint64_t seed) {
    const int n = g.num_nodes;
    if (n < 2) throw DataError("infomax_loss: needs at least two nodes");

    Rng rng = Rng(seed).child("infomax");
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    do {
        rng.shuffle(perm);
    } while (std::is_sorted(perm.begin(), perm.end()));  // reject the identity shuffle

    Value agg = tape.constant(gin_aggregation(g, cfg.epsilon));
    Value z = backbone_forward(tape, cfg, leaves, agg, tape.constant(g.x));
    Value zc = backbone_forward(tape, cfg, leaves, agg,
                                tape.constant(gather_rows(g.x, perm)));
    Value summary = tape.scale(tape.sum_cols(z), 1.0 / n);

    Value disc = leaves.at("pretrain.disc");
    Value pos = tape.sum_rows(tape.mul_row_broadcast(tape.matmul(z, disc), summary));
    Value neg = tape.sum_rows(tape.mul_row_broadcast(tape.matmul(zc, disc), summary));

    const Tensor2 ones(n, 1, 1.0);
    Value loss_pos = tape.bce_with_logits_masked(pos, ones, ones);
    Value loss_neg = tape.bce_with_logits_masked(neg, Tensor2(n, 1, 0.0), ones);
    return tape.scale(tape.add(loss_pos, loss_neg), 0.5);
}

ParamGroup init_pretrain_aux_params(PretrainTask task, const GinConfig& cfg, Rng& rng) {
    ParamGroup aux;
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
    switch (task) {
        case PretrainTask::EdgePred:
            break;
        case PretrainTask::AttrMask:
            aux.add("pretrain.decoder",
                    Tensor2::random_uniform(cfg.hidden_dim, cfg.input_dim, -bound, bound, rng),
                    Role::Tunable);
            break;
        case PretrainTask::Infomax:
            aux.add("pretrain.disc",
                    Tensor2::random_uniform(cfg.hidden_dim, cfg.hidden_dim, -bound, bound, rng),
                    Role::Tunable);
            break;
    }
    return aux;
}

PretrainResult pretrain_run(const PretrainConfig& cfg, const GinConfig& gin, const Dataset& ds) {
    if (ds.feature_dim != gin.input_dim) {
        throw ConfigError("pretrain_run: dataset feature dim " + std::to_string(ds.feature_dim) +
                          " != backbone input dim " + std::to_string(gin.input_dim));
    }
    Rng rng = Rng(cfg.seed).child("pretrain-init");
    ParamGroup params = init_backbone_params(gin, rng, Role::Tunable);
    params.absorb(init_pretrain_aux_params(cfg.task, gin, rng));

    Adam adam({.lr = cfg.lr, .weight_decay = cfg.weight_decay});
    PretrainResult result;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Tape tape;
        auto leaves = register_params(tape, params);
        std::optional<Value> total;
        int used = 0;
        result.skipped_graphs = 0;
        for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
            const Graph& g = ds.graphs[gi];
            const std::uint64_t gseed =
                Rng(cfg.seed).child("pretrain-graph", gi).next();
            Value loss;
            try {
                switch (cfg.task) {
                    case PretrainTask::EdgePred:
                        loss = edgepred_loss(tape, gin, leaves, g, cfg.negative_ratio, gseed);
                        break;
                    case PretrainTask::AttrMask:
                        loss = attrmask_loss(tape, gin, leaves, g, cfg.mask_fraction, gseed);
                        break;
                    case PretrainTask::Infomax:
                        loss = infomax_loss(tape, gin, leaves, g, gseed);
                        break;
                }
            } catch (const DataError&) {
                ++result.skipped_graphs;
                continue;
            }
            total = total ? tape.add(*total, loss) : loss;
            ++used;
        }
        if (!total) throw DataError("pretrain_run: no usable graph for task " + to_string(cfg.task));
        Value mean_loss = tape.scale(*total, 1.0 / used);
        const double lv = tape.value(mean_loss).scalar();
        if (!std::isfinite(lv)) {
            throw NumericError("pretrain_run: loss diverged at epoch " + std::to_string(epoch));
        }
        result.loss_curve.push_back(lv);
        adam.step(params, tape.backward(mean_loss));
    }

    // Only backbone tensors go into the checkpoint; aux heads are discarded.
    ParamGroup backbone_only;
    for (const auto& e : params.entries()) {
        if (e.name.starts_with("gin.")) backbone_only.add(e.name, e.tensor, Role::Frozen);
    }
    result.checkpoint =
        Checkpoint::from_params(gin, backbone_only, to_string(cfg.task), cfg.seed);
    return result;
}

}  // namespace supt
