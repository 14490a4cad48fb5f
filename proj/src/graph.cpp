#include "supt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "supt/errors.hpp"
#include "supt/rng.hpp"

namespace supt {

namespace {

using EdgeSet = std::set<std::pair<int, int>>;

std::pair<int, int> canon(int u, int v) { return u < v ? std::make_pair(u, v) : std::make_pair(v, u); }

EdgeSet edge_set(const Graph& g) {
    EdgeSet s;
    for (auto [u, v] : g.edges) s.insert(canon(u, v));
    return s;
}

std::vector<std::vector<int>> neighbor_lists(int n, const EdgeSet& edges) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    return adj;
}

}  // namespace

void validate_graph(const Graph& g) {
    if (g.num_nodes < 1) throw DataError("graph must have at least one node");
    EdgeSet seen;
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        auto [u, v] = g.edges[i];
        if (u < 0 || v < 0 || u >= g.num_nodes || v >= g.num_nodes) {
            throw DataError("edge " + std::to_string(i) + " (" + std::to_string(u) + "," +
                            std::to_string(v) + ") out of range for " +
                            std::to_string(g.num_nodes) + " nodes");
        }
        if (u == v) {
            throw DataError("edge " + std::to_string(i) + " is a self-loop at node " +
                            std::to_string(u));
        }
        if (!seen.insert(canon(u, v)).second) {
            throw DataError("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
        }
    }
    if (g.x.rows() != g.num_nodes) {
        throw DataError("feature matrix has " + std::to_string(g.x.rows()) + " rows for " +
                        std::to_string(g.num_nodes) + " nodes");
    }
    for (int i = 0; i < g.x.rows(); ++i) {
        for (int j = 0; j < g.x.cols(); ++j) {
            if (!std::isfinite(g.x.at(i, j))) {
                throw DataError("non-finite feature at node " + std::to_string(i) + ", dim " +
                                std::to_string(j));
            }
        }
    }
    if (g.y.size() != g.y_mask.size()) throw DataError("label and mask lengths differ");
}

Tensor2 adjacency(const Graph& g) {
    Tensor2 a(g.num_nodes, g.num_nodes);
    for (auto [u, v] : g.edges) {
        a.at(u, v) = 1.0;
        a.at(v, u) = 1.0;
    }
    return a;
}

std::vector<int> degrees(const Graph& g) {
    std::vector<int> d(static_cast<std::size_t>(g.num_nodes), 0);
    for (auto [u, v] : g.edges) {
        ++d[u];
        ++d[v];
    }
    return d;
}

NormAdj normalized_adjacency(const Graph& g, int hops) {
    if (hops < 1) throw ContractError("normalized_adjacency: hops must be >= 1");
    const int n = g.num_nodes;
    Tensor2 at = adjacency(g);
    for (int i = 0; i < n; ++i) at.at(i, i) = 1.0;  // A + I
    std::vector<double> dinv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < n; ++j) deg += at.at(i, j);
        dinv[i] = 1.0 / std::sqrt(deg);
    }
    Tensor2 s(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s.at(i, j) = dinv[i] * at.at(i, j) * dinv[j];
    Tensor2 out = s;
    for (int h = 1; h < hops; ++h) out = matmul(out, s);
    return NormAdj{std::move(out), hops};
}

Dataset load_dataset_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    Dataset ds;
    ds.name = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;  // provenance header lines
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("line " + std::to_string(lineno) + ": JSON parse error: " + e.what());
        }
        auto fail = [&](const std::string& msg) -> DataError {
            return DataError("line " + std::to_string(lineno) + ": " + msg);
        };
        for (const char* key : {"num_nodes", "edges", "x", "y", "y_mask"}) {
            if (!j.contains(key)) throw fail(std::string("missing field \"") + key + "\"");
        }
        Graph g;
        try {
            g.num_nodes = j.at("num_nodes").get<int>();
            for (const auto& e : j.at("edges")) {
                if (!e.is_array() || e.size() != 2) throw fail("edge is not a pair");
                g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
            }
            const auto& xs = j.at("x");
            const int n = static_cast<int>(xs.size());
            const int d = n > 0 ? static_cast<int>(xs.at(0).size()) : 0;
            g.x = Tensor2(n, d);
            for (int i = 0; i < n; ++i) {
                if (static_cast<int>(xs.at(i).size()) != d) throw fail("ragged feature rows");
                for (int c = 0; c < d; ++c) g.x.at(i, c) = xs.at(i).at(c).get<double>();
            }
            g.y = j.at("y").get<std::vector<double>>();
            for (const auto& m : j.at("y_mask")) g.y_mask.push_back(m.get<int>() != 0 ? 1 : 0);
        } catch (const nlohmann::json::exception& e) {
            throw fail(std::string("schema violation: ") + e.what());
        }
        try {
            validate_graph(g);
        } catch (const DataError& e) {
            throw fail(e.what());
        }
        if (ds.graphs.empty()) {
            ds.feature_dim = g.x.cols();
            ds.num_tasks = static_cast<int>(g.y.size());
        } else {
            if (g.x.cols() != ds.feature_dim) {
                throw fail("feature dim " + std::to_string(g.x.cols()) +
                           " differs from first record's " + std::to_string(ds.feature_dim));
            }
            if (static_cast<int>(g.y.size()) != ds.num_tasks) {
                throw fail("task count " + std::to_string(g.y.size()) +
                           " differs from first record's " + std::to_string(ds.num_tasks));
            }
        }
        ds.graphs.push_back(std::move(g));
    }
    if (ds.graphs.empty()) throw DataError("dataset file has no records: " + path);
    return ds;
}

void save_dataset_jsonl(const Dataset& ds, const std::string& path,
                        const std::vector<std::string>& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset file: " + path);
    for (const std::string& h : header) out << "# " << h << "\n";
    for (const Graph& g : ds.graphs) {
        nlohmann::json j;
        j["num_nodes"] = g.num_nodes;
        auto edges = nlohmann::json::array();
        std::vector<std::pair<int, int>> sorted;
        sorted.reserve(g.edges.size());
        for (auto [u, v] : g.edges) sorted.push_back(canon(u, v));
        std::sort(sorted.begin(), sorted.end());
        for (auto [u, v] : sorted) edges.push_back({u, v});
        j["edges"] = std::move(edges);
        auto xs = nlohmann::json::array();
        for (int i = 0; i < g.x.rows(); ++i) {
            auto row = nlohmann::json::array();
            for (int c = 0; c < g.x.cols(); ++c) row.push_back(g.x.at(i, c));
            xs.push_back(std::move(row));
        }
        j["x"] = std::move(xs);
        j["y"] = g.y;
        auto mask = nlohmann::json::array();
        for (auto m : g.y_mask) mask.push_back(static_cast<int>(m));
        j["y_mask"] = std::move(mask);
        out << j.dump() << "\n";
    }
}

bool has_triangle(const Graph& g) {
    EdgeSet edges = edge_set(g);
    auto adj = neighbor_lists(g.num_nodes, edges);
    for (auto [u, v] : edges) {
        for (int w : adj[u]) {
            if (w != v && edges.contains(canon(v, w))) return true;
        }
    }
    return false;
}

bool has_four_cycle(const Graph& g) {
    EdgeSet edges = edge_set(g);
    auto adj = neighbor_lists(g.num_nodes, edges);
    // A 4-cycle exists iff two nodes share at least two common neighbors.
    for (int a = 0; a < g.num_nodes; ++a) {
        for (int c = a + 1; c < g.num_nodes; ++c) {
            int common = 0;
            for (int b : adj[a]) {
                if (b != c && edges.contains(canon(b, c))) ++common;
                if (common >= 2) return true;
            }
        }
    }
    return false;
}

bool has_star(const Graph& g, int min_leaves) {
    for (int d : degrees(g)) {
        if (d >= min_leaves) return true;
    }
    return false;
}

namespace {

bool motif_present(int motif, const Graph& g) {
    switch (motif % 3) {
        case 0: return has_triangle(g);
        case 1: return has_four_cycle(g);
        default: return has_star(g);
    }
}

// Remove one edge of some instance of the motif. Motifs are monotone in the
// edge set, so repeated removal always terminates.
bool remove_motif_edge(int motif, int n, EdgeSet& edges, Rng& rng) {
    auto adj = neighbor_lists(n, edges);
    switch (motif % 3) {
        case 0:
            for (auto [u, v] : edges) {
                for (int w : adj[u]) {
                    if (w != v && edges.contains(canon(v, w))) {
                        edges.erase(canon(u, v));
                        return true;
                    }
                }
            }
            return false;
        case 1:
            for (int a = 0; a < n; ++a) {
                for (int c = a + 1; c < n; ++c) {
                    std::vector<int> common;
                    for (int b : adj[a]) {
                        if (b != c && edges.contains(canon(b, c))) common.push_back(b);
                    }
                    if (common.size() >= 2) {
                        edges.erase(canon(a, common[rng.next() % common.size()]));
                        return true;
                    }
                }
            }
            return false;
        default: {
            for (int v = 0; v < n; ++v) {
                if (static_cast<int>(adj[v].size()) >= 4) {
                    const int w = adj[v][rng.next() % adj[v].size()];
                    edges.erase(canon(v, w));
                    return true;
                }
            }
            return false;
        }
    }
}

void plant_motif(int motif, int n, EdgeSet& edges, Rng& rng) {
    auto pick_distinct = [&](int count) {
        std::vector<int> all(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) all[i] = i;
        rng.shuffle(all);
        all.resize(static_cast<std::size_t>(count));
        return all;
    };
    switch (motif % 3) {
        case 0: {
            auto v = pick_distinct(3);
            edges.insert(canon(v[0], v[1]));
            edges.insert(canon(v[1], v[2]));
            edges.insert(canon(v[0], v[2]));
            break;
        }
        case 1: {
            auto v = pick_distinct(4);
            edges.insert(canon(v[0], v[1]));
            edges.insert(canon(v[1], v[2]));
            edges.insert(canon(v[2], v[3]));
            edges.insert(canon(v[3], v[0]));
            break;
        }
        default: {
            auto v = pick_distinct(5);
            for (int i = 1; i <= 4; ++i) edges.insert(canon(v[0], v[i]));
            break;
        }
    }
}

Graph finish_graph(int n, const EdgeSet& edges, int feature_dim, int num_tasks, Rng& rng) {
    Graph g;
    g.num_nodes = n;
    g.edges.assign(edges.begin(), edges.end());
    // Noisy one-hot structural roles: role = degree, capped by feature width.
    auto deg = degrees(g);
    g.x = Tensor2(n, feature_dim);
    for (int i = 0; i < n; ++i) {
        const int role = std::min(deg[i], feature_dim - 1);
        g.x.at(i, role) = 1.0;
        for (int c = 0; c < feature_dim; ++c) g.x.at(i, c) += rng.uniform(-0.1, 0.1);
    }
    g.y.resize(static_cast<std::size_t>(num_tasks));
    g.y_mask.assign(static_cast<std::size_t>(num_tasks), 1);
    for (int t = 0; t < num_tasks; ++t) g.y[t] = motif_present(t, g) ? 1.0 : 0.0;
    return g;
}

}  // namespace

Dataset synth_motif_dataset(std::uint64_t seed, int num_graphs, int n_min, int n_max,
                            int feature_dim, int num_tasks) {
    if (n_min < 4 || n_max > 64 || n_min > n_max) {
        throw ConfigError("synth_motif_dataset: node range must lie within [4, 64]");
    }
    if (num_graphs < 1 || feature_dim < 1 || num_tasks < 1) {
        throw ConfigError("synth_motif_dataset: counts must be positive");
    }

    Rng root(seed);
    Dataset ds;
    ds.num_tasks = num_tasks;
    ds.feature_dim = feature_dim;
    ds.name = "synth-motif";

    const bool wants_star = num_tasks >= 3;
    constexpr int kMaxAttempts = 400;
    constexpr int kMaxRepairRounds = 40;

    // Balanced target labels by construction: per task, a shuffled half-half
    // assignment over the graphs keeps every positive fraction at ~0.5.
    std::vector<std::vector<bool>> targets(static_cast<std::size_t>(num_tasks),
                                           std::vector<bool>(static_cast<std::size_t>(num_graphs)));
    for (int t = 0; t < num_tasks; ++t) {
        std::vector<int> order(static_cast<std::size_t>(num_graphs));
        std::iota(order.begin(), order.end(), 0);
        Rng brng = root.child("balance", static_cast<std::uint64_t>(t));
        brng.shuffle(order);
        for (int i = 0; i < (num_graphs + 1) / 2; ++i)
            targets[static_cast<std::size_t>(t)][static_cast<std::size_t>(order[i])] = true;
    }

    for (int gi = 0; gi < num_graphs; ++gi) {
        Rng rng = root.child("graph", static_cast<std::uint64_t>(gi));
        std::vector<bool> desired(static_cast<std::size_t>(num_tasks));
        for (int t = 0; t < num_tasks; ++t)
            desired[static_cast<std::size_t>(t)] =
                targets[static_cast<std::size_t>(t)][static_cast<std::size_t>(gi)];

        Graph accepted;
        bool ok = false;
        for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
            int n = static_cast<int>(rng.uniform_int(n_min, n_max));
            if (wants_star && desired[2] && n < 5) n = std::min(5, n_max);

            // Erdos-Renyi base, average degree ~3.
            EdgeSet edges;
            const double p = std::min(1.0, 3.0 / std::max(1, n - 1));
            for (int u = 0; u < n; ++u)
                for (int v = u + 1; v < n; ++v)
                    if (rng.bernoulli(p)) edges.insert({u, v});

            for (int round = 0; round < kMaxRepairRounds; ++round) {
                bool changed = false;
                Graph probe;
                probe.num_nodes = n;
                probe.edges.assign(edges.begin(), edges.end());
                for (int t = 0; t < std::min(num_tasks, 3); ++t) {
                    const bool present = motif_present(t, probe);
                    if (desired[t] && !present) {
                        plant_motif(t, n, edges, rng);
                        changed = true;
                    } else if (!desired[t] && present) {
                        changed |= remove_motif_edge(t, n, edges, rng);
                    }
                }
                if (!changed) break;
            }

            Graph candidate;
            candidate.num_nodes = n;
            candidate.edges.assign(edges.begin(), edges.end());
            bool match = true;
            for (int t = 0; t < num_tasks; ++t) {
                if (motif_present(t, candidate) != desired[t]) {
                    match = false;
                    break;
                }
            }
            if (match) {
                accepted = finish_graph(n, edges, feature_dim, num_tasks, rng);
                ok = true;
            }
        }
        if (!ok) {
            throw DataError("synth_motif_dataset: could not realize requested labels for graph " +
                            std::to_string(gi) + " after " + std::to_string(kMaxAttempts) +
                            " attempts");
        }
        ds.graphs.push_back(std::move(accepted));
    }

    for (int t = 0; t < num_tasks; ++t) {
        int pos = 0;
        for (const Graph& g : ds.graphs) pos += g.y[t] > 0.5 ? 1 : 0;
        const double frac = static_cast<double>(pos) / num_graphs;
        if (frac < 0.4 || frac > 0.6) {
            throw DataError("synth_motif_dataset: task " + std::to_string(t) +
                            " imbalanced (positive fraction " + std::to_string(frac) + ")");
        }
    }
    return ds;
}

SplitSpec split_dataset(const Dataset& ds, double train_ratio, double valid_ratio,
                        double test_ratio, std::uint64_t seed) {
    if (std::fabs(train_ratio + valid_ratio + test_ratio - 1.0) > 1e-9) {
        throw ConfigError("split ratios must sum to 1");
    }
    const int n = static_cast<int>(ds.graphs.size());
    if (n < 3) throw DataError("dataset too small to split (need >= 3 graphs)");

    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[i] = i;
    Rng rng = Rng(seed).child("split");
    rng.shuffle(idx);

    int n_train = static_cast<int>(std::lround(train_ratio * n));
    int n_valid = static_cast<int>(std::lround(valid_ratio * n));
    n_train = std::min(n_train, n);
    n_valid = std::min(n_valid, n - n_train);

    SplitSpec split;
    split.seed = seed;
    split.train.assign(idx.begin(), idx.begin() + n_train);
    split.valid.assign(idx.begin() + n_train, idx.begin() + n_train + n_valid);
    split.test.assign(idx.begin() + n_train + n_valid, idx.end());
    split.has_empty_parts = split.train.empty() || split.valid.empty() || split.test.empty();
    return split;
}

SplitSpec few_shot_sample(const SplitSpec& split, int n, std::uint64_t seed) {
    if (n < 1 || n > static_cast<int>(split.train.size())) {
        throw DataError("few_shot_sample: requested " + std::to_string(n) + " of " +
                        std::to_string(split.train.size()) + " training graphs");
    }
    SplitSpec out = split;
    out.seed = seed;
    Rng rng = Rng(seed).child("few-shot");
    rng.shuffle(out.train);
    out.train.resize(static_cast<std::size_t>(n));
    return out;
}

}  // namespace supt
