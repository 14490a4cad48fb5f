#include "supt/theory.hpp"

#include <chrono>
#include <cmath>
#include <set>

namespace supt {

UniversalityWitness universality_witness(const Graph& g, const std::vector<int>& subset,
                                         double epsilon, const Tensor2& prompt) {
    if (subset.empty()) throw ContractError("universality_witness: subset must be non-empty");
    if (epsilon <= -1.0) throw ContractError("universality_witness: epsilon must be > -1");
    if (prompt.rows() != 1) throw ShapeError("universality_witness: prompt must be a row vector");
    std::set<int> seen;
    for (int s : subset) {
        if (s < 0 || s >= g.num_nodes) {
            throw ContractError("universality_witness: node " + std::to_string(s) +
                                " out of range");
        }
        if (!seen.insert(s).second) {
            throw ContractError("universality_witness: duplicate node in subset");
        }
    }

    const auto deg = degrees(g);
    int total = 0;
    for (int d : deg) total += d;
    double subset_deg = 0.0;
    for (int s : subset) subset_deg += deg[static_cast<std::size_t>(s)];

    const double numer = total + g.num_nodes * (1.0 + epsilon);
    const double denom = subset_deg + (1.0 + epsilon) * static_cast<double>(subset.size());
    if (denom <= 0.0) {
        throw NumericError("universality_witness: non-positive denominator");
    }

    UniversalityWitness w;
    w.subset = subset;
    w.base_prompt = prompt;
    w.scale = numer / denom;
    w.scaled_prompt = scale(prompt, w.scale);
    w.degree_sum = total;
    w.num_nodes = g.num_nodes;
    w.epsilon = epsilon;
    return w;
}

UniversalityCheck universality_check(const Graph& g, const UniversalityWitness& witness,
                                     const GinConfig& cfg, const ParamGroup& backbone,
                                     double tol) {
    if (cfg.num_layers != 1) {
        throw ContractError("universality_check: requires a single-layer backbone, got " +
                            std::to_string(cfg.num_layers) + " layers");
    }
    if (cfg.mlp_per_layer) {
        throw ContractError("universality_check: requires the single-linear layer form");
    }

    // Subset-prompted features.
    Tensor2 x_subset = g.x;
    for (int s : witness.subset) {
        for (int c = 0; c < g.x.cols(); ++c) {
            x_subset.at(s, c) += witness.scaled_prompt.at(0, c);
        }
    }
    // All-nodes prompt.
    const Tensor2 x_all = add_row_broadcast(g.x, witness.base_prompt);

    const Tensor2 z_subset = readout(backbone_forward(cfg, backbone, g, x_subset), ReadoutKind::Sum);
    const Tensor2 z_all = readout(backbone_forward(cfg, backbone, g, x_all), ReadoutKind::Sum);

    UniversalityCheck out;
    for (int c = 0; c < z_subset.cols(); ++c) {
        out.residual = std::max(out.residual, std::fabs(z_subset.at(0, c) - z_all.at(0, c)));
    }
    out.pass = out.residual <= tol;
    return out;
}

double timing_probe(const PromptParams& pp, const Graph& g, int repetitions) {
    if (repetitions < 1) throw ContractError("timing_probe: repetitions must be >= 1");
    // Warm-up.
    for (int i = 0; i < 3; ++i) (void)prompt_apply(g.x, g, pp);
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < repetitions; ++i) {
        (void)prompt_apply(g.x, g, pp);
    }
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / repetitions;
}

}  // namespace supt
