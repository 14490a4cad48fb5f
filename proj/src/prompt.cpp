#include "supt/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace supt {

std::string to_string(PromptVariant v) {
    switch (v) {
        case PromptVariant::None: return "ft";
        case PromptVariant::Gpf: return "gpf";
        case PromptVariant::GpfPlus: return "gpf-plus";
        case PromptVariant::SuptSoft: return "supt-soft";
        case PromptVariant::SuptHard: return "supt-hard";
    }
    return "?";
}

PromptVariant prompt_variant_from_string(const std::string& s) {
    if (s == "ft" || s == "none") return PromptVariant::None;
    if (s == "gpf") return PromptVariant::Gpf;
    if (s == "gpf-plus" || s == "gpf_plus") return PromptVariant::GpfPlus;
    if (s == "supt-soft" || s == "supt_soft") return PromptVariant::SuptSoft;
    if (s == "supt-hard" || s == "supt_hard") return PromptVariant::SuptHard;
    throw ConfigError("unknown prompt variant: " + s);
}

PromptParams init_prompt_params(PromptVariant variant, int k, int feature_dim, double pool_ratio,
                                int hops, Rng& rng) {
    if (k < 1) throw ConfigError("prompt basis count k must be >= 1");
    if (hops < 1) throw ConfigError("prompt hops m must be >= 1");
    if (pool_ratio <= 0.0 || pool_ratio > 1.0) throw ConfigError("pool ratio r must be in (0,1]");

    PromptParams pp;
    pp.variant = variant;
    pp.k = k;
    pp.hops = hops;
    pp.pool_ratio = pool_ratio;
    const double bound = 1.0 / std::sqrt(static_cast<double>(feature_dim));
    switch (variant) {
        case PromptVariant::None:
            break;
        case PromptVariant::Gpf:
            pp.k = 1;
            pp.params.add("prompt.p",
                          Tensor2::random_uniform(1, feature_dim, -bound, bound, rng),
                          Role::Tunable);
            break;
        case PromptVariant::GpfPlus:
            pp.params.add("prompt.b",
                          Tensor2::random_uniform(k, feature_dim, -bound, bound, rng),
                          Role::Tunable);
            pp.params.add("prompt.a",
                          Tensor2::random_uniform(k, feature_dim, -bound, bound, rng),
                          Role::Tunable);
            break;
        case PromptVariant::SuptSoft:
        case PromptVariant::SuptHard:
            pp.params.add("prompt.b",
                          Tensor2::random_uniform(k, feature_dim, -bound, bound, rng),
                          Role::Tunable);
            pp.params.add("prompt.w",
                          Tensor2::random_uniform(feature_dim, k, -bound, bound, rng),
                          Role::Tunable);
            break;
    }
    return pp;
}

Tensor2 gpf_apply(const Tensor2& x, const Tensor2& p) {
    return add_row_broadcast(x, p);
}

GpfPlusResult gpf_plus_apply(const Tensor2& x, const Tensor2& b, const Tensor2& a) {
    if (!b.same_shape(a) || b.cols() != x.cols()) {
        throw ShapeError("gpf_plus_apply: b " + b.shape_str() + ", a " + a.shape_str() +
                         ", x " + x.shape_str());
    }
    GpfPlusResult r;
    r.scores.alpha = matmul(x, transpose(a));  // N x k
    r.scores.normalized = row_softmax(r.scores.alpha);
    r.x_star = add(x, matmul(r.scores.normalized, b));
    return r;
}

namespace {

Tensor2 supt_raw_scores(const Tensor2& x, const Graph& g, const PromptParams& pp) {
    const Tensor2& b = pp.params.tensor("prompt.b");
    const Tensor2& w = pp.params.tensor("prompt.w");
    if (b.cols() != x.cols() || w.rows() != x.cols() || w.cols() != b.rows()) {
        throw ShapeError("supt_scores: b " + b.shape_str() + ", w " + w.shape_str() + ", x " +
                         x.shape_str());
    }
    const NormAdj s = normalized_adjacency(g, pp.hops);
    return matmul(matmul(s.s, add_row_broadcast(x, sum_cols(b))), w);
}

}  // namespace

ScoreMatrix supt_scores(const Tensor2& x, const Graph& g, const PromptParams& pp) {
    if (pp.variant != PromptVariant::SuptSoft && pp.variant != PromptVariant::SuptHard) {
        throw ContractError("supt_scores: variant is not a SUPT variant");
    }
    ScoreMatrix sm;
    sm.alpha = supt_raw_scores(x, g, pp);
    if (pp.variant == PromptVariant::SuptSoft) {
        sm.normalized = pp.column_softmax ? col_softmax(sm.alpha) : row_softmax(sm.alpha);
    } else {
        sm.normalized = sm.alpha;
    }
    return sm;
}

Tensor2 supt_soft_apply(const Tensor2& x, const ScoreMatrix& scores, const Tensor2& b) {
    for (int i = 0; i < scores.normalized.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < scores.normalized.cols(); ++j) s += scores.normalized.at(i, j);
        if (std::fabs(s - 1.0) > 1e-9) {
            throw ContractError("supt_soft_apply: row " + std::to_string(i) +
                                " of normalized scores sums to " + std::to_string(s));
        }
    }
    return add(x, matmul(scores.normalized, b));
}

std::vector<int> top_rank(std::span<const double> column, int count) {
    const int n = static_cast<int>(column.size());
    if (count < 1 || count > n) {
        throw ContractError("top_rank: count " + std::to_string(count) + " out of range for " +
                            std::to_string(n) + " entries");
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (column[a] != column[b]) return column[a] > column[b];
        return a < b;
    });
    order.resize(static_cast<std::size_t>(count));
    std::sort(order.begin(), order.end());
    return order;
}

PromptedFeatures supt_hard_apply(const Tensor2& x, const ScoreMatrix& scores,
                                 const PromptParams& pp) {
    if (pp.variant != PromptVariant::SuptHard) {
        throw ContractError("supt_hard_apply: variant is not supt-hard");
    }
    const Tensor2& b = pp.params.tensor("prompt.b");
    const int n = x.rows();
    const int k = scores.alpha.cols();
    const int count = static_cast<int>(std::ceil(pp.pool_ratio * n));

    PromptedFeatures out;
    out.x_star = x;
    Tensor2 accum(n, x.cols());
    std::vector<int> hits(static_cast<std::size_t>(n), 0);
    std::vector<double> column(static_cast<std::size_t>(n));
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < n; ++i) column[i] = scores.alpha.at(i, j);
        auto idx = top_rank(column, count);
        for (int i : idx) {
            const double gate = sigmoid_scalar(scores.alpha.at(i, j));
            for (int c = 0; c < x.cols(); ++c) accum.at(i, c) += gate * b.at(j, c);
            ++hits[i];
        }
        out.selection.push_back(std::move(idx));
    }
    for (int i = 0; i < n; ++i) {
        if (hits[i] == 0) continue;
        const double norm = pp.overlap_normalize ? 1.0 / hits[i] : 1.0;
        for (int c = 0; c < x.cols(); ++c) out.x_star.at(i, c) += norm * accum.at(i, c);
    }
    return out;
}

double aux_link_loss(const Graph& g, const ScoreMatrix& scores) {
    const Tensor2 a = adjacency(g);
    const Tensor2 gram = matmul(scores.normalized, transpose(scores.normalized));
    return frobenius(sub(a, gram));
}

PromptedFeatures prompt_apply(const Tensor2& x, const Graph& g, const PromptParams& pp,
                              std::optional<ScoreMatrix>* scores_out) {
    PromptedFeatures out;
    switch (pp.variant) {
        case PromptVariant::None:
            out.x_star = x;
            break;
        case PromptVariant::Gpf:
            out.x_star = gpf_apply(x, pp.params.tensor("prompt.p"));
            break;
        case PromptVariant::GpfPlus: {
            auto r = gpf_plus_apply(x, pp.params.tensor("prompt.b"), pp.params.tensor("prompt.a"));
            out.x_star = std::move(r.x_star);
            if (scores_out) *scores_out = std::move(r.scores);
            return out;
        }
        case PromptVariant::SuptSoft: {
            auto sm = supt_scores(x, g, pp);
            // The column-normalized comparison mode bypasses the row-sum
            // contract of supt_soft_apply.
            out.x_star = pp.column_softmax
                             ? add(x, matmul(sm.normalized, pp.params.tensor("prompt.b")))
                             : supt_soft_apply(x, sm, pp.params.tensor("prompt.b"));
            if (scores_out) *scores_out = std::move(sm);
            return out;
        }
        case PromptVariant::SuptHard: {
            auto sm = supt_scores(x, g, pp);
            out = supt_hard_apply(x, sm, pp);
            if (scores_out) *scores_out = std::move(sm);
            return out;
        }
    }
    if (scores_out) scores_out->reset();
    return out;
}

std::size_t prompt_param_count(const PromptParams& pp) {
    return pp.params.count_all();
}

TapedPrompt prompt_apply(Tape& tape, const Graph& g, Value x, const PromptParams& pp,
                         const std::map<std::string, Value>& leaves) {
    TapedPrompt out;
    switch (pp.variant) {
        case PromptVariant::None:
            out.x_star = x;
            return out;
        case PromptVariant::Gpf:
            out.x_star = tape.add_row_broadcast(x, leaves.at("prompt.p"));
            return out;
        case PromptVariant::GpfPlus: {
            Value alpha = tape.matmul(x, tape.transpose(leaves.at("prompt.a")));
            Value norm = tape.row_softmax(alpha);
            out.x_star = tape.add(x, tape.matmul(norm, leaves.at("prompt.b")));
            out.normalized_scores = norm;
            return out;
        }
        case PromptVariant::SuptSoft:
        case PromptVariant::SuptHard: {
            const NormAdj s = normalized_adjacency(g, pp.hops);
            Value b = leaves.at("prompt.b");
            Value xb = tape.add_row_broadcast(x, tape.sum_cols(b));
            Value raw = tape.matmul(tape.matmul(tape.constant(s.s), xb), leaves.at("prompt.w"));
            if (pp.variant == PromptVariant::SuptSoft) {
                Value norm = pp.column_softmax
                                 ? tape.transpose(tape.row_softmax(tape.transpose(raw)))
                                 : tape.row_softmax(raw);
                out.x_star = tape.add(x, tape.matmul(norm, b));
                out.normalized_scores = norm;
                return out;
            }
            // supt_hard: membership is a constant within the step; the gradient
            // flows through the sigmoid gate only.
            const Tensor2& alpha = tape.value(raw);
            const int n = alpha.rows();
            const int count = static_cast<int>(std::ceil(pp.pool_ratio * n));
            Tensor2 mask(n, pp.k);
            std::vector<int> hits(static_cast<std::size_t>(n), 0);
            std::vector<double> column(static_cast<std::size_t>(n));
            for (int j = 0; j < pp.k; ++j) {
                for (int i = 0; i < n; ++i) column[i] = alpha.at(i, j);
                auto idx = top_rank(column, count);
                for (int i : idx) {
                    mask.at(i, j) = 1.0;
                    ++hits[i];
                }
                out.selection.push_back(std::move(idx));
            }
            Value gated = tape.mul(tape.sigmoid(raw), tape.constant(mask));
            Value prompt = tape.matmul(gated, b);
            if (pp.overlap_normalize) {
                Tensor2 inv(n, 1, 1.0);
                for (int i = 0; i < n; ++i)
                    if (hits[i] > 1) inv.at(i, 0) = 1.0 / hits[i];
                prompt = tape.mul_col_broadcast(prompt, tape.constant(inv));
            }
            out.x_star = tape.add(x, prompt);
            return out;
        }
    }
    throw ContractError("prompt_apply: unhandled variant");
}

Value aux_link_loss(Tape& tape, const Graph& g, Value normalized_scores) {
    Value a = tape.constant(adjacency(g));
    Value gram = tape.matmul(normalized_scores, tape.transpose(normalized_scores));
    return tape.frobenius(tape.sub(a, gram));
}

}  // namespace supt
