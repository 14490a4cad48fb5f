#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "supt/graph.hpp"
#include "supt/param.hpp"
#include "supt/rng.hpp"
#include "supt/tape.hpp"

namespace supt {

enum class PromptVariant { None, Gpf, GpfPlus, SuptSoft, SuptHard };

std::string to_string(PromptVariant v);
PromptVariant prompt_variant_from_string(const std::string& s);

// Tunable prompt parameters plus the variant configuration. Tensor names:
//   prompt.p  1xd   (gpf)
//   prompt.b  kxd   (gpf_plus, supt)
//   prompt.a  kxd   (gpf_plus)
//   prompt.w  dxk   (supt)
struct PromptParams {
    PromptVariant variant = PromptVariant::None;
    int k = 1;
    int hops = 1;                    // m, supt only
    double pool_ratio = 0.5;         // r in (0,1], supt_hard only
    bool overlap_normalize = false;  // supt_hard only
    bool column_softmax = false;     // literal per-column normalization, off by default
    ParamGroup params;
};

PromptParams init_prompt_params(PromptVariant variant, int k, int feature_dim, double pool_ratio,
                                int hops, Rng& rng);

// N x k assignment scores before and after the nonlinearity.
struct ScoreMatrix {
    Tensor2 alpha;       // raw
    Tensor2 normalized;  // after sigma (== alpha for supt_hard)
};

struct PromptedFeatures {
    Tensor2 x_star;
    std::vector<std::vector<int>> selection;  // per basis, supt_hard only
};

// --- plain (forward-only) operations ---

Tensor2 gpf_apply(const Tensor2& x, const Tensor2& p);

struct GpfPlusResult {
    ScoreMatrix scores;
    Tensor2 x_star;
};
GpfPlusResult gpf_plus_apply(const Tensor2& x, const Tensor2& b, const Tensor2& a);

ScoreMatrix supt_scores(const Tensor2& x, const Graph& g, const PromptParams& pp);

Tensor2 supt_soft_apply(const Tensor2& x, const ScoreMatrix& scores, const Tensor2& b);

// Indices of the `count` largest entries; ties broken toward the smaller node
// index. Returned ascending.
std::vector<int> top_rank(std::span<const double> column, int count);

PromptedFeatures supt_hard_apply(const Tensor2& x, const ScoreMatrix& scores,
                                 const PromptParams& pp);

// || A - alpha alpha^T ||_F with the raw loopless adjacency.
double aux_link_loss(const Graph& g, const ScoreMatrix& scores);

// Applies whichever variant pp selects. Returns scores when the variant has
// them.
PromptedFeatures prompt_apply(const Tensor2& x, const Graph& g, const PromptParams& pp,
                              std::optional<ScoreMatrix>* scores_out = nullptr);

std::size_t prompt_param_count(const PromptParams& pp);

// --- taped operations (training path) ---

struct TapedPrompt {
    Value x_star;
    std::optional<Value> normalized_scores;   // supt_soft / gpf_plus
    std::vector<std::vector<int>> selection;  // supt_hard
};

TapedPrompt prompt_apply(Tape& tape, const Graph& g, Value x, const PromptParams& pp,
                         const std::map<std::string, Value>& leaves);

Value aux_link_loss(Tape& tape, const Graph& g, Value normalized_scores);

}  // namespace supt
