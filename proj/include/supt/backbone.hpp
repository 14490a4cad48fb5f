#pragma once

#include <map>
#include <string>

#include "supt/graph.hpp"
#include "supt/param.hpp"
#include "supt/rng.hpp"
#include "supt/tape.hpp"

namespace supt {

// Stack of GIN layers of the single-linear form Z = (A + (1+eps)I) X W, with
// relu between layers. mlp_per_layer adds a second linear after each
// aggregation.
struct GinConfig {
    int num_layers = 5;
    int hidden_dim = 300;
    int input_dim = 300;
    double epsilon = 0.0;
    bool mlp_per_layer = false;

    bool operator==(const GinConfig&) const = default;
};

enum class ReadoutKind { Sum, Mean };

struct HeadConfig {
    int num_layers = 1;  // 1..4
    int input_dim = 300;
    int num_tasks = 1;
};

// (A + (1+eps)I), the aggregation operator of a GIN layer.
Tensor2 gin_aggregation(const Graph& g, double epsilon);

ParamGroup init_backbone_params(const GinConfig& cfg, Rng& rng, Role role);
ParamGroup init_head_params(const HeadConfig& cfg, Rng& rng);

// Single layer, plain and taped.
Tensor2 gin_layer_forward(const Tensor2& x, const Graph& g, double epsilon, const Tensor2& w);
Value gin_layer_forward(Tape& tape, Value x, Value agg, Value w);

// Full stack. The taped variant takes pre-registered parameter leaves.
Tensor2 backbone_forward(const GinConfig& cfg, const ParamGroup& params, const Graph& g,
                         const Tensor2& x);
Value backbone_forward(Tape& tape, const GinConfig& cfg,
                       const std::map<std::string, Value>& params, Value agg, Value x);

Tensor2 readout(const Tensor2& z, ReadoutKind kind);
Value readout(Tape& tape, Value z, ReadoutKind kind);

Tensor2 head_forward(const HeadConfig& cfg, const ParamGroup& params, const Tensor2& z_g);
Value head_forward(Tape& tape, const HeadConfig& cfg,
                   const std::map<std::string, Value>& params, Value z_g);

enum class ParamFilter { All, Tunable, Frozen };
std::size_t param_count(const ParamGroup& group, ParamFilter filter);

std::string backbone_param_name(int layer, int sub);
std::string head_param_name(int layer, bool bias);

}  // namespace supt
