#pragma once

#include <functional>
#include <map>
#include <string>

#include "supt/param.hpp"
#include "supt/tape.hpp"

namespace supt {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Folded into the gradient before the moment update (classic Adam + L2).
    double weight_decay = 0.0;
    // Reserved for a future decoupled (AdamW-style) mode.
    bool decoupled_weight_decay = false;
};

// Adam with bias correction over the tunable entries of a ParamGroup. Frozen
// tensors are never touched, gradient or not.
class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    void step(ParamGroup& params, const Gradients& grads);

    const AdamConfig& config() const { return cfg_; }

private:
    struct Moments {
        Tensor2 m, v;
    };
    AdamConfig cfg_;
    std::map<std::string, Moments> moments_;
    long t_ = 0;
};

// A differentiable scalar program: builds a computation on the tape from the
// given parameters and returns the loss node.
using Program = std::function<Value(Tape&, const ParamGroup&)>;

struct GradCheckReport {
    bool pass = true;
    double max_rel_err = 0.0;
    std::string worst_param;
    int worst_index = -1;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

// Central-difference check of backward() for every tunable entry.
GradCheckReport finite_diff_check(const Program& f, const ParamGroup& params,
                                  double step = 1e-5, double tol = 1e-4);

}  // namespace supt
