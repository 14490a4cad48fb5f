#include "supt/optim.hpp"

#include <algorithm>
#include <cmath>

namespace supt {

void Adam::step(ParamGroup& params, const Gradients& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

    for (auto& e : params.entries()) {
        if (e.role != Role::Tunable) continue;
        auto git = grads.find(e.name);
        if (git == grads.end()) continue;
        const Tensor2& g = git->second;
        if (!g.same_shape(e.tensor)) {
            throw ContractError("adam: gradient shape " + g.shape_str() +
                                " does not match parameter " + e.name + " " +
                                e.tensor.shape_str());
        }
        auto [mit, fresh] = moments_.try_emplace(e.name);
        if (fresh) {
            mit->second.m = Tensor2(g.rows(), g.cols());
            mit->second.v = Tensor2(g.rows(), g.cols());
        }
        Tensor2& m = mit->second.m;
        Tensor2& v = mit->second.v;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double gi = g[i] + cfg_.weight_decay * e.tensor[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            e.tensor[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        if (!e.tensor.all_finite()) {
            throw NumericError("adam produced non-finite values in " + e.name);
        }
    }
}

GradCheckReport finite_diff_check(const Program& f, const ParamGroup& params,
                                  double step, double tol) {
    if (step < 1e-7 || step > 1e-3) {
        throw ContractError("finite_diff_check: step must be in [1e-7, 1e-3]");
    }

    Gradients analytic;
    {
        Tape tape;
        Value loss = f(tape, params);
        analytic = tape.backward(loss);
    }

    auto eval = [&](const ParamGroup& p) {
        Tape tape;
        Value loss = f(tape, p);
        const double v = tape.value(loss).scalar();
        if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite loss");
        return v;
    };

    GradCheckReport report;
    for (const auto& e : params.entries()) {
        if (e.role != Role::Tunable) continue;
        auto ait = analytic.find(e.name);
        if (ait == analytic.end()) {
            throw ContractError("finite_diff_check: no gradient reported for " + e.name);
        }
        for (std::size_t i = 0; i < e.tensor.size(); ++i) {
            ParamGroup probe = params;
            probe.tensor(e.name)[i] = e.tensor[i] + step;
            const double up = eval(probe);
            probe.tensor(e.name)[i] = e.tensor[i] - step;
            const double down = eval(probe);
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw NumericError("finite_diff_check: non-finite probe at " + e.name +
                                   "[" + std::to_string(i) + "]");
            }
            const double numeric = (up - down) / (2.0 * step);
            const double an = ait->second[i];
            const double rel = std::fabs(an - numeric) /
                               std::max({1.0, std::fabs(an), std::fabs(numeric)});
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = e.name;
                report.worst_index = static_cast<int>(i);
                report.analytic_at_worst = an;
                report.numeric_at_worst = numeric;
            }
        }
    }
    report.pass = report.max_rel_err <= tol;
    return report;
}

}  // namespace supt
