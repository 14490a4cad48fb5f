#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "supt/optim.hpp"
#include "supt/tape.hpp"
#include "supt/tensor.hpp"

using namespace supt;

TEST_CASE("matmul basics") {
    const auto a = Tensor2::from_rows({{1, 2}, {3, 4}});
    CHECK(matmul(a, Tensor2::identity(2)) == a);

    const auto r = matmul(Tensor2::from_rows({{1, 2}}), Tensor2::from_rows({{3}, {4}}));
    CHECK(r.rows() == 1);
    CHECK(r.at(0, 0) == doctest::Approx(11.0));

    CHECK_THROWS_AS(matmul(Tensor2(2, 3), Tensor2(2, 2)), ShapeError);
}

TEST_CASE("elementwise kernels") {
    CHECK(sigmoid(Tensor2(1, 1, 0.0)).at(0, 0) == doctest::Approx(0.5));
    const auto r = relu(Tensor2::row({-1, 2}));
    CHECK(r.at(0, 0) == 0.0);
    CHECK(r.at(0, 1) == 2.0);

    const auto b = add_row_broadcast(Tensor2::from_rows({{1, 1}, {2, 2}}), Tensor2::row({10, 20}));
    CHECK(b == Tensor2::from_rows({{11, 21}, {12, 22}}));

    CHECK_THROWS_AS(add(Tensor2(2, 2), Tensor2(2, 3)), ShapeError);
    CHECK_THROWS_AS(add_row_broadcast(Tensor2(2, 2), Tensor2(1, 3)), ShapeError);
}

TEST_CASE("sigmoid is stable in the tails") {
    CHECK(sigmoid(Tensor2(1, 1, 800.0)).at(0, 0) == doctest::Approx(1.0));
    CHECK(sigmoid(Tensor2(1, 1, -800.0)).at(0, 0) == doctest::Approx(0.0));
    CHECK(sigmoid(Tensor2(1, 1, -800.0)).all_finite());
}

TEST_CASE("row_softmax") {
    const auto u = row_softmax(Tensor2::row({0, 0}));
    CHECK(u.at(0, 0) == doctest::Approx(0.5));

    const auto s = row_softmax(Tensor2::row({std::log(2.0), 0}));
    CHECK(s.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(s.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const auto t = row_softmax(Tensor2::row({1000, 0}));
    CHECK(std::fabs(t.at(0, 0) - 1.0) <= 1e-12);
    CHECK(std::fabs(t.at(0, 1)) <= 1e-12);
}

TEST_CASE("row_softmax rows sum to 1 for large-magnitude inputs") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int r = 1 + static_cast<int>(rng.next() % 6);
        const int c = 1 + static_cast<int>(rng.next() % 6);
        const auto x = Tensor2::random_uniform(r, c, -1e3, 1e3, rng);
        const auto s = row_softmax(x);
        for (int i = 0; i < r; ++i) {
            double sum = 0.0;
            for (int j = 0; j < c; ++j) sum += s.at(i, j);
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("reductions") {
    CHECK(frobenius(Tensor2::identity(2)) == doctest::Approx(std::sqrt(2.0)));
    CHECK(sum_all(Tensor2(3, 3)) == 0.0);
    const auto rs = sum_rows(Tensor2::from_rows({{1, 2}, {3, 4}}));
    CHECK(rs == Tensor2::col({3, 7}));
    const auto cs = sum_cols(Tensor2::from_rows({{1, 2}, {3, 4}}));
    CHECK(cs == Tensor2::row({4, 6}));
}

TEST_CASE("backward basics") {
    SUBCASE("linear map") {
        Tape tape;
        Value x = tape.leaf("x", Tensor2(2, 2, 1.5), true);
        auto grads = tape.backward(tape.sum_all(x));
        CHECK(grads.at("x") == Tensor2(2, 2, 1.0));
    }
    SUBCASE("square") {
        Tape tape;
        Value x = tape.leaf("x", Tensor2(1, 1, 3.0), true);
        auto grads = tape.backward(tape.sum_all(tape.mul(x, x)));
        CHECK(grads.at("x").at(0, 0) == doctest::Approx(6.0));
    }
    SUBCASE("untouched leaf gets zero gradient") {
        Tape tape;
        Value x = tape.leaf("x", Tensor2(1, 1, 3.0), true);
        Value w = tape.leaf("w", Tensor2(2, 2, 1.0), true);
        (void)w;
        auto grads = tape.backward(tape.sum_all(x));
        CHECK(grads.at("w") == Tensor2(2, 2, 0.0));
    }
    SUBCASE("loss must be scalar") {
        Tape tape;
        Value x = tape.leaf("x", Tensor2(2, 2, 1.0), true);
        CHECK_THROWS_AS(tape.backward(x), ContractError);
    }
}

TEST_CASE("backward is deterministic across evaluations") {
    auto run = [] {
        Tape tape;
        Rng rng(11);
        Value x = tape.leaf("x", Tensor2::random_uniform(4, 3, -1, 1, rng), true);
        Value w = tape.leaf("w", Tensor2::random_uniform(3, 2, -1, 1, rng), true);
        Value loss = tape.frobenius(tape.sigmoid(tape.matmul(x, w)));
        return tape.backward(loss);
    };
    auto g1 = run();
    auto g2 = run();
    CHECK(g1.at("x") == g2.at("x"));
    CHECK(g1.at("w") == g2.at("w"));
}

TEST_CASE("finite_diff_check closed-form cases") {
    SUBCASE("linear program is exact") {
        ParamGroup p;
        p.add("x", Tensor2(2, 2, 0.3), Role::Tunable);
        auto f = [](Tape& t, const ParamGroup& pg) {
            auto leaves = register_params(t, pg);
            return t.sum_all(t.scale(leaves.at("x"), 3.0));
        };
        auto report = finite_diff_check(f, p);
        CHECK(report.pass);
        CHECK(report.max_rel_err <= 1e-10);
    }
    SUBCASE("sigmoid at zero") {
        ParamGroup p;
        p.add("x", Tensor2(1, 1, 0.0), Role::Tunable);
        auto f = [](Tape& t, const ParamGroup& pg) {
            auto leaves = register_params(t, pg);
            return t.sum_all(t.sigmoid(leaves.at("x")));
        };
        Tape tape;
        auto grads = tape.backward(f(tape, p));
        CHECK(grads.at("x").at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
        auto report = finite_diff_check(f, p, 1e-5, 1e-6);
        CHECK(report.pass);
    }
    SUBCASE("corrupted gradient is caught and named") {
        ParamGroup p;
        p.add("x", Tensor2(1, 1, 0.2), Role::Tunable);
        // A "gradient" off by +0.1: loss adds a term whose tape gradient is
        // deliberately mismatched by routing through a constant.
        auto f = [](Tape& t, const ParamGroup& pg) {
            auto leaves = register_params(t, pg);
            // forward value depends on x but the tape only sees 0.9*x
            Value v = t.scale(leaves.at("x"), 0.9);
            Value c = t.constant(supt::scale(pg.tensor("x"), 0.1));
            return t.sum_all(t.add(v, c));
        };
        auto report = finite_diff_check(f, p);
        CHECK_FALSE(report.pass);
        CHECK(report.worst_param == "x");
    }
    SUBCASE("step outside bounds rejected") {
        ParamGroup p;
        p.add("x", Tensor2(1, 1, 0.0), Role::Tunable);
        auto f = [](Tape& t, const ParamGroup& pg) {
            return t.sum_all(register_params(t, pg).at("x"));
        };
        CHECK_THROWS_AS(finite_diff_check(f, p, 1e-2), ContractError);
    }
}

namespace {

// One randomized scalar program per primitive; finite differences must match
// the tape everywhere.
Program random_program_for(int op, Rng shape_rng) {
    const int r = 1 + static_cast<int>(shape_rng.next() % 8);
    const int c = 1 + static_cast<int>(shape_rng.next() % 8);
    const int k = 1 + static_cast<int>(shape_rng.next() % 8);
    return [op, r, c, k](Tape& t, const ParamGroup& pg) {
        auto leaves = register_params(t, pg);
        Value x = leaves.at("x");
        Value y = leaves.count("y") ? leaves.at("y") : x;
        Value out = x;
        switch (op) {
            case 0: out = t.matmul(x, y); break;
            case 1: out = t.add(x, y); break;
            case 2: out = t.sub(x, y); break;
            case 3: out = t.mul(x, y); break;
            case 4: out = t.scale(x, -1.7); break;
            case 5: out = t.add_row_broadcast(x, y); break;
            case 6: out = t.mul_row_broadcast(x, y); break;
            case 7: out = t.mul_col_broadcast(x, y); break;
            case 8: out = t.sigmoid(x); break;
            case 9: out = t.relu(x); break;
            case 10: out = t.row_softmax(x); break;
            case 11: out = t.sum_rows(x); break;
            case 12: out = t.sum_cols(x); break;
            case 13: return t.frobenius(x);
            case 14: out = t.transpose(x); break;
            case 15: {
                std::vector<int> idx;
                for (int i = 0; i < r; i += 2) idx.push_back(i);
                if (idx.empty()) idx.push_back(0);
                out = t.gather_rows(x, idx);
                break;
            }
            case 16: {
                Tensor2 yv(r, c), mask(r, c);
                Rng lr(static_cast<std::uint64_t>(r * 131 + c));
                for (std::size_t i = 0; i < yv.size(); ++i) {
                    yv[i] = lr.bernoulli(0.5) ? 1.0 : 0.0;
                    mask[i] = lr.bernoulli(0.7) ? 1.0 : 0.0;
                }
                mask[0] = 1.0;
                return t.bce_with_logits_masked(x, yv, mask);
            }
            default: break;
        }
        // Random-ish fixed weighting makes the cotangent nontrivial.
        Tensor2 weight(t.value(out).rows(), t.value(out).cols());
        Rng wr(static_cast<std::uint64_t>(op * 977 + 5));
        for (auto& v : weight.data()) v = wr.uniform(-1.0, 1.0);
        return t.sum_all(t.mul(out, t.constant(weight)));
    };
}

ParamGroup random_params_for(int op, Rng shape_rng, Rng& value_rng) {
    const int r = 1 + static_cast<int>(shape_rng.next() % 8);
    const int c = 1 + static_cast<int>(shape_rng.next() % 8);
    const int k = 1 + static_cast<int>(shape_rng.next() % 8);
    ParamGroup pg;
    pg.add("x", Tensor2::random_uniform(r, c, -1.0, 1.0, value_rng), Role::Tunable);
    switch (op) {
        case 0: pg.add("y", Tensor2::random_uniform(c, k, -1.0, 1.0, value_rng), Role::Tunable); break;
        case 1:
        case 2:
        case 3: pg.add("y", Tensor2::random_uniform(r, c, -1.0, 1.0, value_rng), Role::Tunable); break;
        case 5:
        case 6: pg.add("y", Tensor2::random_uniform(1, c, -1.0, 1.0, value_rng), Role::Tunable); break;
        case 7: pg.add("y", Tensor2::random_uniform(r, 1, -1.0, 1.0, value_rng), Role::Tunable); break;
        default: break;
    }
    return pg;
}

}  // namespace

TEST_CASE("every primitive passes randomized gradient checks") {
    constexpr int kOps = 17;
    int seed = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const int op = rep % kOps;
        Rng shapes(static_cast<std::uint64_t>(1000 + rep));
        Rng values(static_cast<std::uint64_t>(2000 + rep));
        ParamGroup pg = random_params_for(op, shapes, values);
        auto f = random_program_for(op, shapes);
        auto report = finite_diff_check(f, pg, 1e-5, 1e-4);
        INFO("op ", op, " rep ", rep, " worst ", report.worst_param, " err ",
             report.max_rel_err);
        CHECK(report.pass);
        ++seed;
    }
    CHECK(seed == 100);
}

TEST_CASE("adam") {
    SUBCASE("zero gradient leaves params unchanged") {
        ParamGroup p;
        p.add("w", Tensor2(2, 2, 0.7), Role::Tunable);
        Gradients g{{"w", Tensor2(2, 2, 0.0)}};
        Adam adam({.lr = 0.1});
        adam.step(p, g);
        CHECK(p.tensor("w") == Tensor2(2, 2, 0.7));
    }
    SUBCASE("first step moves by ~lr for unit gradient") {
        ParamGroup p;
        p.add("w", Tensor2(1, 1, 1.0), Role::Tunable);
        Gradients g{{"w", Tensor2(1, 1, 1.0)}};
        Adam adam({.lr = 0.1});
        adam.step(p, g);
        CHECK(p.tensor("w").at(0, 0) == doctest::Approx(0.9).epsilon(1e-6));
    }
    SUBCASE("frozen tensors are bit-identical even with nonzero gradient") {
        ParamGroup p;
        p.add("frozen", Tensor2(2, 2, 0.123456789), Role::Frozen);
        p.add("tunable", Tensor2(2, 2, 1.0), Role::Tunable);
        const Tensor2 before = p.tensor("frozen");
        Gradients g{{"frozen", Tensor2(2, 2, 5.0)}, {"tunable", Tensor2(2, 2, 1.0)}};
        Adam adam({.lr = 0.1, .weight_decay = 1e-3});
        adam.step(p, g);
        CHECK(std::memcmp(p.tensor("frozen").data().data(), before.data().data(),
                          before.size() * sizeof(double)) == 0);
        CHECK(p.tensor("tunable") != Tensor2(2, 2, 1.0));
    }
    SUBCASE("gradient shape mismatch rejected") {
        ParamGroup p;
        p.add("w", Tensor2(2, 2, 1.0), Role::Tunable);
        Gradients g{{"w", Tensor2(1, 2, 1.0)}};
        Adam adam({.lr = 0.1});
        CHECK_THROWS_AS(adam.step(p, g), ContractError);
    }
}

TEST_CASE("weight decay is folded into the gradient") {
    // With grad 0 and weight decay, the effective gradient is wd*w, so the
    // first bias-corrected step is lr * sign(w).
    ParamGroup p;
    p.add("w", Tensor2(1, 1, 2.0), Role::Tunable);
    Gradients g{{"w", Tensor2(1, 1, 0.0)}};
    Adam adam({.lr = 0.01, .weight_decay = 0.1});
    adam.step(p, g);
    CHECK(p.tensor("w").at(0, 0) == doctest::Approx(1.99).epsilon(1e-4));
}
