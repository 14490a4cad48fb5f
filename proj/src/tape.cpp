#include "supt/tape.hpp"

#include <cmath>

namespace supt {

Value Tape::push(Node n) {
    if (!n.out.all_finite()) {
        throw NumericError("non-finite values produced by tape op " +
                           std::to_string(static_cast<int>(n.op)));
    }
    nodes_.push_back(std::move(n));
    return Value{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Value v) const {
    if (v.id < 0 || v.id >= static_cast<std::int32_t>(nodes_.size())) {
        throw ContractError("value handle does not belong to this tape");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
}

const Tensor2& Tape::value(Value v) const { return node(v).out; }

Value Tape::leaf(const std::string& name, const Tensor2& t, bool tunable) {
    Node n;
    n.op = Op::Leaf;
    n.out = t;
    n.leaf_name = name;
    n.tunable = tunable;
    return push(std::move(n));
}

Value Tape::constant(const Tensor2& t) {
    Node n;
    n.op = Op::Constant;
    n.out = t;
    return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    n.out = supt::matmul(value(a), value(b));
    return push(std::move(n));
}

Value Tape::transpose(Value a) {
    Node n;
    n.op = Op::Transpose;
    n.a = a.id;
    n.out = supt::transpose(value(a));
    return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.out = supt::add(value(a), value(b));
    return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.out = supt::sub(value(a), value(b));
    return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.out = supt::mul(value(a), value(b));
    return push(std::move(n));
}

Value Tape::scale(Value a, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = a.id;
    n.scalar = c;
    n.out = supt::scale(value(a), c);
    return push(std::move(n));
}

Value Tape::add_row_broadcast(Value a, Value row) {
    Node n;
    n.op = Op::AddRowB;
    n.a = a.id;
    n.b = row.id;
    n.out = supt::add_row_broadcast(value(a), value(row));
    return push(std::move(n));
}

Value Tape::mul_row_broadcast(Value a, Value row) {
    Node n;
    n.op = Op::MulRowB;
    n.a = a.id;
    n.b = row.id;
    n.out = supt::mul_row_broadcast(value(a), value(row));
    return push(std::move(n));
}

Value Tape::mul_col_broadcast(Value a, Value col) {
    Node n;
    n.op = Op::MulColB;
    n.a = a.id;
    n.b = col.id;
    n.out = supt::mul_col_broadcast(value(a), value(col));
    return push(std::move(n));
}

Value Tape::sigmoid(Value a) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = a.id;
    n.out = supt::sigmoid(value(a));
    return push(std::move(n));
}

Value Tape::relu(Value a) {
    Node n;
    n.op = Op::Relu;
    n.a = a.id;
    n.out = supt::relu(value(a));
    return push(std::move(n));
}

Value Tape::row_softmax(Value a) {
    Node n;
    n.op = Op::RowSoftmax;
    n.a = a.id;
    n.out = supt::row_softmax(value(a));
    return push(std::move(n));
}

Value Tape::sum_all(Value a) {
    Node n;
    n.op = Op::SumAll;
    n.a = a.id;
    n.out = Tensor2(1, 1, supt::sum_all(value(a)));
    return push(std::move(n));
}

Value Tape::sum_rows(Value a) {
    Node n;
    n.op = Op::SumRows;
    n.a = a.id;
    n.out = supt::sum_rows(value(a));
    return push(std::move(n));
}

Value Tape::sum_cols(Value a) {
    Node n;
    n.op = Op::SumCols;
    n.a = a.id;
    n.out = supt::sum_cols(value(a));
    return push(std::move(n));
}

Value Tape::frobenius(Value a) {
    Node n;
    n.op = Op::Frobenius;
    n.a = a.id;
    n.out = Tensor2(1, 1, supt::frobenius(value(a)));
    return push(std::move(n));
}

Value Tape::gather_rows(Value a, std::span<const int> idx) {
    Node n;
    n.op = Op::GatherRows;
    n.a = a.id;
    n.indices.assign(idx.begin(), idx.end());
    n.out = supt::gather_rows(value(a), idx);
    return push(std::move(n));
}

Value Tape::bce_with_logits_masked(Value logits, const Tensor2& y, const Tensor2& mask) {
    const Tensor2& z = value(logits);
    if (!z.same_shape(y) || !z.same_shape(mask)) {
        throw ShapeError("bce_with_logits_masked: logits " + z.shape_str() + ", y " +
                         y.shape_str() + ", mask " + mask.shape_str());
    }
    double count = 0.0;
    for (double m : mask.data()) count += (m != 0.0 ? 1.0 : 0.0);
    if (count == 0.0) throw ContractError("bce_with_logits_masked: all entries masked out");

    double loss = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (mask[i] == 0.0) continue;
        const double zi = z[i];
        // max(z,0) - z*y + log(1 + exp(-|z|))
        loss += std::max(zi, 0.0) - zi * y[i] + std::log1p(std::exp(-std::fabs(zi)));
    }
    Node n;
    n.op = Op::BceMasked;
    n.a = logits.id;
    n.aux0 = y;
    n.aux1 = mask;
    n.scalar = count;
    n.out = Tensor2(1, 1, loss / count);
    return push(std::move(n));
}

Gradients Tape::backward(Value loss) const {
    const Node& ln = node(loss);
    if (!ln.out.is_scalar()) {
        throw ContractError("backward: loss must be scalar, got " + ln.out.shape_str());
    }

    std::vector<Tensor2> grads(nodes_.size());
    auto grad_of = [&](std::int32_t id) -> Tensor2& {
        Tensor2& g = grads[static_cast<std::size_t>(id)];
        if (g.size() == 0) g = Tensor2(nodes_[id].out.rows(), nodes_[id].out.cols());
        return g;
    };
    auto accum = [&](std::int32_t id, const Tensor2& delta) {
        Tensor2& g = grad_of(id);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
    };

    grad_of(loss.id).at(0, 0) = 1.0;

    for (std::int32_t id = loss.id; id >= 0; --id) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        const Tensor2& g = grads[static_cast<std::size_t>(id)];
        if (g.size() == 0) continue;  // not reachable from the loss

        switch (n.op) {
            case Op::Leaf:
            case Op::Constant:
                break;
            case Op::MatMul: {
                const Tensor2& a = nodes_[n.a].out;
                const Tensor2& b = nodes_[n.b].out;
                accum(n.a, supt::matmul(g, supt::transpose(b)));
                accum(n.b, supt::matmul(supt::transpose(a), g));
                break;
            }
            case Op::Transpose:
                accum(n.a, supt::transpose(g));
                break;
            case Op::Add:
                accum(n.a, g);
                accum(n.b, g);
                break;
            case Op::Sub:
                accum(n.a, g);
                accum(n.b, supt::scale(g, -1.0));
                break;
            case Op::Mul:
                accum(n.a, supt::mul(g, nodes_[n.b].out));
                accum(n.b, supt::mul(g, nodes_[n.a].out));
                break;
            case Op::Scale:
                accum(n.a, supt::scale(g, n.scalar));
                break;
            case Op::AddRowB:
                accum(n.a, g);
                accum(n.b, supt::sum_cols(g));
                break;
            case Op::MulRowB:
                accum(n.a, supt::mul_row_broadcast(g, nodes_[n.b].out));
                accum(n.b, supt::sum_cols(supt::mul(g, nodes_[n.a].out)));
                break;
            case Op::MulColB:
                accum(n.a, supt::mul_col_broadcast(g, nodes_[n.b].out));
                accum(n.b, supt::sum_rows(supt::mul(g, nodes_[n.a].out)));
                break;
            case Op::Sigmoid: {
                Tensor2 d = n.out;
                for (auto& v : d.data()) v = v * (1.0 - v);
                accum(n.a, supt::mul(g, d));
                break;
            }
            case Op::Relu: {
                const Tensor2& in = nodes_[n.a].out;
                Tensor2 d = g;
                for (std::size_t i = 0; i < d.size(); ++i)
                    if (in[i] <= 0.0) d[i] = 0.0;
                accum(n.a, d);
                break;
            }
            case Op::RowSoftmax: {
                const Tensor2& s = n.out;
                Tensor2 d(s.rows(), s.cols());
                for (int i = 0; i < s.rows(); ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < s.cols(); ++j) dot += g.at(i, j) * s.at(i, j);
                    for (int j = 0; j < s.cols(); ++j)
                        d.at(i, j) = s.at(i, j) * (g.at(i, j) - dot);
                }
                accum(n.a, d);
                break;
            }
            case Op::SumAll: {
                const Tensor2& in = nodes_[n.a].out;
                accum(n.a, Tensor2(in.rows(), in.cols(), g.scalar()));
                break;
            }
            case Op::SumRows: {
                const Tensor2& in = nodes_[n.a].out;
                Tensor2 d(in.rows(), in.cols());
                for (int i = 0; i < in.rows(); ++i)
                    for (int j = 0; j < in.cols(); ++j) d.at(i, j) = g.at(i, 0);
                accum(n.a, d);
                break;
            }
            case Op::SumCols: {
                const Tensor2& in = nodes_[n.a].out;
                Tensor2 d(in.rows(), in.cols());
                for (int i = 0; i < in.rows(); ++i)
                    for (int j = 0; j < in.cols(); ++j) d.at(i, j) = g.at(0, j);
                accum(n.a, d);
                break;
            }
            case Op::Frobenius: {
                const double norm = n.out.scalar();
                if (norm > 0.0) accum(n.a, supt::scale(nodes_[n.a].out, g.scalar() / norm));
                break;
            }
            case Op::GatherRows: {
                const Tensor2& in = nodes_[n.a].out;
                Tensor2 d(in.rows(), in.cols());
                for (std::size_t r = 0; r < n.indices.size(); ++r)
                    for (int j = 0; j < in.cols(); ++j)
                        d.at(n.indices[r], j) += g.at(static_cast<int>(r), j);
                accum(n.a, d);
                break;
            }
            case Op::BceMasked: {
                const Tensor2& z = nodes_[n.a].out;
                Tensor2 d(z.rows(), z.cols());
                const double s = g.scalar() / n.scalar;
                for (std::size_t i = 0; i < z.size(); ++i) {
                    if (n.aux1[i] == 0.0) continue;
                    d[i] = s * (sigmoid_scalar(z[i]) - n.aux0[i]);
                }
                accum(n.a, d);
                break;
            }
        }
    }

    Gradients out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.op != Op::Leaf || !n.tunable) continue;
        if (grads[i].size() == 0) {
            out.try_emplace(n.leaf_name, Tensor2(n.out.rows(), n.out.cols()));
        } else {
            auto [it, fresh] = out.try_emplace(n.leaf_name, grads[i]);
            if (!fresh) it->second = supt::add(it->second, grads[i]);
        }
    }
    return out;
}

std::map<std::string, Value> register_params(Tape& tape, const ParamGroup& params) {
    std::map<std::string, Value> out;
    for (const auto& e : params.entries()) {
        out[e.name] = tape.leaf(e.name, e.tensor, e.role == Role::Tunable);
    }
    return out;
}

}  // namespace supt
