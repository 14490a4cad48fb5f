#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "supt/param.hpp"
#include "supt/tensor.hpp"

namespace supt {

// Handle to a node on a Tape.
struct Value {
    std::int32_t id = -1;
};

using Gradients = std::map<std::string, Tensor2>;

// Reverse-mode tape over Tensor2 primitives. Operations record themselves in
// execution order; backward() replays them in exact reverse order and returns
// gradients for every tunable leaf (zeros for leaves the loss never touched).
// A tape is confined to a single worker.
class Tape {
public:
    Value leaf(const std::string& name, const Tensor2& t, bool tunable);
    Value constant(const Tensor2& t);

    Value matmul(Value a, Value b);
    Value transpose(Value a);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value scale(Value a, double c);
    Value add_row_broadcast(Value a, Value row);
    Value mul_row_broadcast(Value a, Value row);
    Value mul_col_broadcast(Value a, Value col);
    Value sigmoid(Value a);
    Value relu(Value a);
    Value row_softmax(Value a);
    Value sum_all(Value a);   // 1x1
    Value sum_rows(Value a);  // Rx1
    Value sum_cols(Value a);  // 1xC
    Value frobenius(Value a);  // 1x1
    Value gather_rows(Value a, std::span<const int> idx);
    // Mean of the numerically stable binary cross entropy with logits over the
    // entries where mask is nonzero. y and mask are constants.
    Value bce_with_logits_masked(Value logits, const Tensor2& y, const Tensor2& mask);

    const Tensor2& value(Value v) const;
    std::size_t num_nodes() const { return nodes_.size(); }

    Gradients backward(Value loss) const;

private:
    enum class Op {
        Leaf, Constant, MatMul, Transpose, Add, Sub, Mul, Scale,
        AddRowB, MulRowB, MulColB, Sigmoid, Relu, RowSoftmax,
        SumAll, SumRows, SumCols, Frobenius, GatherRows, BceMasked,
    };
    struct Node {
        Op op;
        std::int32_t a = -1;
        std::int32_t b = -1;
        double scalar = 0.0;
        std::vector<int> indices;   // GatherRows
        Tensor2 aux0, aux1;         // BceMasked: y, mask
        Tensor2 out;
        std::string leaf_name;
        bool tunable = false;
    };

    Value push(Node n);
    const Node& node(Value v) const;

    std::vector<Node> nodes_;
};

// Leaf every entry of a ParamGroup onto the tape; tunable iff Role::Tunable.
std::map<std::string, Value> register_params(Tape& tape, const ParamGroup& params);

}  // namespace supt
