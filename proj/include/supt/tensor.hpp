#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "supt/errors.hpp"
#include "supt/rng.hpp"

namespace supt {

// Dense row-major matrix of doubles. Row vectors are 1xC, column vectors Rx1,
// scalars 1x1.
class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(int rows, int cols, double fill = 0.0);
    Tensor2(int rows, int cols, std::vector<double> values);

    static Tensor2 identity(int n);
    static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor2 row(std::initializer_list<double> values);
    static Tensor2 col(std::initializer_list<double> values);
    static Tensor2 random_uniform(int rows, int cols, double lo, double hi, Rng& rng);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    double& at(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> data() { return values_; }
    std::span<const double> data() const { return values_; }

    bool same_shape(const Tensor2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
    double scalar() const;
    bool all_finite() const;
    std::string shape_str() const;

    bool operator==(const Tensor2& o) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> values_;
};

// Plain (untaped) kernels. The tape in tape.hpp reuses these for its forward
// pass.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
Tensor2 transpose(const Tensor2& a);
Tensor2 add(const Tensor2& a, const Tensor2& b);
Tensor2 sub(const Tensor2& a, const Tensor2& b);
Tensor2 mul(const Tensor2& a, const Tensor2& b);
Tensor2 scale(const Tensor2& a, double c);
// Adds a 1xC row vector to every row of a (the broadcasted addition of the
// score computation).
Tensor2 add_row_broadcast(const Tensor2& a, const Tensor2& row);
Tensor2 mul_row_broadcast(const Tensor2& a, const Tensor2& row);
// Scales row i of a by col[i] (col is Rx1).
Tensor2 mul_col_broadcast(const Tensor2& a, const Tensor2& col);
Tensor2 sigmoid(const Tensor2& a);
Tensor2 relu(const Tensor2& a);
Tensor2 row_softmax(const Tensor2& a);
Tensor2 col_softmax(const Tensor2& a);
double sum_all(const Tensor2& a);
Tensor2 sum_rows(const Tensor2& a);  // Rx1 column of row sums
Tensor2 sum_cols(const Tensor2& a);  // 1xC row of column sums
double frobenius(const Tensor2& a);
Tensor2 gather_rows(const Tensor2& a, std::span<const int> idx);

double sigmoid_scalar(double x);

}  // namespace supt
