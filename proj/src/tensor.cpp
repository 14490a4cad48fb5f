#include "supt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace supt {

namespace {

void require_same_shape(const Tensor2& a, const Tensor2& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shapes " + a.shape_str() + " and " +
                         b.shape_str() + " differ");
    }
}

}  // namespace

Tensor2::Tensor2(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), values_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw ShapeError("negative tensor dimension");
}

Tensor2::Tensor2(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(rows) * cols) {
        throw ShapeError("value count does not match " + shape_str());
    }
}

Tensor2 Tensor2::identity(int n) {
    Tensor2 t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Tensor2 t(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) throw ShapeError("ragged initializer rows");
        int j = 0;
        for (double v : row) t.at(i, j++) = v;
        ++i;
    }
    return t;
}

Tensor2 Tensor2::row(std::initializer_list<double> values) {
    Tensor2 t(1, static_cast<int>(values.size()));
    int j = 0;
    for (double v : values) t.at(0, j++) = v;
    return t;
}

Tensor2 Tensor2::col(std::initializer_list<double> values) {
    Tensor2 t(static_cast<int>(values.size()), 1);
    int i = 0;
    for (double v : values) t.at(i++, 0) = v;
    return t;
}

Tensor2 Tensor2::random_uniform(int rows, int cols, double lo, double hi, Rng& rng) {
    Tensor2 t(rows, cols);
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

double Tensor2::scalar() const {
    if (!is_scalar()) throw ContractError("expected scalar, got " + shape_str());
    return values_[0];
}

bool Tensor2::all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
}

std::string Tensor2::shape_str() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
    }
    Tensor2 out(a.rows(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (int i = 0; i < n; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = pa[static_cast<std::size_t>(i) * k + p];
            if (av == 0.0) continue;
            const double* brow = pb + static_cast<std::size_t>(p) * m;
            double* orow = po + static_cast<std::size_t>(i) * m;
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor2 transpose(const Tensor2& a) {
    Tensor2 out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Tensor2 add(const Tensor2& a, const Tensor2& b) {
    require_same_shape(a, b, "add");
    Tensor2 out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Tensor2 sub(const Tensor2& a, const Tensor2& b) {
    require_same_shape(a, b, "sub");
    Tensor2 out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Tensor2 mul(const Tensor2& a, const Tensor2& b) {
    require_same_shape(a, b, "mul");
    Tensor2 out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

Tensor2 scale(const Tensor2& a, double c) {
    Tensor2 out = a;
    for (auto& v : out.data()) v *= c;
    return out;
}

Tensor2 add_row_broadcast(const Tensor2& a, const Tensor2& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("add_row_broadcast: " + a.shape_str() + " + " + row.shape_str());
    }
    Tensor2 out = a;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.at(i, j) += row.at(0, j);
    return out;
}

Tensor2 mul_row_broadcast(const Tensor2& a, const Tensor2& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("mul_row_broadcast: " + a.shape_str() + " * " + row.shape_str());
    }
    Tensor2 out = a;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.at(i, j) *= row.at(0, j);
    return out;
}

Tensor2 mul_col_broadcast(const Tensor2& a, const Tensor2& col) {
    if (col.cols() != 1 || col.rows() != a.rows()) {
        throw ShapeError("mul_col_broadcast: " + a.shape_str() + " * " + col.shape_str());
    }
    Tensor2 out = a;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.at(i, j) *= col.at(i, 0);
    return out;
}

double sigmoid_scalar(double x) {
    // Stable in both tails.
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor2 sigmoid(const Tensor2& a) {
    Tensor2 out = a;
    for (auto& v : out.data()) v = sigmoid_scalar(v);
    return out;
}

Tensor2 relu(const Tensor2& a) {
    Tensor2 out = a;
    for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor2 row_softmax(const Tensor2& a) {
    if (a.cols() < 1) throw ShapeError("row_softmax: empty rows");
    Tensor2 out = a;
    for (int i = 0; i < a.rows(); ++i) {
        double mx = a.at(i, 0);
        for (int j = 1; j < a.cols(); ++j) mx = std::max(mx, a.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < a.cols(); ++j) {
            const double e = std::exp(a.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < a.cols(); ++j) out.at(i, j) /= sum;
    }
    return out;
}

Tensor2 col_softmax(const Tensor2& a) {
    return transpose(row_softmax(transpose(a)));
}

double sum_all(const Tensor2& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s;
}

Tensor2 sum_rows(const Tensor2& a) {
    Tensor2 out(a.rows(), 1);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a.at(i, j);
        out.at(i, 0) = s;
    }
    return out;
}

Tensor2 sum_cols(const Tensor2& a) {
    Tensor2 out(1, a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.at(0, j) += a.at(i, j);
    return out;
}

double frobenius(const Tensor2& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

Tensor2 gather_rows(const Tensor2& a, std::span<const int> idx) {
    Tensor2 out(static_cast<int>(idx.size()), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= a.rows()) {
            throw ShapeError("gather_rows: index " + std::to_string(idx[i]) +
                             " out of range for " + a.shape_str());
        }
        for (int j = 0; j < a.cols(); ++j) out.at(static_cast<int>(i), j) = a.at(idx[i], j);
    }
    return out;
}

}  // namespace supt
