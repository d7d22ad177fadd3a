#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "stc/error.hpp"

namespace stc {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw UsageError("matrix data length " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
        }
    }
    Matrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw UsageError("ragged matrix initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<double> values() { return data_; }
    [[nodiscard]] std::span<const double> values() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    Matrix& operator+=(const Matrix& other) {
        require_same_shape(other, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    [[nodiscard]] bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    [[nodiscard]] bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    void require_same_shape(const Matrix& other, const char* what) const {
        if (!same_shape(other)) {
            throw UsageError(std::string("shape mismatch in ") + what + ": " + shape_string() +
                             " vs " + other.shape_string());
        }
    }

    [[nodiscard]] std::string shape_string() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a (r x k) * b (k x c). Each output row depends only on the matching input row.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw UsageError("matmul shape mismatch: " + a.shape_string() + " * " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto o = out.row(i);
        const auto ar = a.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double s = ar[k];
            if (s == 0.0) continue;
            const auto br = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) o[j] += s * br[j];
        }
    }
    return out;
}

/// a^T * b, with a (r x k) and b (r x c) giving (k x c).
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw UsageError("matmul_tn shape mismatch: " + a.shape_string() + "^T * " +
                         b.shape_string());
    }
    Matrix out(a.cols(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto ar = a.row(r);
        const auto br = b.row(r);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double s = ar[i];
            if (s == 0.0) continue;
            auto o = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) o[j] += s * br[j];
        }
    }
    return out;
}

/// a * b^T, with a (r x k) and b (c x k) giving (r x c).
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw UsageError("matmul_nt shape mismatch: " + a.shape_string() + " * " +
                         b.shape_string() + "^T");
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const auto ar = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const auto br = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ar[k] * br[k];
            out(i, j) = s;
        }
    }
    return out;
}

inline Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols()) {
        throw UsageError("vstack column mismatch: " + top.shape_string() + " / " +
                         bottom.shape_string());
    }
    Matrix out(top.rows() + bottom.rows(), top.cols());
    std::copy(top.values().begin(), top.values().end(), out.values().begin());
    std::copy(bottom.values().begin(), bottom.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(top.size()));
    return out;
}

inline Matrix hstack(const Matrix& left, const Matrix& right) {
    if (left.rows() != right.rows()) {
        throw UsageError("hstack row mismatch: " + left.shape_string() + " | " +
                         right.shape_string());
    }
    Matrix out(left.rows(), left.cols() + right.cols());
    for (std::size_t i = 0; i < left.rows(); ++i) {
        auto o = out.row(i);
        std::copy(left.row(i).begin(), left.row(i).end(), o.begin());
        std::copy(right.row(i).begin(), right.row(i).end(),
                  o.begin() + static_cast<std::ptrdiff_t>(left.cols()));
    }
    return out;
}

/// Rows [begin, begin + count).
inline Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t count) {
    if (begin + count > m.rows()) throw UsageError("slice_rows out of range");
    Matrix out(count, m.cols());
    const auto first = m.values().begin() + static_cast<std::ptrdiff_t>(begin * m.cols());
    std::copy(first, first + static_cast<std::ptrdiff_t>(count * m.cols()), out.values().begin());
    return out;
}

}  // namespace stc
