#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "plr/errors.hpp"

namespace plr {

// Dense row-major double matrix. Problem sizes here are desk scale
// (N <= ~1e5, dims in the tens), so plain loops beat pulling in a BLAS.
class Matrix {
public:
    Matrix() = default;

    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
        if (rows < 0 || cols < 0)
            throw PreconditionError("Matrix: negative shape");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& at(int r, int c) { return data_[index(r, c)]; }
    double at(int r, int c) const { return data_[index(r, c)]; }

    std::span<double> row(int r) {
        check_row(r);
        return {data_.data() + static_cast<std::size_t>(r) * cols_,
                static_cast<std::size_t>(cols_)};
    }
    std::span<const double> row(int r) const {
        check_row(r);
        return {data_.data() + static_cast<std::size_t>(r) * cols_,
                static_cast<std::size_t>(cols_)};
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t index(int r, int c) const {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
            throw IndexError("Matrix: index out of range");
        return static_cast<std::size_t>(r) * cols_ + c;
    }
    void check_row(int r) const {
        if (r < 0 || r >= rows_) throw IndexError("Matrix: row out of range");
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline void normalize_l2(std::span<double> v) {
    const double n = l2_norm(v);
    if (n < 1e-12) throw PreconditionError("normalize_l2: zero vector");
    for (double& x : v) x /= n;
}

inline void normalize_rows_l2(Matrix& m) {
    for (int r = 0; r < m.rows(); ++r) normalize_l2(m.row(r));
}

}  // namespace plr
