/*
 * Copyright 2026 The lipkr authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIPKR_MATRIX_HPP
#define LIPKR_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lipkr {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. All entries are expected to stay
/// finite; `assert_finite` checks that at I/O boundaries.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, Vector values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_)
            throw std::invalid_argument("Matrix: values length " + std::to_string(values_.size()) +
                                        " does not match " + std::to_string(rows_) + "x" +
                                        std::to_string(cols_));
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return values_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }

    Vector& data() { return values_; }
    const Vector& data() const { return values_; }

    Vector row(std::size_t i) const {
        return Vector(values_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                      values_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
    }

    void set_row(std::size_t i, const Vector& r) {
        if (r.size() != cols_) throw std::invalid_argument("Matrix::set_row: length mismatch");
        for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = r[j];
    }

    Matrix& operator*=(double s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o, "operator+=");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o, "operator-=");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }

private:
    void check_same_shape(const Matrix& o, const char* op) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw std::invalid_argument(std::string("Matrix::") + op + ": shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector values_;
};

inline Matrix operator*(Matrix m, double s) { return m *= s; }
inline Matrix operator*(double s, Matrix m) { return m *= s; }
inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }

/// Standard matrix product (ikj loop order).
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: dimension mismatch " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " * " + std::to_string(b.rows()) +
                                    "x" + std::to_string(b.cols()));
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

inline Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols() != v.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vector out(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * v[j];
        out[i] = acc;
    }
    return out;
}

/// Computes m^T v without forming the transpose.
inline Vector matvec_transposed(const Matrix& m, const Vector& v) {
    if (m.rows() != v.size()) throw std::invalid_argument("matvec_transposed: dimension mismatch");
    Vector out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j) * vi;
    }
    return out;
}

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double l2_norm(const Vector& v) {
    double acc = 0.0;
    for (double e : v) acc += e * e;
    return std::sqrt(acc);
}

inline double l2_distance(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("l2_distance: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

inline double frobenius_norm(const Matrix& m) { return l2_norm(m.data()); }

inline double max_abs(const Matrix& m) {
    double best = 0.0;
    for (double v : m.data()) best = std::max(best, std::abs(v));
    return best;
}

inline double max_abs(const Vector& v) {
    double best = 0.0;
    for (double e : v) best = std::max(best, std::abs(e));
    return best;
}

inline void assert_finite(const Vector& v, const char* where) {
    for (double e : v)
        if (!std::isfinite(e)) throw std::runtime_error(std::string(where) + ": non-finite value");
}

inline void assert_finite(const Matrix& m, const char* where) { assert_finite(m.data(), where); }

inline Vector operator-(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("Vector operator-: dimension mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline Vector operator+(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("Vector operator+: dimension mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline Vector scaled(const Vector& v, double s) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * s;
    return out;
}

/// a += s * b
inline void axpy(Vector& a, double s, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("axpy: dimension mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

}  // namespace lipkr

#endif  // LIPKR_MATRIX_HPP
