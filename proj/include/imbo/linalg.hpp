#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace imbo {

/// Dense row-major matrix of doubles. Small and deliberately minimal:
/// the library only needs feature storage plus d x d covariance work.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void append_row(std::span<const double> r) {
        if (rows_ == 0 && cols_ == 0) cols_ = r.size();
        if (r.size() != cols_) throw std::invalid_argument("append_row: dimension mismatch");
        data_.insert(data_.end(), r.begin(), r.end());
        ++rows_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline std::vector<double> column_means(const Matrix& m) {
    std::vector<double> mu(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) mu[j] += r[j];
    }
    if (m.rows() > 0)
        for (double& v : mu) v /= static_cast<double>(m.rows());
    return mu;
}

/// Sample covariance with n-1 denominator, symmetrized.
inline Matrix sample_covariance(const Matrix& m) {
    if (m.rows() < 2) throw std::invalid_argument("sample_covariance: need at least 2 rows");
    const std::size_t n = m.rows(), d = m.cols();
    const auto mu = column_means(m);
    Matrix c(d, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double xj = r[j] - mu[j];
            for (std::size_t k = j; k < d; ++k) c(j, k) += xj * (r[k] - mu[k]);
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j; k < d; ++k) {
            c(j, k) /= denom;
            c(k, j) = c(j, k);
        }
    return c;
}

namespace detail {

// Plain lower-triangular Cholesky; fails on a non-positive pivot.
inline bool try_cholesky(const Matrix& a, Matrix& out) {
    const std::size_t d = a.rows();
    out = Matrix(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= out(j, k) * out(j, k);
        if (!(diag > 0.0)) return false;
        out(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = a(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= out(i, k) * out(j, k);
            out(i, j) = v / out(j, j);
        }
    }
    return true;
}

} // namespace detail

/// Cholesky factor L (lower, L*L^T = a) of a symmetric PSD matrix. A singular
/// but PSD input is rescued by one round of diagonal jitter 1e-12 * trace/d;
/// anything still failing after that is reported as not PSD.
inline Matrix cholesky_psd(Matrix a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("cholesky_psd: matrix not square");
    const std::size_t d = a.rows();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double s = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = s;
            a(j, i) = s;
        }
    Matrix l;
    if (detail::try_cholesky(a, l)) return l;
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += a(i, i);
    double jitter = 1e-12 * trace / static_cast<double>(d);
    if (!(jitter > 0.0)) jitter = std::numeric_limits<double>::min();
    for (std::size_t i = 0; i < d; ++i) a(i, i) += jitter;
    if (detail::try_cholesky(a, l)) return l;
    throw std::runtime_error("cholesky_psd: matrix is not positive semi-definite");
}

/// Solves L y = x in place for lower-triangular L.
inline void forward_solve_inplace(const Matrix& l, std::span<double> x) {
    const std::size_t d = l.rows();
    for (std::size_t i = 0; i < d; ++i) {
        double v = x[i];
        for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * x[k];
        x[i] = v / l(i, i);
    }
}

inline std::vector<double> matvec(const Matrix& a, std::span<const double> v) {
    std::vector<double> out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), v);
    return out;
}

/// A * A^T, used to recover a covariance from its factor.
inline Matrix aat(const Matrix& a) {
    Matrix out(a.rows(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i; j < a.rows(); ++j) {
            const double v = dot(a.row(i), a.row(j));
            out(i, j) = v;
            out(j, i) = v;
        }
    return out;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

} // namespace imbo
