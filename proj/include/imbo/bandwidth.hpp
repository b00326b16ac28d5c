#pragma once

#include <cmath>
#include <stdexcept>

#include "imbo/linalg.hpp"

namespace imbo {

/// Kernel bandwidth, either a scalar h or a matrix given by the pair
/// (cov, factor) with factor * factor^T = cov. `factor` is the transform
/// applied to standard Gaussian noise, so `cov` is the covariance of the
/// kernel; the scalar case corresponds to cov = h^2 I.
struct BandwidthSpec {
    enum class Kind { scalar, matrix };

    Kind kind = Kind::scalar;
    double h = 0.0;
    Matrix cov;    // d x d symmetric PSD
    Matrix factor; // d x d with factor * factor^T = cov

    static BandwidthSpec scalar(double h) {
        if (!(h >= 0.0) || !std::isfinite(h)) throw std::invalid_argument("BandwidthSpec: scalar h must be >= 0");
        BandwidthSpec b;
        b.kind = Kind::scalar;
        b.h = h;
        return b;
    }

    /// Matrix bandwidth from the kernel covariance; the factor is its
    /// Cholesky root.
    static BandwidthSpec from_covariance(const Matrix& cov) {
        BandwidthSpec b;
        b.kind = Kind::matrix;
        b.factor = cholesky_psd(cov);
        b.cov = cov;
        return b;
    }

    /// Matrix bandwidth from an explicit noise transform A (kernel
    /// covariance A * A^T).
    static BandwidthSpec from_transform(const Matrix& a) {
        if (a.rows() != a.cols()) throw std::invalid_argument("BandwidthSpec: transform must be square");
        BandwidthSpec b;
        b.kind = Kind::matrix;
        b.factor = a;
        b.cov = aat(a);
        return b;
    }

    bool is_scalar() const { return kind == Kind::scalar; }
    std::size_t dim() const { return cov.rows(); }
};

/// Scott's rule-of-thumb bandwidth: transform scale * n^(-1/(d+4)) * chol(C)
/// with C the sample covariance (n-1 denominator), so the kernel covariance
/// is scale^2 * n^(-2/(d+4)) * C. `scale` is the c in the H = c*H1 sweeps.
inline BandwidthSpec scott_bandwidth(const Matrix& points, double scale = 1.0) {
    if (points.rows() < 2) throw std::invalid_argument("scott_bandwidth: need at least 2 points");
    if (!(scale > 0.0)) throw std::invalid_argument("scott_bandwidth: scale must be > 0");
    const auto c = sample_covariance(points);
    Matrix factor = cholesky_psd(c);
    const double rate =
        scale * std::pow(static_cast<double>(points.rows()), -1.0 / (static_cast<double>(points.cols()) + 4.0));
    for (double& v : factor.data()) v *= rate;
    return BandwidthSpec::from_transform(factor);
}

} // namespace imbo
