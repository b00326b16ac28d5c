#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "imbo/bandwidth.hpp"
#include "imbo/linalg.hpp"

namespace imbo {

/// Multivariate Gaussian kernel density estimate,
/// f(x) = (1/n) sum_i K_bw(x - X_i). Evaluation accumulates in log space
/// with a max shift, so far-field queries underflow cleanly to 0.
class KdeModel {
public:
    static KdeModel fit(const Matrix& points, const BandwidthSpec& bw) {
        if (points.rows() == 0) throw std::invalid_argument("kde_fit: empty point set");
        if (!points.all_finite()) throw std::invalid_argument("kde_fit: non-finite point");
        const std::size_t d = points.cols();
        KdeModel m;
        m.points_ = points;
        m.bw_ = bw;
        if (bw.is_scalar()) {
            if (!(bw.h > 0.0)) throw std::invalid_argument("kde_fit: scalar bandwidth must be > 0");
            m.log_norm_ = 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) +
                          static_cast<double>(d) * std::log(bw.h);
        } else {
            if (bw.dim() != d) throw std::invalid_argument("kde_fit: bandwidth dimension mismatch");
            // chol(cov) rather than the stored factor: evaluation needs a
            // triangular solve, and any factor A with A*A^T = cov gives the
            // same kernel.
            m.eval_factor_ = cholesky_psd(bw.cov);
            double max_diag = 0.0;
            for (std::size_t j = 0; j < d; ++j) max_diag = std::max(max_diag, bw.cov(j, j));
            double logdet_half = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double l = m.eval_factor_(j, j);
                if (!(l * l > 1e-12 * max_diag) || !std::isfinite(l))
                    throw std::invalid_argument("kde_fit: singular matrix bandwidth");
                logdet_half += std::log(l);
            }
            m.log_norm_ = 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + logdet_half;
        }
        return m;
    }

    double log_density(std::span<const double> x) const {
        if (x.size() != dim()) throw std::invalid_argument("kde_evaluate: dimension mismatch");
        const std::size_t n = points_.rows();
        std::vector<double> expo(n);
        double max_e = -std::numeric_limits<double>::infinity();
        std::vector<double> diff(dim());
        for (std::size_t i = 0; i < n; ++i) {
            auto p = points_.row(i);
            double q;
            if (bw_.is_scalar()) {
                q = squared_distance(x, p) / (bw_.h * bw_.h);
            } else {
                for (std::size_t j = 0; j < dim(); ++j) diff[j] = x[j] - p[j];
                forward_solve_inplace(eval_factor_, diff);
                q = dot(diff, diff);
            }
            expo[i] = -0.5 * q;
            max_e = std::max(max_e, expo[i]);
        }
        double acc = 0.0;
        for (double e : expo) acc += std::exp(e - max_e);
        return max_e + std::log(acc) - std::log(static_cast<double>(n)) - log_norm_;
    }

    double evaluate(std::span<const double> x) const { return std::exp(log_density(x)); }

    std::vector<double> evaluate(const Matrix& queries) const {
        std::vector<double> out(queries.rows());
        for (std::size_t i = 0; i < queries.rows(); ++i) out[i] = evaluate(queries.row(i));
        return out;
    }

    std::size_t n() const { return points_.rows(); }
    std::size_t dim() const { return points_.cols(); }
    const Matrix& points() const { return points_; }
    const BandwidthSpec& bandwidth() const { return bw_; }
    double log_norm_const() const { return log_norm_; }

private:
    Matrix points_;
    BandwidthSpec bw_;
    Matrix eval_factor_;
    double log_norm_ = 0.0;
};

inline KdeModel kde_fit(const Matrix& points, const BandwidthSpec& bw) { return KdeModel::fit(points, bw); }

/// Axis-aligned box domain for quadrature.
struct Box {
    std::vector<double> lo, hi;
    std::size_t dim() const { return lo.size(); }
};

/// Midpoint tensor-grid estimate of the L1 distance between the KDE and a
/// known density; audit/test use only, d <= 3.
inline double l1_error_estimate(const KdeModel& model,
                                const std::function<double(std::span<const double>)>& true_density, const Box& domain,
                                std::size_t grid_per_dim) {
    const std::size_t d = model.dim();
    if (d > 3) throw std::invalid_argument("l1_error_estimate: grid quadrature limited to d <= 3");
    if (domain.dim() != d || domain.hi.size() != d) throw std::invalid_argument("l1_error_estimate: box dimension mismatch");
    if (grid_per_dim == 0) throw std::invalid_argument("l1_error_estimate: grid_per_dim must be >= 1");
    std::vector<double> step(d);
    double cell = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
        if (!(domain.hi[j] > domain.lo[j])) throw std::invalid_argument("l1_error_estimate: degenerate box");
        step[j] = (domain.hi[j] - domain.lo[j]) / static_cast<double>(grid_per_dim);
        cell *= step[j];
    }
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= grid_per_dim;
    std::vector<double> x(d);
    double acc = 0.0;
    for (std::size_t cellidx = 0; cellidx < total; ++cellidx) {
        std::size_t rem = cellidx;
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t ij = rem % grid_per_dim;
            rem /= grid_per_dim;
            x[j] = domain.lo[j] + (static_cast<double>(ij) + 0.5) * step[j];
        }
        acc += std::abs(model.evaluate(x) - true_density(x));
    }
    return acc * cell;
}

} // namespace imbo
