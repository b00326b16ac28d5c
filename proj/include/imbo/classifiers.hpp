#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "imbo/dataset.hpp"
#include "imbo/kde.hpp"
#include "imbo/neighbors.hpp"

namespace imbo {

struct PredictionSet {
    std::vector<std::uint8_t> labels;
    std::vector<double> scores; // eta or decision margin, aligned with labels
};

// ---------------------------------------------------------------------------
// Kernel smoothing plug-in rule: predict 1 where the class-1 density estimate
// strictly exceeds the class-0 estimate. An empty class contributes density 0
// everywhere; exact ties go to label 0.
// ---------------------------------------------------------------------------

class KsPluginModel {
public:
    static KsPluginModel fit(const LabeledDataset& ds, const BandwidthSpec& bw0, const BandwidthSpec& bw1) {
        const ClassView view = partition_classes(ds);
        if (view.n0 == 0 && view.n1 == 0) throw std::invalid_argument("fit_ks_plugin: both classes empty");
        KsPluginModel m;
        m.bw0_ = bw0;
        m.bw1_ = bw1;
        if (view.n0 > 0) m.kde0_ = KdeModel::fit(gather(ds, view.majority_indices), bw0);
        if (view.n1 > 0) m.kde1_ = KdeModel::fit(gather(ds, view.minority_indices), bw1);
        return m;
    }

    double density0(std::span<const double> x) const { return kde0_ ? kde0_->evaluate(x) : 0.0; }
    double density1(std::span<const double> x) const { return kde1_ ? kde1_->evaluate(x) : 0.0; }

    int predict_point(std::span<const double> x) const { return density1(x) > density0(x) ? 1 : 0; }

    PredictionSet predict(const Matrix& queries) const {
        PredictionSet p;
        p.labels.resize(queries.rows());
        p.scores.resize(queries.rows());
        for (std::size_t i = 0; i < queries.rows(); ++i) {
            auto x = queries.row(i);
            const double f1 = density1(x), f0 = density0(x);
            p.scores[i] = f1 - f0;
            p.labels[i] = f1 > f0 ? 1 : 0;
        }
        return p;
    }

    const std::optional<KdeModel>& class0_kde() const { return kde0_; }
    const std::optional<KdeModel>& class1_kde() const { return kde1_; }
    const BandwidthSpec& bw0() const { return bw0_; }
    const BandwidthSpec& bw1() const { return bw1_; }

private:
    static Matrix gather(const LabeledDataset& ds, const std::vector<std::size_t>& rows) {
        Matrix m(rows.size(), ds.dim());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto src = ds.features.row(rows[i]);
            std::copy(src.begin(), src.end(), m.row(i).begin());
        }
        return m;
    }

    std::optional<KdeModel> kde0_, kde1_;
    BandwidthSpec bw0_, bw1_;
};

inline KsPluginModel fit_ks_plugin(const LabeledDataset& ds, const BandwidthSpec& bw0, const BandwidthSpec& bw1) {
    return KsPluginModel::fit(ds, bw0, bw1);
}

/// Which sample size enters the Scott rate for the per-class KS bandwidths.
/// The study's rule uses the majority count n0 for both classes (after
/// balancing both classes hold n0 points); per_class is the variant for the
/// plug-in rule on raw data.
enum class KsCountMode { majority_count, per_class };

/// Per-class Scott bandwidths S_j with transform n_ref^(-1/(d+4)) * chol(C_j),
/// i.e. kernel covariance n_ref^(-2/(d+4)) * C_j. An empty class gets a
/// placeholder scalar(0) bandwidth, which the plug-in fit never touches.
inline std::pair<BandwidthSpec, BandwidthSpec> ks_scott_bandwidths(const LabeledDataset& ds,
                                                                   KsCountMode mode = KsCountMode::majority_count) {
    const ClassView view = partition_classes(ds);
    if (mode == KsCountMode::majority_count && view.n0 == 0)
        throw std::invalid_argument("ks_scott_bandwidths: majority class empty");
    const double dd = static_cast<double>(ds.dim());
    auto one = [&](const std::vector<std::size_t>& rows, std::size_t n_ref) -> BandwidthSpec {
        if (rows.empty()) return BandwidthSpec::scalar(0.0);
        if (rows.size() < 2) throw std::invalid_argument("ks_scott_bandwidths: class with < 2 points");
        Matrix pts(rows.size(), ds.dim());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto src = ds.features.row(rows[i]);
            std::copy(src.begin(), src.end(), pts.row(i).begin());
        }
        Matrix factor = cholesky_psd(sample_covariance(pts));
        const double rate = std::pow(static_cast<double>(n_ref), -1.0 / (dd + 4.0));
        for (double& v : factor.data()) v *= rate;
        return BandwidthSpec::from_transform(factor);
    };
    const std::size_t ref1 = mode == KsCountMode::majority_count ? view.n0 : view.n1;
    return {one(view.majority_indices, view.n0), one(view.minority_indices, ref1)};
}

// ---------------------------------------------------------------------------
// KNN classifier. eta(x) is the label-1 fraction among the K nearest training
// points (no self-exclusion at predict time); the label is 1{eta > threshold}.
// The balanced Bayes variant (BBC) thresholds at the empirical prior p_hat of
// the raw training set instead of 1/2.
// ---------------------------------------------------------------------------

class KnnModel {
public:
    static KnnModel fit(const LabeledDataset& ds, std::size_t K, double threshold = 0.5) {
        if (ds.n() == 0) throw std::invalid_argument("fit_knn: empty dataset");
        if (K < 1 || K > ds.n()) throw std::invalid_argument("fit_knn: K out of range");
        if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("fit_knn: threshold must be in [0,1]");
        KnnModel m;
        m.index_ = NeighborIndex::build(ds.features);
        m.labels_ = ds.labels;
        m.K_ = K;
        m.threshold_ = threshold;
        return m;
    }

    double eta(std::span<const double> x) const {
        const auto found = index_.nearest(x, K_);
        double ones = 0.0;
        for (const auto& nb : found) ones += labels_[nb.index];
        return ones / static_cast<double>(K_);
    }

    PredictionSet predict(const Matrix& queries) const {
        PredictionSet p;
        p.labels.resize(queries.rows());
        p.scores.resize(queries.rows());
        for (std::size_t i = 0; i < queries.rows(); ++i) {
            const double e = eta(queries.row(i));
            p.scores[i] = e;
            p.labels[i] = e > threshold_ ? 1 : 0;
        }
        return p;
    }

    std::size_t K() const { return K_; }
    double threshold() const { return threshold_; }
    const NeighborIndex& index() const { return index_; }
    const std::vector<std::uint8_t>& labels() const { return labels_; }

private:
    NeighborIndex index_;
    std::vector<std::uint8_t> labels_;
    std::size_t K_ = 1;
    double threshold_ = 0.5;
};

inline KnnModel fit_knn(const LabeledDataset& ds, std::size_t K, double threshold = 0.5) {
    return KnnModel::fit(ds, K, threshold);
}

inline double knn_eta(const KnnModel& model, std::span<const double> x) { return model.eta(x); }

/// sqrt(n) rounded to the nearest odd integer in [1, n]. Odd K avoids exact
/// 1/2 ties at the default threshold.
inline std::size_t sqrt_n_odd(std::size_t n) {
    if (n == 0) throw std::invalid_argument("sqrt_n_odd: n must be >= 1");
    const double x = std::sqrt(static_cast<double>(n));
    auto lower = static_cast<long long>(std::floor((x - 1.0) / 2.0)) * 2 + 1;
    if (lower < 1) lower = 1;
    const long long upper = lower + 2;
    long long k = (x - static_cast<double>(lower)) <= (static_cast<double>(upper) - x) ? lower : upper;
    if (k < 1) k = 1;
    if (k > static_cast<long long>(n)) k = static_cast<long long>(n);
    return static_cast<std::size_t>(k);
}

/// BBC: KNN thresholded at the empirical prior of the (raw, pre-oversampling)
/// training set.
inline KnnModel fit_bbc(const LabeledDataset& raw_train, std::optional<std::size_t> K = std::nullopt) {
    const ClassView view = partition_classes(raw_train);
    const std::size_t k = K ? *K : sqrt_n_odd(raw_train.n());
    return KnnModel::fit(raw_train, k, view.p_hat);
}

/// Label-1 counts among the first K sorted neighbors for each K in `grid`
/// (clamped to the training size); shared by the cross-validation sweeps so a
/// single neighbor query serves the whole grid.
inline std::vector<double> knn_eta_profile(const NeighborIndex& index, const std::vector<std::uint8_t>& labels,
                                           std::span<const double> x, std::span<const std::size_t> grid) {
    std::size_t kmax = 1;
    for (std::size_t K : grid) kmax = std::max(kmax, std::min(K, index.n()));
    const auto found = index.nearest(x, kmax);
    std::vector<double> prefix(found.size() + 1, 0.0);
    for (std::size_t i = 0; i < found.size(); ++i) prefix[i + 1] = prefix[i] + labels[found[i].index];
    std::vector<double> etas(grid.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const std::size_t k = std::min(grid[gi], index.n());
        etas[gi] = prefix[k] / static_cast<double>(k);
    }
    return etas;
}

// ---------------------------------------------------------------------------
// (L1-)logistic regression fitted by proximal gradient with backtracking.
// Objective: mean logistic loss over margins (2y-1)(w.x + b) plus
// l1_penalty * ||w||_1 (intercept unpenalized).
// ---------------------------------------------------------------------------

struct FitDiagnostics {
    double objective = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;
    double l1_penalty = 0.0;
    FitDiagnostics diagnostics;
};

namespace detail {

inline double log1pexp(double t) { // log(1 + e^t), stable
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

} // namespace detail

/// Mean logistic loss (the smooth part of the objective).
inline double logistic_objective(const LabeledDataset& ds, std::span<const double> w, double b) {
    double loss = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const double margin = (2.0 * ds.labels[i] - 1.0) * (dot(ds.features.row(i), w) + b);
        loss += detail::log1pexp(-margin);
    }
    return loss / static_cast<double>(ds.n());
}

/// Analytic gradient of the mean logistic loss w.r.t. (w, b).
inline std::pair<std::vector<double>, double> logistic_gradient(const LabeledDataset& ds, std::span<const double> w,
                                                                double b) {
    std::vector<double> gw(ds.dim(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const double s = 2.0 * ds.labels[i] - 1.0;
        const double margin = s * (dot(ds.features.row(i), w) + b);
        const double sigma = 1.0 / (1.0 + std::exp(margin)); // d/dm log(1+e^-m) = -sigma(-m)
        const double coeff = -s * sigma;
        auto x = ds.features.row(i);
        for (std::size_t j = 0; j < ds.dim(); ++j) gw[j] += coeff * x[j];
        gb += coeff;
    }
    const double inv_n = 1.0 / static_cast<double>(ds.n());
    for (double& v : gw) v *= inv_n;
    gb *= inv_n;
    return {std::move(gw), gb};
}

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

inline LinearModel fit_logistic(const LabeledDataset& ds, double l1_penalty = 0.0, std::size_t max_iters = 500,
                                double tolerance = 1e-9) {
    if (ds.n() == 0) throw std::invalid_argument("fit_logistic: empty dataset");
    if (!(l1_penalty >= 0.0)) throw std::invalid_argument("fit_logistic: l1_penalty must be >= 0");
    if (!ds.features.all_finite()) throw std::invalid_argument("fit_logistic: non-finite features");

    const std::size_t d = ds.dim();
    std::vector<double> w(d, 0.0);
    double b = 0.0;
    double step = 1.0;

    auto composite = [&](std::span<const double> wv, double bv) {
        double l1 = 0.0;
        for (double v : wv) l1 += std::abs(v);
        return logistic_objective(ds, wv, bv) + l1_penalty * l1;
    };

    double smooth = logistic_objective(ds, w, b);
    double objective = smooth; // ||w||_1 = 0 at start
    LinearModel model;
    model.l1_penalty = l1_penalty;

    std::vector<double> w_next(d);
    std::size_t iter = 0;
    bool converged = false;
    for (; iter < max_iters; ++iter) {
        const auto [gw, gb] = logistic_gradient(ds, w, b);
        double b_next = 0.0, smooth_next = 0.0;
        for (int halvings = 0; halvings < 60; ++halvings) {
            for (std::size_t j = 0; j < d; ++j) w_next[j] = soft_threshold(w[j] - step * gw[j], step * l1_penalty);
            b_next = b - step * gb;
            smooth_next = logistic_objective(ds, w_next, b_next);
            double lin = 0.0, sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double dw = w_next[j] - w[j];
                lin += gw[j] * dw;
                sq += dw * dw;
            }
            const double db = b_next - b;
            lin += gb * db;
            sq += db * db;
            if (smooth_next <= smooth + lin + sq / (2.0 * step) + 1e-15) break;
            step *= 0.5;
        }
        double l1 = 0.0;
        for (double v : w_next) l1 += std::abs(v);
        const double objective_next = smooth_next + l1_penalty * l1;
        const bool done = std::abs(objective - objective_next) <= tolerance * std::max(1.0, std::abs(objective));
        w.swap(w_next);
        b = b_next;
        smooth = smooth_next;
        objective = objective_next;
        if (done) {
            converged = true;
            ++iter;
            break;
        }
        step *= 1.25; // re-expand after successful steps
    }

    model.weights = std::move(w);
    model.intercept = b;
    model.diagnostics = {composite(model.weights, model.intercept), iter, converged};
    return model;
}

inline PredictionSet predict_linear(const LinearModel& model, const Matrix& queries) {
    if (queries.cols() != model.weights.size()) throw std::invalid_argument("predict_linear: dimension mismatch");
    PredictionSet p;
    p.labels.resize(queries.rows());
    p.scores.resize(queries.rows());
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        const double margin = dot(queries.row(i), model.weights) + model.intercept;
        p.scores[i] = margin;
        p.labels[i] = margin > 0.0 ? 1 : 0;
    }
    return p;
}

} // namespace imbo
