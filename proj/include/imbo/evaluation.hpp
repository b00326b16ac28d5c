#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "imbo/classifiers.hpp"
#include "imbo/dataset.hpp"
#include "imbo/oversample.hpp"
#include "imbo/rng.hpp"

namespace imbo {

/// Per-class 0-1 error rates and their beta-weighted combination; beta = 1/2
/// is the AM-risk.
struct RiskReport {
    double err_class1 = 0.0;
    double err_class0 = 0.0;
    double beta = 0.5;
    double risk = 0.0;
};

inline RiskReport am_risk(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth, double beta = 0.5) {
    if (pred.size() != truth.size()) throw std::invalid_argument("am_risk: prediction/truth length mismatch");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("am_risk: beta must be in (0,1)");
    std::size_t n1 = 0, n0 = 0, wrong1 = 0, wrong0 = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1) {
            ++n1;
            wrong1 += pred[i] != 1;
        } else {
            ++n0;
            wrong0 += pred[i] != 0;
        }
    }
    if (n1 == 0 || n0 == 0) throw std::invalid_argument("am_risk: a truth class is absent");
    RiskReport r;
    r.err_class1 = static_cast<double>(wrong1) / static_cast<double>(n1);
    r.err_class0 = static_cast<double>(wrong0) / static_cast<double>(n0);
    r.beta = beta;
    r.risk = beta * r.err_class1 + (1.0 - beta) * r.err_class0;
    return r;
}

inline RiskReport am_risk(const PredictionSet& pred, std::span<const std::uint8_t> truth, double beta = 0.5) {
    return am_risk(std::span<const std::uint8_t>(pred.labels), truth, beta);
}

// ---------------------------------------------------------------------------
// Cross-validation of the KNN hyperparameter K with in-fold oversampling.
// ---------------------------------------------------------------------------

struct CvResult {
    std::vector<std::size_t> grid;
    std::vector<double> mean_cv_risk;
    std::size_t chosen_K = 0;
    std::size_t fold_count = 0;
};

/// Selection metric: AM-risk on the untouched (imbalanced) test fold, or
/// plain misclassification error on a test fold balanced by the same
/// oversampler.
enum class CvMetric { am_risk_raw_fold, error_on_balanced_fold };

/// ~15 K values, geometrically spaced over [1, n_train/2], rounded to odd.
inline std::vector<std::size_t> default_K_grid(std::size_t n_train, std::size_t count = 15) {
    const double kmax = std::max(1.0, static_cast<double>(n_train) / 2.0);
    std::vector<std::size_t> grid;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        const double v = std::exp(t * std::log(kmax));
        auto k = static_cast<std::size_t>(std::llround(v));
        if (k % 2 == 0) ++k;
        if (grid.empty() || grid.back() != k) grid.push_back(k);
    }
    return grid;
}

namespace detail {

/// Stratified fold assignment: per-class shuffle, then round-robin deal.
/// Class proportions per fold are exact up to one element.
inline std::vector<std::vector<std::size_t>> stratified_folds(const LabeledDataset& ds, std::size_t folds,
                                                              RngStream rng) {
    const ClassView view = partition_classes(ds);
    std::vector<std::vector<std::size_t>> fold_idx(folds);
    for (const auto* cls : {&view.minority_indices, &view.majority_indices}) {
        auto idx = *cls;
        shuffle_indices(idx, rng);
        for (std::size_t i = 0; i < idx.size(); ++i) fold_idx[i % folds].push_back(idx[i]);
    }
    for (auto& f : fold_idx) std::sort(f.begin(), f.end());
    return fold_idx;
}

inline std::vector<std::size_t> complement_rows(std::size_t n, const std::vector<std::size_t>& fold) {
    std::vector<std::uint8_t> in_fold(n, 0);
    for (std::size_t i : fold) in_fold[i] = 1;
    std::vector<std::size_t> rows;
    rows.reserve(n - fold.size());
    for (std::size_t i = 0; i < n; ++i)
        if (!in_fold[i]) rows.push_back(i);
    return rows;
}

inline std::size_t argmin_first(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return best;
}

} // namespace detail

/// 5-fold style CV: per fold, balance the training part with the configured
/// oversampler, fit KNN for every K in the grid, and score on the test fold.
/// chosen_K minimizes the fold-mean risk (ties -> the earliest grid entry).
inline CvResult cross_validate_K(const LabeledDataset& ds, const OversamplerConfig& oversampler,
                                 std::span<const std::size_t> K_grid, std::size_t folds, const RngStream& rng,
                                 CvMetric metric = CvMetric::am_risk_raw_fold) {
    if (folds < 2) throw std::invalid_argument("cross_validate_K: need at least 2 folds");
    if (K_grid.empty()) throw std::invalid_argument("cross_validate_K: empty grid");
    const ClassView view = partition_classes(ds);
    if (view.n1 < folds) throw std::invalid_argument("cross_validate_K: n1 < folds, cannot stratify");

    const auto fold_idx = detail::stratified_folds(ds, folds, rng.substream(0));
    std::vector<double> mean_risk(K_grid.size(), 0.0);

    for (std::size_t f = 0; f < folds; ++f) {
        RngStream fold_rng = rng.substream(1 + f);
        const LabeledDataset train = ds.select_rows(detail::complement_rows(ds.n(), fold_idx[f]));
        const LabeledDataset test = ds.select_rows(fold_idx[f]);

        RngStream ovs_rng = fold_rng.substream(0);
        const AugmentedDataset aug = oversample_to_balance(train, oversampler, ovs_rng);
        const NeighborIndex index = NeighborIndex::build(aug.data.features);

        const LabeledDataset* eval_ds = &test;
        LabeledDataset balanced_test;
        if (metric == CvMetric::error_on_balanced_fold) {
            RngStream test_rng = fold_rng.substream(1);
            balanced_test = oversample_to_balance(test, oversampler, test_rng).data;
            eval_ds = &balanced_test;
        }

        std::vector<std::vector<std::uint8_t>> pred(K_grid.size());
        for (auto& p : pred) p.resize(eval_ds->n());
        for (std::size_t q = 0; q < eval_ds->n(); ++q) {
            const auto etas = knn_eta_profile(index, aug.data.labels, eval_ds->features.row(q), K_grid);
            for (std::size_t gi = 0; gi < K_grid.size(); ++gi) pred[gi][q] = etas[gi] > 0.5 ? 1 : 0;
        }
        for (std::size_t gi = 0; gi < K_grid.size(); ++gi) {
            double value;
            if (metric == CvMetric::am_risk_raw_fold) {
                value = am_risk(std::span<const std::uint8_t>(pred[gi]), eval_ds->labels).risk;
            } else {
                std::size_t wrong = 0;
                for (std::size_t q = 0; q < eval_ds->n(); ++q) wrong += pred[gi][q] != eval_ds->labels[q];
                value = static_cast<double>(wrong) / static_cast<double>(eval_ds->n());
            }
            mean_risk[gi] += value / static_cast<double>(folds);
        }
    }

    CvResult result;
    result.grid.assign(K_grid.begin(), K_grid.end());
    result.mean_cv_risk = std::move(mean_risk);
    result.chosen_K = result.grid[detail::argmin_first(result.mean_cv_risk)];
    result.fold_count = folds;
    return result;
}

/// BBC variant: no oversampling. Per fold the threshold is the training-fold
/// prior p_hat, and the AM-risk is estimated on the test fold after balancing
/// it by undersampling its majority class.
inline CvResult cross_validate_bbc(const LabeledDataset& ds, std::span<const std::size_t> K_grid, std::size_t folds,
                                   const RngStream& rng) {
    if (folds < 2) throw std::invalid_argument("cross_validate_bbc: need at least 2 folds");
    if (K_grid.empty()) throw std::invalid_argument("cross_validate_bbc: empty grid");
    const ClassView view = partition_classes(ds);
    if (view.n1 < folds) throw std::invalid_argument("cross_validate_bbc: n1 < folds, cannot stratify");

    const auto fold_idx = detail::stratified_folds(ds, folds, rng.substream(0));
    std::vector<double> mean_risk(K_grid.size(), 0.0);

    for (std::size_t f = 0; f < folds; ++f) {
        RngStream fold_rng = rng.substream(1 + f);
        const LabeledDataset train = ds.select_rows(detail::complement_rows(ds.n(), fold_idx[f]));
        const LabeledDataset test = ds.select_rows(fold_idx[f]);
        const double p_hat = partition_classes(train).p_hat;

        const NeighborIndex index = NeighborIndex::build(train.features);
        const LabeledDataset balanced_test = balance_by_undersampling(test, fold_rng);

        std::vector<std::vector<std::uint8_t>> pred(K_grid.size());
        for (auto& p : pred) p.resize(balanced_test.n());
        for (std::size_t q = 0; q < balanced_test.n(); ++q) {
            const auto etas = knn_eta_profile(index, train.labels, balanced_test.features.row(q), K_grid);
            for (std::size_t gi = 0; gi < K_grid.size(); ++gi) pred[gi][q] = etas[gi] > p_hat ? 1 : 0;
        }
        for (std::size_t gi = 0; gi < K_grid.size(); ++gi)
            mean_risk[gi] += am_risk(std::span<const std::uint8_t>(pred[gi]), balanced_test.labels).risk /
                             static_cast<double>(folds);
    }

    CvResult result;
    result.grid.assign(K_grid.begin(), K_grid.end());
    result.mean_cv_risk = std::move(mean_risk);
    result.chosen_K = result.grid[detail::argmin_first(result.mean_cv_risk)];
    result.fold_count = folds;
    return result;
}

// ---------------------------------------------------------------------------
// Concentration audit: the empirical analogue of
// sup_G | (1/m) sum G(X*_i) - E_1[G(X)] |, with the population mean replaced
// by a mean over a large fresh reference sample.
// ---------------------------------------------------------------------------

/// Bounded Lipschitz test function x -> cos(w.x + b) with ||w|| <= 1.
struct CosineFunction {
    std::vector<double> w;
    double b = 0.0;
    double operator()(std::span<const double> x) const { return std::cos(dot(w, x) + b); }
};

/// The fixed, versioned test-function family used by the audits: directions
/// from a constant-seed stream, radii log-spaced in [0.05, 0.6], phases
/// uniform in [0, 2pi). Deterministic in (d, count).
inline std::vector<CosineFunction> cosine_test_family(std::size_t d, std::size_t count = 20) {
    if (d == 0 || count == 0) throw std::invalid_argument("cosine_test_family: empty family");
    RngStream rng(0xC05F0DAULL);
    const double r_min = 0.05, r_max = 0.6;
    std::vector<CosineFunction> family;
    family.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto dir = sample_gaussian_vector(rng, d);
        double norm = std::sqrt(dot(dir, dir));
        if (!(norm > 0.0)) norm = 1.0;
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        const double radius = r_min * std::pow(r_max / r_min, t);
        for (double& v : dir) v *= radius / norm;
        family.push_back({std::move(dir), 2.0 * std::numbers::pi * sample_uniform(rng)});
    }
    return family;
}

struct AuditReport {
    double sup_discrepancy = 0.0;
    std::vector<double> per_function;
    // config echo
    std::string method;
    std::size_t n1 = 0;
    double k_or_scale = 0.0;
    std::size_t m = 0;
};

/// Draws fresh minority datasets: (stream, count) -> count x d matrix.
using MinoritySampler = std::function<Matrix(RngStream&, std::size_t)>;

/// One report per replication. Substream layout per replication r:
/// substream(r).substream(0) minority draw, (1) oversampler, (2) reference
/// draw, so runs with different reference sizes stay paired.
inline std::vector<AuditReport> concentration_audit(const MinoritySampler& minority_sampler,
                                                    const OversamplerConfig& method, std::size_t n1, std::size_t m,
                                                    std::span<const CosineFunction> test_functions,
                                                    std::size_t reference_size, std::size_t replications,
                                                    const RngStream& rng) {
    if (test_functions.empty()) throw std::invalid_argument("concentration_audit: empty function family");
    if (n1 == 0 || m == 0 || reference_size == 0)
        throw std::invalid_argument("concentration_audit: sizes must be positive");

    auto family_mean = [&](const Matrix& pts, std::vector<double>& out) {
        out.assign(test_functions.size(), 0.0);
        for (std::size_t i = 0; i < pts.rows(); ++i) {
            auto x = pts.row(i);
            for (std::size_t g = 0; g < test_functions.size(); ++g) out[g] += test_functions[g](x);
        }
        for (double& v : out) v /= static_cast<double>(pts.rows());
    };

    std::vector<AuditReport> reports;
    reports.reserve(replications);
    std::vector<double> syn_mean, ref_mean;
    for (std::size_t r = 0; r < replications; ++r) {
        RngStream rep = rng.substream(r);
        RngStream draw_rng = rep.substream(0);
        const Matrix minority = minority_sampler(draw_rng, n1);

        RngStream method_rng = rep.substream(1);
        OversampleResult synth;
        if (method.method == OversampleMethod::smote) {
            synth = smote_sample(minority, SmoteConfig{method.smote_k}, m, method_rng);
        } else {
            const BandwidthSpec bw = method.kdeo_bandwidth ? *method.kdeo_bandwidth
                                     : minority.rows() >= 2 ? scott_bandwidth(minority, method.kdeo_scale)
                                                            : BandwidthSpec::scalar(0.0);
            synth = kdeo_sample(minority, bw, m, method_rng);
        }

        RngStream ref_rng = rep.substream(2);
        const Matrix reference = minority_sampler(ref_rng, reference_size);

        family_mean(synth.synthetic, syn_mean);
        family_mean(reference, ref_mean);

        AuditReport report;
        report.per_function.resize(test_functions.size());
        for (std::size_t g = 0; g < test_functions.size(); ++g) {
            report.per_function[g] = std::abs(syn_mean[g] - ref_mean[g]);
            report.sup_discrepancy = std::max(report.sup_discrepancy, report.per_function[g]);
        }
        report.method = to_string(method.method);
        report.n1 = n1;
        report.k_or_scale =
            method.method == OversampleMethod::smote ? static_cast<double>(method.smote_k) : method.kdeo_scale;
        report.m = m;
        reports.push_back(std::move(report));
    }
    return reports;
}

} // namespace imbo
