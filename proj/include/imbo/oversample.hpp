#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "imbo/bandwidth.hpp"
#include "imbo/dataset.hpp"
#include "imbo/neighbors.hpp"
#include "imbo/rng.hpp"

namespace imbo {

struct SmoteConfig {
    std::size_t k = 5;
};

/// How a synthetic row was produced: which minority row seeded it, and either
/// the interpolation pair (neighbor, lambda) or the raw Gaussian noise draw.
struct ProvenanceRow {
    std::size_t seed_index = 0;
    std::optional<std::size_t> neighbor_index;
    std::optional<double> lambda;
    std::vector<double> noise;
};

struct OversampleResult {
    Matrix synthetic; // m x d
    std::vector<ProvenanceRow> provenance;
    std::size_t effective_k = 0; // SMOTE only
    bool k_clamped = false;
};

/// SMOTE: each synthetic point is (1 - lambda) * seed + lambda * neighbor
/// with the seed uniform over the minority rows, the neighbor uniform over
/// the seed's k nearest minority rows (seed itself excluded), and
/// lambda ~ U[0,1]. A lone minority point is copied verbatim. k larger than
/// n1 - 1 is clamped (flagged in the result) rather than rejected.
template <class G>
OversampleResult smote_sample(const Matrix& minority, const SmoteConfig& cfg, std::size_t m, G& rng) {
    const std::size_t n1 = minority.rows();
    if (n1 == 0) throw std::invalid_argument("smote_sample: SMOTE undefined on empty minority class");
    if (cfg.k < 1) throw std::invalid_argument("smote_sample: k must be >= 1");
    const std::size_t d = minority.cols();

    OversampleResult out;
    out.synthetic = Matrix(m, d);
    out.provenance.resize(m);

    if (n1 == 1) {
        out.effective_k = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t seed = sample_index(rng, n1);
            auto src = minority.row(seed);
            std::copy(src.begin(), src.end(), out.synthetic.row(i).begin());
            out.provenance[i].seed_index = seed;
        }
        return out;
    }

    out.effective_k = std::min(cfg.k, n1 - 1);
    out.k_clamped = out.effective_k != cfg.k;

    const auto index = NeighborIndex::build(minority);
    std::vector<std::vector<std::size_t>> knn(n1);
    for (std::size_t i = 0; i < n1; ++i) knn[i] = index.knn_of_member(i, out.effective_k);

    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t seed = sample_index(rng, n1);
        const std::size_t neighbor = knn[seed][sample_index(rng, out.effective_k)];
        const double lambda = sample_uniform(rng);
        auto a = minority.row(seed);
        auto b = minority.row(neighbor);
        auto dst = out.synthetic.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] = (1.0 - lambda) * a[j] + lambda * b[j];
        out.provenance[i] = {seed, neighbor, lambda, {}};
    }
    return out;
}

/// KDEO: each synthetic point is seed + h * W (scalar bandwidth) or
/// seed + factor * W (matrix bandwidth), W ~ N(0, I_d), seed uniform over the
/// minority rows. Equivalent to sampling from the minority-class Gaussian KDE.
template <class G>
OversampleResult kdeo_sample(const Matrix& minority, const BandwidthSpec& bw, std::size_t m, G& rng) {
    const std::size_t n1 = minority.rows();
    if (n1 == 0) throw std::invalid_argument("kdeo_sample: undefined on empty minority class");
    const std::size_t d = minority.cols();
    if (!bw.is_scalar() && bw.dim() != d) throw std::invalid_argument("kdeo_sample: bandwidth dimension mismatch");

    OversampleResult out;
    out.synthetic = Matrix(m, d);
    out.provenance.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t seed = sample_index(rng, n1);
        auto w = sample_gaussian_vector(rng, d);
        auto src = minority.row(seed);
        auto dst = out.synthetic.row(i);
        if (bw.is_scalar()) {
            for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] + bw.h * w[j];
        } else {
            const auto noise = matvec(bw.factor, w);
            for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] + noise[j];
        }
        out.provenance[i].seed_index = seed;
        out.provenance[i].noise = std::move(w);
    }
    return out;
}

enum class OversampleMethod { smote, kdeo };

/// Whether the augmented minority keeps its original rows. The analyzed
/// estimator trains on synthetic minority points only (pure_synthetic, the
/// default); top_up keeps originals and adds n0 - n1 synthetics.
enum class AugmentMode { pure_synthetic, top_up };

struct OversamplerConfig {
    OversampleMethod method = OversampleMethod::kdeo;
    std::size_t smote_k = 5;
    double kdeo_scale = 1.0; // c multiplier on the Scott transform
    std::optional<BandwidthSpec> kdeo_bandwidth; // overrides Scott's rule
    AugmentMode mode = AugmentMode::pure_synthetic;
};

inline const char* to_string(OversampleMethod m) { return m == OversampleMethod::smote ? "smote" : "kdeo"; }

struct AugmentedDataset {
    LabeledDataset data;
    std::vector<std::uint8_t> synthetic_flag; // aligned with data rows
    std::size_t effective_k = 0;
    bool k_clamped = false;
};

/// Balances the dataset with synthetic label-1 rows so both classes end up
/// with n0 rows (m = n0 * 1{n1 > 0}). Minority-empty input is returned
/// unchanged. KDEO's bandwidth defaults to Scott's rule on the minority rows
/// (h = 0 bootstrap copies when the minority is a single point).
inline AugmentedDataset oversample_to_balance(const LabeledDataset& ds, const OversamplerConfig& cfg, RngStream& rng) {
    const ClassView view = partition_classes(ds);
    if (view.n1 == 0) return {ds, std::vector<std::uint8_t>(ds.n(), 0), 0, false};

    const std::size_t m = cfg.mode == AugmentMode::pure_synthetic
                              ? view.n0
                              : (view.n0 > view.n1 ? view.n0 - view.n1 : 0);

    Matrix minority(view.n1, ds.dim());
    for (std::size_t i = 0; i < view.n1; ++i) {
        auto src = ds.features.row(view.minority_indices[i]);
        std::copy(src.begin(), src.end(), minority.row(i).begin());
    }

    OversampleResult synth;
    switch (cfg.method) {
    case OversampleMethod::smote:
        synth = smote_sample(minority, SmoteConfig{cfg.smote_k}, m, rng);
        break;
    case OversampleMethod::kdeo: {
        const BandwidthSpec bw = cfg.kdeo_bandwidth ? *cfg.kdeo_bandwidth
                                 : view.n1 >= 2     ? scott_bandwidth(minority, cfg.kdeo_scale)
                                                    : BandwidthSpec::scalar(0.0);
        synth = kdeo_sample(minority, bw, m, rng);
        break;
    }
    default:
        throw std::invalid_argument("oversample_to_balance: unknown method");
    }

    AugmentedDataset out;
    out.effective_k = synth.effective_k;
    out.k_clamped = synth.k_clamped;
    const std::vector<std::size_t>* kept = cfg.mode == AugmentMode::pure_synthetic ? &view.majority_indices : nullptr;

    if (kept) {
        out.data = ds.select_rows(*kept);
    } else {
        out.data = ds;
    }
    out.synthetic_flag.assign(out.data.n(), 0);
    for (std::size_t i = 0; i < m; ++i) {
        out.data.features.append_row(synth.synthetic.row(i));
        out.data.labels.push_back(1);
        out.synthetic_flag.push_back(1);
    }
    return out;
}

} // namespace imbo
