#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "imbo/dataset.hpp"
#include "imbo/evaluation.hpp"
#include "imbo/rng.hpp"

namespace imbo {

/// The five synthetic data-generating processes of the simulation study.
enum class Family { example1, example2, example3, example4, exampleS1 };

/// Convention for the Exp(a) notation in the heavy-tailed recipes: `rate`
/// reads a as a rate (mean 1/a), `mean` reads it as a mean.
enum class ExpConvention { rate, mean };

inline const char* to_string(Family f) {
    switch (f) {
    case Family::example1: return "ex1";
    case Family::example2: return "ex2";
    case Family::example3: return "ex3";
    case Family::example4: return "ex4";
    case Family::exampleS1: return "exS1";
    }
    return "?";
}

inline Family family_from_string(const std::string& s) {
    if (s == "ex1" || s == "example1") return Family::example1;
    if (s == "ex2" || s == "example2") return Family::example2;
    if (s == "ex3" || s == "example3") return Family::example3;
    if (s == "ex4" || s == "example4") return Family::example4;
    if (s == "exS1" || s == "exs1" || s == "examples1") return Family::exampleS1;
    throw std::invalid_argument("unknown generator family '" + s + "'");
}

struct GeneratorSpec {
    Family family = Family::example2;
    std::size_t d = 4; // example4 forces d = 2
    double alpha = 0.0;                                    // example1
    double t = 0.0;                                        // examples 2, 3, S.1
    std::array<double, 4> weights{0.25, 0.25, 0.25, 0.25}; // example4, sums to 1
    std::size_t n = 1000;
    ExpConvention exp_convention = ExpConvention::rate;

    void validate() const {
        if (n == 0) throw std::invalid_argument("GeneratorSpec: n must be >= 1");
        switch (family) {
        case Family::example1:
        case Family::example2:
            if (d < 1) throw std::invalid_argument("GeneratorSpec: d must be >= 1");
            break;
        case Family::example3:
            if (d < 2) throw std::invalid_argument("GeneratorSpec: example3 needs d >= 2");
            break;
        case Family::exampleS1:
            if (d < 3) throw std::invalid_argument("GeneratorSpec: exampleS1 needs d >= 3");
            break;
        case Family::example4: {
            if (d != 2) throw std::invalid_argument("GeneratorSpec: example4 forces d = 2");
            double sum = 0.0;
            for (double w : weights) {
                if (!(w >= 0.0)) throw std::invalid_argument("GeneratorSpec: weights must be nonnegative");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("GeneratorSpec: weights must sum to 1");
            break;
        }
        }
    }
};

namespace detail {

inline double expit(double u) {
    return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
}

inline double exp_rate(double a, ExpConvention conv) {
    return conv == ExpConvention::rate ? a : 1.0 / a;
}

constexpr std::array<std::array<double, 2>, 4> kExample4Means{{{0.0, 0.0}, {10.0, 10.0}, {10.0, 0.0}, {0.0, 10.0}}};
constexpr double kExample4Var = 6.0;

} // namespace detail

/// Draws n i.i.d. rows from the family's recipe. One stream feeds all rows;
/// the per-row draw order is fixed (see each branch) so runs are reproducible.
inline LabeledDataset generate(const GeneratorSpec& spec, RngStream& rng) {
    spec.validate();
    LabeledDataset ds;
    ds.features = Matrix(spec.n, spec.family == Family::example4 ? 2 : spec.d);
    ds.labels.resize(spec.n);

    for (std::size_t i = 0; i < spec.n; ++i) {
        auto row = ds.features.row(i);
        switch (spec.family) {
        case Family::example1: {
            // X ~ N(0, I_d); Y ~ Bernoulli(expit(x1 + alpha))
            const auto x = sample_gaussian_vector(rng, spec.d);
            std::copy(x.begin(), x.end(), row.begin());
            ds.labels[i] = static_cast<std::uint8_t>(sample_bernoulli(rng, detail::expit(x[0] + spec.alpha)));
            break;
        }
        case Family::example2: {
            // X ~ N(0, I_d); Z ~ GPD(exp(x1), 1/2); Y = 1{Z > t}
            const auto x = sample_gaussian_vector(rng, spec.d);
            std::copy(x.begin(), x.end(), row.begin());
            const double z = sample_gpd(rng, std::exp(x[0]), 0.5);
            ds.labels[i] = z > spec.t ? 1 : 0;
            break;
        }
        case Family::example3: {
            // Z = B sin(x1/2) Y1 + (1-B) sin(x2/2) Y2, Y1 ~ GPD(1, 1/2),
            // Y2 ~ Exp(10); Y = 1{Z > t}
            const auto x = sample_gaussian_vector(rng, spec.d);
            std::copy(x.begin(), x.end(), row.begin());
            const int b = sample_bernoulli(rng, 0.5);
            const double y1 = sample_gpd(rng, 1.0, 0.5);
            const double y2 = sample_exponential(rng, detail::exp_rate(10.0, spec.exp_convention));
            const double z = b * std::sin(x[0] / 2.0) * y1 + (1 - b) * std::sin(x[1] / 2.0) * y2;
            ds.labels[i] = z > spec.t ? 1 : 0;
            break;
        }
        case Family::example4: {
            // Z categorical over 4 components, X ~ N(mu_Z, 6 I_2), Y = 1{Z >= 3}
            const std::size_t z = sample_categorical(rng, std::span<const double>(spec.weights));
            const auto w = sample_gaussian_vector(rng, 2);
            const double sd = std::sqrt(detail::kExample4Var);
            row[0] = detail::kExample4Means[z][0] + sd * w[0];
            row[1] = detail::kExample4Means[z][1] + sd * w[1];
            ds.labels[i] = z >= 2 ? 1 : 0; // components 3 and 4 (0-based 2, 3)
            break;
        }
        case Family::exampleS1: {
            // Z = B Y1 + (1-B) Y2, Y1 ~ EGPD(exp(x1), exp(x2), 1/2),
            // Y2 ~ Exp(10 exp(x3)); Y = 1{Z > t}
            const auto x = sample_gaussian_vector(rng, spec.d);
            std::copy(x.begin(), x.end(), row.begin());
            const int b = sample_bernoulli(rng, 0.5);
            const double y1 = sample_egpd(rng, std::exp(x[0]), std::exp(x[1]), 0.5);
            const double y2 = sample_exponential(rng, detail::exp_rate(10.0 * std::exp(x[2]), spec.exp_convention));
            const double z = b * y1 + (1 - b) * y2;
            ds.labels[i] = z > spec.t ? 1 : 0;
            break;
        }
        }
    }
    return ds;
}

/// The calibrated imbalance knob: alpha for example1, a threshold t for the
/// thresholded families, component weights for example4.
struct CalibrationResult {
    Family family = Family::example2;
    std::size_t d = 4;
    double target_p1 = 0.1;
    double param = 0.0; // alpha or t
    std::array<double, 4> weights{0.25, 0.25, 0.25, 0.25};
};

inline void apply(GeneratorSpec& spec, const CalibrationResult& calib) {
    if (spec.family != calib.family) throw std::invalid_argument("apply: calibration family mismatch");
    switch (spec.family) {
    case Family::example1: spec.alpha = calib.param; break;
    case Family::example4: spec.weights = calib.weights; break;
    default: spec.t = calib.param; break;
    }
}

namespace detail {

/// Empirical q-quantile (type 1: left-continuous inverse) of a sample.
inline double empirical_quantile(std::vector<double>& z, double q) {
    const auto m = static_cast<double>(z.size());
    auto idx = static_cast<std::size_t>(std::ceil(q * m));
    idx = std::min(std::max<std::size_t>(idx, 1), z.size()) - 1;
    std::nth_element(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(idx), z.end());
    return z[idx];
}

} // namespace detail

/// Calibrates the imbalance parameter so P(Y = 1) hits target_p1:
/// Monte-Carlo (1 - p1)-quantile of Z for the thresholded families, bisection
/// on the Monte-Carlo mean of expit(x1 + alpha) for example1 (to 1e-3), and
/// the exact weight layout ((1-p1)/2, (1-p1)/2, p1/2, p1/2) for example4.
inline CalibrationResult calibrate(Family family, std::size_t d, double target_p1, std::size_t mc_size, RngStream& rng,
                                   ExpConvention exp_convention = ExpConvention::rate) {
    if (!(target_p1 > 0.0 && target_p1 < 1.0)) throw std::invalid_argument("calibrate: target_p1 must be in (0,1)");
    CalibrationResult out;
    out.family = family;
    out.d = d;
    out.target_p1 = target_p1;

    if (family == Family::example4) {
        out.weights = {(1.0 - target_p1) / 2.0, (1.0 - target_p1) / 2.0, target_p1 / 2.0, target_p1 / 2.0};
        return out;
    }
    if (mc_size < 100000) throw std::invalid_argument("calibrate: mc_size must be >= 1e5");

    if (family == Family::example1) {
        std::vector<double> x1(mc_size);
        for (auto& v : x1) v = sample_gaussian(rng);
        auto mc_mean = [&](double alpha) {
            double s = 0.0;
            for (double v : x1) s += detail::expit(v + alpha);
            return s / static_cast<double>(mc_size);
        };
        double lo = -60.0, hi = 60.0;
        const double flo = mc_mean(lo), fhi = mc_mean(hi);
        if (flo > target_p1 || fhi < target_p1)
            throw std::runtime_error("calibrate: bisection bracket failure, f(" + std::to_string(lo) +
                                     ")=" + std::to_string(flo) + ", f(" + std::to_string(hi) + ")=" + std::to_string(fhi));
        double mid = 0.0;
        for (int iter = 0; iter < 200; ++iter) {
            mid = 0.5 * (lo + hi);
            const double f = mc_mean(mid);
            if (std::abs(f - target_p1) < 1e-3) break;
            (f < target_p1 ? lo : hi) = mid;
        }
        out.param = mid;
        return out;
    }

    // thresholded families: t = empirical (1 - p1)-quantile of Z
    std::vector<double> z(mc_size);
    for (auto& v : z) {
        switch (family) {
        case Family::example2: {
            const double x1 = sample_gaussian(rng);
            v = sample_gpd(rng, std::exp(x1), 0.5);
            break;
        }
        case Family::example3: {
            const double x1 = sample_gaussian(rng);
            const double x2 = sample_gaussian(rng);
            const int b = sample_bernoulli(rng, 0.5);
            const double y1 = sample_gpd(rng, 1.0, 0.5);
            const double y2 = sample_exponential(rng, detail::exp_rate(10.0, exp_convention));
            v = b * std::sin(x1 / 2.0) * y1 + (1 - b) * std::sin(x2 / 2.0) * y2;
            break;
        }
        case Family::exampleS1: {
            const double x1 = sample_gaussian(rng);
            const double x2 = sample_gaussian(rng);
            const double x3 = sample_gaussian(rng);
            const int b = sample_bernoulli(rng, 0.5);
            const double y1 = sample_egpd(rng, std::exp(x1), std::exp(x2), 0.5);
            const double y2 = sample_exponential(rng, detail::exp_rate(10.0 * std::exp(x3), exp_convention));
            v = b * y1 + (1 - b) * y2;
            break;
        }
        default: throw std::invalid_argument("calibrate: unsupported family");
        }
    }
    out.param = detail::empirical_quantile(z, 1.0 - target_p1);
    return out;
}

/// Generates n_raw observations and balances them by undersampling the
/// majority class. If a class is missing from the raw draw, one retry is
/// attempted before giving up.
inline LabeledDataset balanced_validation_set(const GeneratorSpec& spec, std::size_t n_raw, RngStream& rng) {
    GeneratorSpec raw = spec;
    raw.n = n_raw;
    for (int attempt = 0; attempt < 2; ++attempt) {
        LabeledDataset ds = generate(raw, rng);
        const ClassView view = partition_classes(ds);
        if (view.n1 > 0 && view.n0 > 0) return balance_by_undersampling(ds, rng);
    }
    throw std::runtime_error("balanced_validation_set: a class is empty after retry");
}

// ---------------------------------------------------------------------------
// Example 4 analytics: its mixture density is available in closed form, which
// powers the Bayes-oracle checks and the audit's minority marginal.
// ---------------------------------------------------------------------------

inline double example4_class_density(const std::array<double, 4>& weights, int label, std::span<const double> x) {
    if (x.size() != 2) throw std::invalid_argument("example4_class_density: d must be 2");
    const double wsum = label == 1 ? weights[2] + weights[3] : weights[0] + weights[1];
    if (!(wsum > 0.0)) return 0.0;
    const double norm = 1.0 / (2.0 * std::numbers::pi * detail::kExample4Var);
    double f = 0.0;
    for (std::size_t c = label == 1 ? 2 : 0; c < (label == 1 ? 4u : 2u); ++c) {
        const double dx = x[0] - detail::kExample4Means[c][0];
        const double dy = x[1] - detail::kExample4Means[c][1];
        f += (weights[c] / wsum) * norm * std::exp(-(dx * dx + dy * dy) / (2.0 * detail::kExample4Var));
    }
    return f;
}

inline int example4_bayes_predict(const std::array<double, 4>& weights, std::span<const double> x) {
    return example4_class_density(weights, 1, x) > example4_class_density(weights, 0, x) ? 1 : 0;
}

/// Sampler for the example4 minority marginal X | Y = 1.
inline MinoritySampler example4_minority_sampler(const std::array<double, 4>& weights) {
    const double w2 = weights[2], w3 = weights[3];
    if (!(w2 + w3 > 0.0)) throw std::invalid_argument("example4_minority_sampler: minority weight is zero");
    return [w2, w3](RngStream& rng, std::size_t count) {
        const std::array<double, 2> w{w2, w3};
        Matrix pts(count, 2);
        const double sd = std::sqrt(detail::kExample4Var);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t c = 2 + sample_categorical(rng, std::span<const double>(w));
            const auto g = sample_gaussian_vector(rng, 2);
            pts(i, 0) = detail::kExample4Means[c][0] + sd * g[0];
            pts(i, 1) = detail::kExample4Means[c][1] + sd * g[1];
        }
        return pts;
    };
}

} // namespace imbo
