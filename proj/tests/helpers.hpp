#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "imbo/linalg.hpp"

namespace test_helpers {

/// Independent brute-force k-nearest-neighbor oracle with the same tie rule
/// as the library (ascending distance, then ascending row index).
inline std::vector<std::size_t> brute_force_knn(const imbo::Matrix& points, std::span<const double> query,
                                                std::size_t k, std::ptrdiff_t exclude = -1) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        if (exclude >= 0 && static_cast<std::size_t>(exclude) == i) continue;
        all.emplace_back(imbo::squared_distance(query, points.row(i)), i);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
    return out;
}

inline double brute_force_kth_distance(const imbo::Matrix& points, std::span<const double> query, std::size_t k) {
    std::vector<double> d2;
    for (std::size_t i = 0; i < points.rows(); ++i) d2.push_back(imbo::squared_distance(query, points.row(i)));
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(k - 1), d2.end());
    return std::sqrt(d2[k - 1]);
}

// --- analytic CDFs ---------------------------------------------------------

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double gpd_cdf(double z, double sigma, double xi) {
    if (z <= 0.0) return 0.0;
    if (xi == 0.0) return 1.0 - std::exp(-z / sigma);
    return 1.0 - std::pow(1.0 + xi * z / sigma, -1.0 / xi);
}

inline double egpd_cdf(double z, double kappa, double sigma, double xi) {
    return std::pow(gpd_cdf(z, sigma, xi), kappa);
}

inline double exponential_cdf(double z, double rate) { return z <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * z); }

/// sup_x |F_n(x) - F(x)| over the sample points (the Kolmogorov statistic).
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        sup = std::max(sup, std::abs(f - static_cast<double>(i) / n));
        sup = std::max(sup, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return sup;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Bit generator that plays back a fixed script (cycled); uniform doubles can
/// be forced by choosing the bits as u * 2^53 << 11.
struct ScriptedGen {
    using result_type = std::uint64_t;
    std::vector<std::uint64_t> script{0};
    std::size_t pos = 0;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ULL; }
    result_type operator()() {
        const auto v = script[pos % script.size()];
        ++pos;
        return v;
    }
    static std::uint64_t bits_for_uniform(double u) {
        return static_cast<std::uint64_t>(u * 9007199254740992.0) << 11; // u * 2^53
    }
};

} // namespace test_helpers
