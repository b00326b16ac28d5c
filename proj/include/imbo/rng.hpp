#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace imbo {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_key(std::uint64_t parent_key, std::uint64_t label) {
    std::uint64_t s = parent_key ^ (0xA0761D6478BD642FULL + label * 0xE7037ED1A0B428DBULL);
    detail::splitmix64(s);
    return detail::splitmix64(s);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

/// Deterministic splittable random stream (xoshiro256++ core, SplitMix64 key
/// derivation). The generator state advances with every draw, but the stream
/// key is a pure function of (root seed, lineage), so substream() yields the
/// same child no matter how much of the parent has been consumed. That is the
/// property replication layouts rely on: substream(root, i) always denotes
/// the same stream.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed) : root_seed_(seed) {
        std::uint64_t s = seed;
        detail::splitmix64(s);
        key_ = detail::splitmix64(s);
        init_state();
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl64(s_[3], 45);
        return result;
    }

    /// Child stream identified by (this stream's lineage, label). Does not
    /// consume or disturb the parent.
    RngStream substream(std::uint64_t label) const {
        RngStream child;
        child.root_seed_ = root_seed_;
        child.key_ = detail::derive_key(key_, label);
        child.lineage_ = lineage_;
        child.lineage_.push_back(label);
        child.init_state();
        return child;
    }

    std::uint64_t root_seed() const { return root_seed_; }
    const std::vector<std::uint64_t>& lineage() const { return lineage_; }

private:
    RngStream() = default;

    void init_state() {
        std::uint64_t s = key_;
        for (auto& w : s_) w = detail::splitmix64(s);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t root_seed_ = 0;
    std::uint64_t key_ = 0;
    std::array<std::uint64_t, 4> s_{};
    std::vector<std::uint64_t> lineage_;
};

inline RngStream substream(const RngStream& parent, std::uint64_t label) {
    return parent.substream(label);
}

// ---------------------------------------------------------------------------
// Distribution samplers. All are free functions over any 64-bit uniform
// random bit generator, consume only the stream they are given, and (where a
// closed-form quantile exists) are exposed as quantile functions too so tests
// can drive them with forced uniforms.
// ---------------------------------------------------------------------------

template <class G>
double sample_uniform(G& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Unbiased index in [0, n). Returns 0 without consuming the stream when
/// n <= 1.
template <class G>
std::size_t sample_index(G& g, std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x = g();
    while (x >= limit) x = g();
    return static_cast<std::size_t>(x % span);
}

/// One Box-Muller pair of independent standard normals.
template <class G>
std::pair<double, double> sample_gaussian_pair(G& g) {
    const double u1 = 1.0 - sample_uniform(g); // (0, 1]
    const double u2 = sample_uniform(g);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

template <class G>
double sample_gaussian(G& g) {
    return sample_gaussian_pair(g).first;
}

template <class G>
std::vector<double> sample_gaussian_vector(G& g, std::size_t d) {
    std::vector<double> out(d);
    std::size_t i = 0;
    while (i + 1 < d) {
        const auto [a, b] = sample_gaussian_pair(g);
        out[i++] = a;
        out[i++] = b;
    }
    if (i < d) out[i] = sample_gaussian(g);
    return out;
}

template <class G>
int sample_bernoulli(G& g, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_bernoulli: p must be in [0,1]");
    return sample_uniform(g) < p ? 1 : 0;
}

template <class G>
std::size_t sample_categorical(G& g, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("sample_categorical: weights must be finite and nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("sample_categorical: weights must sum to a positive value");
    const double u = sample_uniform(g) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > 0.0) last_positive = i;
        acc += weights[i];
        if (u < acc) return i;
    }
    return last_positive; // guards against rounding at the top end
}

/// Exponential with RATE parameter (mean 1/rate).
template <class G>
double sample_exponential(G& g, double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("sample_exponential: rate must be > 0");
    double u = sample_uniform(g);
    while (u == 0.0) u = sample_uniform(g);
    return -std::log1p(-u) / rate;
}

/// Generalized Pareto quantile: survival (1 + xi z / sigma)^(-1/xi), z >= 0.
/// The xi -> 0 limit is the exponential with mean sigma.
inline double gpd_quantile(double u, double sigma, double xi) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gpd_quantile: sigma must be > 0");
    if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("gpd_quantile: u must be in [0,1)");
    if (xi == 0.0) return -sigma * std::log1p(-u);
    return (sigma / xi) * (std::pow(1.0 - u, -xi) - 1.0);
}

/// Extended GPD quantile for the power family F = H^kappa, H the GPD CDF.
inline double egpd_quantile(double u, double kappa, double sigma, double xi) {
    if (!(kappa > 0.0)) throw std::invalid_argument("egpd_quantile: kappa must be > 0");
    const double v = (kappa == 1.0) ? u : std::pow(u, 1.0 / kappa);
    return gpd_quantile(v, sigma, xi);
}

template <class G>
double sample_gpd(G& g, double sigma, double xi) {
    return gpd_quantile(sample_uniform(g), sigma, xi);
}

template <class G>
double sample_egpd(G& g, double kappa, double sigma, double xi) {
    return egpd_quantile(sample_uniform(g), kappa, sigma, xi);
}

} // namespace imbo
