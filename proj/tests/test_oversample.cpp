#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "imbo/oversample.hpp"

using namespace imbo;
using test_helpers::ScriptedGen;

namespace {

Matrix points_1d(std::initializer_list<double> xs) {
    Matrix m(xs.size(), 1);
    std::size_t i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
}

/// 256 points in d=4 whose sample covariance is exactly the identity:
/// +-sqrt((n-1)/2) on each axis, the rest at the origin.
Matrix identity_covariance_cloud() {
    const std::size_t n = 256, d = 4;
    Matrix m(n, d);
    const double a = std::sqrt(static_cast<double>(n - 1) / 2.0);
    for (std::size_t j = 0; j < d; ++j) {
        m(2 * j, j) = a;
        m(2 * j + 1, j) = -a;
    }
    return m;
}

} // namespace

TEST_CASE("scott bandwidth with identity covariance", "[oversample]") {
    const auto bw = scott_bandwidth(identity_covariance_cloud());
    REQUIRE(bw.kind == BandwidthSpec::Kind::matrix);
    // 256^(-1/8) = 1/2 exactly
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            REQUIRE(bw.factor(i, j) == Catch::Approx(i == j ? 0.5 : 0.0).margin(1e-12));
    // stored covariance is factor * factor^T
    for (std::size_t i = 0; i < 4; ++i) REQUIRE(bw.cov(i, i) == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("scott bandwidth is linear in scale", "[oversample]") {
    RngStream rng(12);
    Matrix pts(60, 3);
    for (auto& v : pts.data()) v = sample_gaussian(rng);
    const auto one = scott_bandwidth(pts, 1.0);
    const auto two = scott_bandwidth(pts, 2.0);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) REQUIRE(two.factor(i, j) == Catch::Approx(2.0 * one.factor(i, j)).margin(1e-14));
    REQUIRE_THROWS(scott_bandwidth(pts, 0.0));
    REQUIRE_THROWS(scott_bandwidth(Matrix(1, 3), 1.0));
}

TEST_CASE("scott bandwidth on degenerate data collapses onto the line", "[oversample]") {
    // points on the line y = 2x: singular covariance, rescued by jitter
    Matrix pts(50, 2);
    for (int i = 0; i < 50; ++i) {
        pts(i, 0) = 0.1 * i;
        pts(i, 1) = 0.2 * i;
    }
    const auto bw = scott_bandwidth(pts);
    RngStream rng(5);
    const auto result = kdeo_sample(pts, bw, 2000, rng);
    for (std::size_t i = 0; i < result.synthetic.rows(); ++i) {
        const auto& prov = result.provenance[i];
        const double dx = result.synthetic(i, 0) - pts(prov.seed_index, 0);
        const double dy = result.synthetic(i, 1) - pts(prov.seed_index, 1);
        REQUIRE(std::abs(dy - 2.0 * dx) < 1e-4); // noise stays on the line
    }
}

TEST_CASE("smote with a lone minority point copies it", "[oversample]") {
    Matrix lone(1, 2);
    lone(0, 0) = 3.0;
    lone(0, 1) = -1.0;
    RngStream rng(1);
    const auto result = smote_sample(lone, {5}, 5, rng);
    REQUIRE(result.synthetic.rows() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        REQUIRE(result.synthetic(i, 0) == 3.0);
        REQUIRE(result.synthetic(i, 1) == -1.0);
        REQUIRE_FALSE(result.provenance[i].neighbor_index.has_value());
    }
}

TEST_CASE("smote with the lambda stream forced to zero returns seeds", "[oversample]") {
    const auto minority = points_1d({0.0, 1.0, 2.0, 5.0});
    ScriptedGen zeros; // all draws zero: seed 0, neighbor slot 0, lambda 0
    const auto result = smote_sample(minority, {2}, 100, zeros);
    for (std::size_t i = 0; i < 100; ++i) {
        const auto& prov = result.provenance[i];
        REQUIRE(prov.lambda == 0.0);
        REQUIRE(result.synthetic(i, 0) == minority(prov.seed_index, 0));
    }
}

TEST_CASE("smote outputs lie on seed-neighbor segments", "[oversample]") {
    const auto minority = points_1d({0.0, 1.0, 2.0});
    RngStream rng(42);
    const auto result = smote_sample(minority, {1}, 10000, rng);
    std::array<std::size_t, 3> seed_count{};
    const auto index = NeighborIndex::build(minority);
    for (std::size_t i = 0; i < result.synthetic.rows(); ++i) {
        const auto& prov = result.provenance[i];
        ++seed_count[prov.seed_index];
        // neighbor must be the brute-force 1-NN of the seed
        const auto nn = test_helpers::brute_force_knn(minority, minority.row(prov.seed_index), 1,
                                                      static_cast<std::ptrdiff_t>(prov.seed_index));
        REQUIRE(*prov.neighbor_index == nn[0]);
        const double s = minority(prov.seed_index, 0), e = minority(*prov.neighbor_index, 0);
        const double x = result.synthetic(i, 0);
        REQUIRE(x >= std::min(s, e) - 1e-12);
        REQUIRE(x <= std::max(s, e) + 1e-12);
        // exact reconstruction from provenance
        REQUIRE(std::abs(x - ((1.0 - *prov.lambda) * s + *prov.lambda * e)) <= 1e-12 * std::abs(e - s));
    }
    for (std::size_t c : seed_count) {
        const double freq = static_cast<double>(c) / 10000.0;
        REQUIRE(std::abs(freq - 1.0 / 3.0) < 0.02);
    }
}

TEST_CASE("smote seed marginal is uniform (chi-square)", "[oversample]") {
    RngStream rng(7);
    Matrix minority(20, 2);
    for (auto& v : minority.data()) v = sample_gaussian(rng);
    const auto result = smote_sample(minority, {5}, 100000, rng);
    std::vector<std::size_t> counts(20, 0);
    for (const auto& p : result.provenance) ++counts[p.seed_index];
    const double expected = 100000.0 / 20.0;
    double chi2 = 0.0;
    for (std::size_t c : counts) chi2 += (c - expected) * (c - expected) / expected;
    REQUIRE(chi2 < 43.82); // chi2_{19} at p = 0.001
}

TEST_CASE("smote clamps k to n1-1 and flags it", "[oversample]") {
    const auto minority = points_1d({0.0, 1.0, 2.0});
    RngStream rng(9);
    const auto result = smote_sample(minority, {10}, 50, rng);
    REQUIRE(result.effective_k == 2);
    REQUIRE(result.k_clamped);
    REQUIRE_THROWS_WITH(smote_sample(Matrix(0, 1), {5}, 10, rng), Catch::Matchers::ContainsSubstring("empty minority"));
}

TEST_CASE("smote convex hull property", "[oversample]") {
    RngStream rng(21);
    Matrix minority(15, 3);
    for (auto& v : minority.data()) v = sample_gaussian(rng);
    const auto result = smote_sample(minority, {5}, 10000, rng);
    for (std::size_t i = 0; i < result.synthetic.rows(); ++i) {
        const auto& prov = result.provenance[i];
        auto s = minority.row(prov.seed_index);
        auto e = minority.row(*prov.neighbor_index);
        double seg2 = 0.0, res2 = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double seg = e[j] - s[j];
            const double r = (result.synthetic(i, j) - s[j]) - *prov.lambda * seg;
            seg2 += seg * seg;
            res2 += r * r;
        }
        REQUIRE(std::sqrt(res2) <= 1e-12 * std::sqrt(seg2));
    }
}

TEST_CASE("kdeo with zero bandwidth bootstraps the minority", "[oversample]") {
    const auto minority = points_1d({0.0, 2.0, 5.0});
    RngStream rng(3);
    const auto result = kdeo_sample(minority, BandwidthSpec::scalar(0.0), 1000, rng);
    for (std::size_t i = 0; i < result.synthetic.rows(); ++i)
        REQUIRE(result.synthetic(i, 0) == minority(result.provenance[i].seed_index, 0));
}

TEST_CASE("kdeo displacement covariance matches the bandwidth", "[oversample]") {
    Matrix transform = Matrix::identity(2);
    transform(0, 0) = transform(1, 1) = 0.5;
    const auto bw = BandwidthSpec::from_transform(transform);
    RngStream rng(17);
    Matrix minority(10, 2);
    for (auto& v : minority.data()) v = sample_gaussian(rng);
    const std::size_t m = 100000;
    const auto result = kdeo_sample(minority, bw, m, rng);

    double mean[2] = {0.0, 0.0};
    std::vector<std::array<double, 2>> disp(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (int j = 0; j < 2; ++j) {
            disp[i][j] = result.synthetic(i, j) - minority(result.provenance[i].seed_index, j);
            mean[j] += disp[i][j];
        }
    }
    for (double& v : mean) v /= static_cast<double>(m);
    double cov[2][2] = {};
    for (const auto& dd : disp)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) cov[a][b] += (dd[a] - mean[a]) * (dd[b] - mean[b]);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) cov[a][b] /= static_cast<double>(m - 1);

    // H H^T = 0.25 I within 2% per entry
    REQUIRE(std::abs(cov[0][0] - 0.25) < 0.005);
    REQUIRE(std::abs(cov[1][1] - 0.25) < 0.005);
    REQUIRE(std::abs(cov[0][1]) < 0.005);

    // centered noise: mean displacement norm < 4 ||H||_F / sqrt(m d)
    const double mean_norm = std::sqrt(mean[0] * mean[0] + mean[1] * mean[1]);
    REQUIRE(mean_norm < 4.0 * frobenius_norm(transform) / std::sqrt(static_cast<double>(m) * 2.0));
}

TEST_CASE("kdeo from a single point reproduces the kernel law", "[oversample]") {
    Matrix origin(1, 2);
    const auto bw = BandwidthSpec::from_transform(Matrix::identity(2));
    RngStream rng(23);
    const auto result = kdeo_sample(origin, bw, 100000, rng);
    for (int j = 0; j < 2; ++j) {
        std::vector<double> coord(result.synthetic.rows());
        for (std::size_t i = 0; i < coord.size(); ++i) coord[i] = result.synthetic(i, j);
        REQUIRE(test_helpers::ks_distance(coord, test_helpers::normal_cdf) < 0.01);
    }
}

TEST_CASE("scalar h and matrix hI produce identical draws", "[oversample]") {
    const auto minority = points_1d({0.0, 1.0, 4.0});
    Matrix hi = Matrix::identity(1);
    hi(0, 0) = 0.7;
    RngStream a(31), b(31);
    const auto rs = kdeo_sample(minority, BandwidthSpec::scalar(0.7), 5000, a);
    const auto rm = kdeo_sample(minority, BandwidthSpec::from_transform(hi), 5000, b);
    REQUIRE(rs.synthetic == rm.synthetic);
}

TEST_CASE("oversampling is deterministic in (inputs, seed)", "[oversample]") {
    RngStream a(77), b(77);
    Matrix minority(12, 2);
    RngStream init(1);
    for (auto& v : minority.data()) v = sample_gaussian(init);
    const auto r1 = smote_sample(minority, {3}, 500, a);
    const auto r2 = smote_sample(minority, {3}, 500, b);
    REQUIRE(r1.synthetic == r2.synthetic);
    RngStream c(78), d(78);
    const auto k1 = kdeo_sample(minority, scott_bandwidth(minority), 500, c);
    const auto k2 = kdeo_sample(minority, scott_bandwidth(minority), 500, d);
    REQUIRE(k1.synthetic == k2.synthetic);
}

TEST_CASE("oversample_to_balance modes", "[oversample]") {
    RngStream init(2);
    LabeledDataset ds;
    ds.features = Matrix(130, 2);
    for (auto& v : ds.features.data()) v = sample_gaussian(init);
    for (int i = 0; i < 130; ++i) ds.labels.push_back(i < 30);

    OversamplerConfig pure{OversampleMethod::smote, 5, 1.0, std::nullopt, AugmentMode::pure_synthetic};
    RngStream r1(4);
    const auto out_pure = oversample_to_balance(ds, pure, r1);
    auto view = partition_classes(out_pure.data);
    REQUIRE(view.n0 == 100);
    REQUIRE(view.n1 == 100);
    std::size_t synthetic = 0;
    for (auto f : out_pure.synthetic_flag) synthetic += f;
    REQUIRE(synthetic == 100);

    OversamplerConfig topup = pure;
    topup.mode = AugmentMode::top_up;
    RngStream r2(4);
    const auto out_topup = oversample_to_balance(ds, topup, r2);
    view = partition_classes(out_topup.data);
    REQUIRE(view.n0 == 100);
    REQUIRE(view.n1 == 100);
    synthetic = 0;
    for (auto f : out_topup.synthetic_flag) synthetic += f;
    REQUIRE(synthetic == 70); // 30 originals kept

    // empty minority: unchanged
    LabeledDataset empty_min;
    empty_min.features = Matrix(5, 1);
    empty_min.labels.assign(5, 0);
    RngStream r3(4);
    const auto unchanged = oversample_to_balance(empty_min, pure, r3);
    REQUIRE(unchanged.data.n() == 5);
    REQUIRE(unchanged.data.features == empty_min.features);
}

TEST_CASE("oversample_to_balance with kdeo and a lone minority point", "[oversample]") {
    LabeledDataset ds;
    ds.features = Matrix(6, 2);
    for (int i = 0; i < 6; ++i) ds.features(i, 0) = i;
    ds.labels = {1, 0, 0, 0, 0, 0};
    OversamplerConfig cfg{OversampleMethod::kdeo, 5, 1.0, std::nullopt, AugmentMode::pure_synthetic};
    RngStream rng(6);
    const auto out = oversample_to_balance(ds, cfg, rng);
    const auto view = partition_classes(out.data);
    REQUIRE(view.n1 == 5);
    for (std::size_t i : view.minority_indices) REQUIRE(out.data.features(i, 0) == 0.0); // copies of the lone point
}
