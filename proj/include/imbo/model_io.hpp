#pragma once

#include <fstream>
#include <string>

#include "json.hpp"

#include "imbo/classifiers.hpp"

namespace imbo {

// JSON save/load for fitted models (weights, bandwidth matrices, K,
// thresholds, and the training points the nonparametric rules carry).

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto& rows = j.at("data");
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t jj = 0; jj < m.cols(); ++jj) m(i, jj) = rows[i][jj].get<double>();
    return m;
}

} // namespace detail

inline nlohmann::json to_json(const BandwidthSpec& bw) {
    if (bw.is_scalar()) return {{"kind", "scalar"}, {"h", bw.h}};
    return {{"kind", "matrix"}, {"cov", detail::matrix_to_json(bw.cov)}, {"factor", detail::matrix_to_json(bw.factor)}};
}

inline BandwidthSpec bandwidth_from_json(const nlohmann::json& j) {
    if (j.at("kind") == "scalar") return BandwidthSpec::scalar(j.at("h").get<double>());
    BandwidthSpec bw;
    bw.kind = BandwidthSpec::Kind::matrix;
    bw.cov = detail::matrix_from_json(j.at("cov"));
    bw.factor = detail::matrix_from_json(j.at("factor"));
    return bw;
}

inline nlohmann::json to_json(const LinearModel& m) {
    return {{"model", "linear"},
            {"weights", m.weights},
            {"intercept", m.intercept},
            {"l1_penalty", m.l1_penalty},
            {"diagnostics",
             {{"objective", m.diagnostics.objective},
              {"iterations", m.diagnostics.iterations},
              {"converged", m.diagnostics.converged}}}};
}

inline LinearModel linear_from_json(const nlohmann::json& j) {
    LinearModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    m.l1_penalty = j.at("l1_penalty").get<double>();
    const auto& d = j.at("diagnostics");
    m.diagnostics = {d.at("objective").get<double>(), d.at("iterations").get<std::size_t>(),
                     d.at("converged").get<bool>()};
    return m;
}

inline nlohmann::json to_json(const KnnModel& m) {
    return {{"model", "knn"},
            {"K", m.K()},
            {"threshold", m.threshold()},
            {"points", detail::matrix_to_json(m.index().points())},
            {"labels", m.labels()}};
}

inline KnnModel knn_from_json(const nlohmann::json& j) {
    LabeledDataset ds;
    ds.features = detail::matrix_from_json(j.at("points"));
    ds.labels = j.at("labels").get<std::vector<std::uint8_t>>();
    return KnnModel::fit(ds, j.at("K").get<std::size_t>(), j.at("threshold").get<double>());
}

inline nlohmann::json to_json(const KsPluginModel& m) {
    nlohmann::json j{{"model", "ks"}, {"bw0", to_json(m.bw0())}, {"bw1", to_json(m.bw1())}};
    j["class0_points"] = m.class0_kde() ? detail::matrix_to_json(m.class0_kde()->points()) : nlohmann::json();
    j["class1_points"] = m.class1_kde() ? detail::matrix_to_json(m.class1_kde()->points()) : nlohmann::json();
    return j;
}

inline KsPluginModel ks_from_json(const nlohmann::json& j) {
    LabeledDataset ds;
    std::size_t dim = 0;
    if (!j.at("class0_points").is_null()) {
        const Matrix pts = detail::matrix_from_json(j.at("class0_points"));
        dim = pts.cols();
        for (std::size_t i = 0; i < pts.rows(); ++i) {
            ds.features.append_row(pts.row(i));
            ds.labels.push_back(0);
        }
    }
    if (!j.at("class1_points").is_null()) {
        const Matrix pts = detail::matrix_from_json(j.at("class1_points"));
        dim = pts.cols();
        for (std::size_t i = 0; i < pts.rows(); ++i) {
            ds.features.append_row(pts.row(i));
            ds.labels.push_back(1);
        }
    }
    if (ds.features.cols() == 0) ds.features = Matrix(0, dim);
    return KsPluginModel::fit(ds, bandwidth_from_json(j.at("bw0")), bandwidth_from_json(j.at("bw1")));
}

inline void save_model_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model_json: cannot open '" + path + "'");
    out << j.dump(2) << "\n";
}

inline nlohmann::json load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model_json: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return j;
}

} // namespace imbo
