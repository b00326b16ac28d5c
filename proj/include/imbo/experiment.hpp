#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "imbo/classifiers.hpp"
#include "imbo/dataset.hpp"
#include "imbo/evaluation.hpp"
#include "imbo/oversample.hpp"
#include "imbo/simgen.hpp"

namespace imbo {

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

enum class ClassifierKind { knn, ks, lr, bbc };

inline const char* to_string(ClassifierKind c) {
    switch (c) {
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::ks: return "ks";
    case ClassifierKind::lr: return "lr";
    case ClassifierKind::bbc: return "bbc";
    }
    return "?";
}

inline ClassifierKind classifier_from_string(const std::string& s) {
    if (s == "knn") return ClassifierKind::knn;
    if (s == "ks") return ClassifierKind::ks;
    if (s == "lr") return ClassifierKind::lr;
    if (s == "bbc") return ClassifierKind::bbc;
    throw std::invalid_argument("unknown classifier '" + s + "'");
}

struct MethodConfig {
    std::string id;
    ClassifierKind classifier = ClassifierKind::knn;
    std::optional<OversamplerConfig> oversampler; // absent: train on raw data (BBC always does)
    bool cv = false;                              // select K by cross-validation (knn / bbc)
    std::optional<std::size_t> fixed_K;           // overrides sqrt(n) / CV
    double lr_lambda = 0.0;                       // L1 penalty for lr
};

struct SimSource {
    GeneratorSpec base;           // n is ignored; train_n below is used
    std::size_t train_n = 1000;
};

struct CsvSource {
    std::string path;
    std::string label_column = "label";
    bool has_header = true;
    bool standardize = true;
    double train_fraction = 0.7;
};

/// Full description of one experiment: data source, method roster, imbalance
/// levels, replication count and seed. For simulated sources a level is the
/// majority share 1 - p1 (e.g. 0.90); for CSV sources it is the target
/// minority ratio of the training set (e.g. 0.10).
struct ExperimentSpec {
    std::variant<SimSource, CsvSource> source = SimSource{};
    std::vector<MethodConfig> methods;
    std::size_t replications = 50;
    std::vector<double> levels;
    std::uint64_t seed = 1;
    std::string out_csv;  // empty: do not write
    std::string out_json; // empty: do not write
    std::size_t mc_size = 1000000;
    std::uint64_t calibration_seed = 1000003; // independent of `seed` so caches are reusable
    std::string calibration_cache;            // optional JSON sidecar path
    std::size_t cv_folds = 5;
    CvMetric cv_metric = CvMetric::am_risk_raw_fold;
    std::size_t validation_raw_n = 10000;
    std::size_t workers = 0; // 0: IMBO_WORKERS env var, then hardware concurrency

    void validate() const {
        if (replications < 1) throw std::invalid_argument("ExperimentSpec: replications must be >= 1");
        if (methods.empty()) throw std::invalid_argument("ExperimentSpec: at least one method required");
        if (levels.empty()) throw std::invalid_argument("ExperimentSpec: at least one level required");
        for (const auto& m : methods)
            if (m.id.empty()) throw std::invalid_argument("ExperimentSpec: method id must not be empty");
    }
};

struct ResultRow {
    std::string method;
    double level = 0.0;
    std::size_t replication = 0;
    double am_risk = 0.0;
    double err_class1 = 0.0;
    double err_class0 = 0.0;
    std::optional<double> chosen_param; // K for knn/bbc
    std::optional<double> axis_value;   // sweep axis
    bool clamped = false;
    std::string error; // nonempty: the cell failed and the row carries no risk
    double wall_ms = 0.0;
};

struct SummaryEntry {
    std::string method;
    double level = 0.0;
    std::optional<double> axis_value;
    std::size_t replications = 0;
    std::size_t errors = 0;
    double mean_am_risk = 0.0;
    double std_error = 0.0;
    double mean_err_class1 = 0.0;
    double mean_err_class0 = 0.0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<SummaryEntry> summary;
};

// ---------------------------------------------------------------------------
// Substream layout. Cell stream C = root.substream(level_idx).substream(rep);
// the shared data draw uses C.substream(0) and method m uses C.substream(1+m).
// Methods within a replication therefore see the same generated data (paired
// comparison), and any replication can be reproduced in isolation.
// ---------------------------------------------------------------------------

inline RngStream experiment_cell_stream(std::uint64_t seed, std::size_t level_idx, std::size_t rep) {
    return RngStream(seed).substream(level_idx).substream(rep);
}

inline RngStream experiment_data_stream(std::uint64_t seed, std::size_t level_idx, std::size_t rep) {
    return experiment_cell_stream(seed, level_idx, rep).substream(0);
}

// ---------------------------------------------------------------------------
// Calibration cache
// ---------------------------------------------------------------------------

namespace detail {

inline std::string calibration_key(Family family, std::size_t d, double target_p1, std::size_t mc_size,
                                   std::uint64_t calib_seed, ExpConvention conv) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s|d=%zu|p1=%.8f|mc=%zu|seed=%llu|exp=%s", to_string(family), d, target_p1,
                  mc_size, static_cast<unsigned long long>(calib_seed), conv == ExpConvention::rate ? "rate" : "mean");
    return buf;
}

class CalibrationCache {
public:
    explicit CalibrationCache(std::string path) : path_(std::move(path)) {
        if (path_.empty()) return;
        std::ifstream in(path_);
        if (!in) return;
        nlohmann::json j;
        in >> j;
        for (auto it = j.begin(); it != j.end(); ++it) {
            CalibrationResult c;
            c.param = it.value().at("param").get<double>();
            const auto w = it.value().at("weights").get<std::vector<double>>();
            std::copy(w.begin(), w.end(), c.weights.begin());
            entries_[it.key()] = c;
        }
    }

    CalibrationResult get_or_compute(Family family, std::size_t d, double target_p1, std::size_t mc_size,
                                     std::uint64_t calib_seed, ExpConvention conv) {
        const std::string key = calibration_key(family, d, target_p1, mc_size, calib_seed, conv);
        if (auto it = entries_.find(key); it != entries_.end()) {
            CalibrationResult c = it->second;
            c.family = family;
            c.d = d;
            c.target_p1 = target_p1;
            return c;
        }
        RngStream rng(calib_seed);
        const CalibrationResult c = calibrate(family, d, target_p1, mc_size, rng, conv);
        entries_[key] = c;
        dirty_ = true;
        return c;
    }

    void flush() const {
        if (path_.empty() || !dirty_) return;
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [key, c] : entries_)
            j[key] = {{"param", c.param}, {"weights", std::vector<double>(c.weights.begin(), c.weights.end())}};
        std::ofstream out(path_);
        if (out) out << j.dump(2) << "\n";
    }

private:
    std::string path_;
    std::map<std::string, CalibrationResult> entries_;
    bool dirty_ = false;
};

inline std::size_t resolve_workers(std::size_t configured) {
    if (configured > 0) return configured;
    if (const char* env = std::getenv("IMBO_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Method execution
// ---------------------------------------------------------------------------

namespace detail {

struct MethodOutcome {
    RiskReport risk;
    std::optional<double> chosen_param;
    bool clamped = false;
};

inline MethodOutcome run_method(const LabeledDataset& train, const LabeledDataset& validation,
                                const MethodConfig& method, const ExperimentSpec& spec, RngStream& mrng) {
    MethodOutcome out;

    // BBC never oversamples: it reweights via its threshold.
    const bool use_oversampler = method.oversampler.has_value() && method.classifier != ClassifierKind::bbc;

    LabeledDataset fit_data;
    if (use_oversampler) {
        RngStream ovs_rng = mrng.substream(0);
        AugmentedDataset aug = oversample_to_balance(train, *method.oversampler, ovs_rng);
        out.clamped = aug.k_clamped;
        fit_data = std::move(aug.data);
    } else {
        fit_data = train;
    }

    PredictionSet pred;
    switch (method.classifier) {
    case ClassifierKind::knn: {
        std::size_t K;
        if (method.fixed_K) {
            K = *method.fixed_K;
        } else if (method.cv) {
            if (!method.oversampler) throw std::invalid_argument("knn CV requires an oversampler config");
            const auto grid = default_K_grid(train.n());
            const CvResult cv = cross_validate_K(train, *method.oversampler, grid, spec.cv_folds, mrng.substream(1),
                                                 spec.cv_metric);
            K = cv.chosen_K;
        } else {
            K = sqrt_n_odd(train.n()); // sqrt of the raw training size, pre-oversampling
        }
        K = std::min(K, fit_data.n());
        out.chosen_param = static_cast<double>(K);
        pred = fit_knn(fit_data, K).predict(validation.features);
        break;
    }
    case ClassifierKind::bbc: {
        std::size_t K;
        if (method.fixed_K) {
            K = *method.fixed_K;
        } else if (method.cv) {
            const auto grid = default_K_grid(train.n());
            K = cross_validate_bbc(train, grid, spec.cv_folds, mrng.substream(1)).chosen_K;
        } else {
            K = sqrt_n_odd(train.n());
        }
        K = std::min(K, train.n());
        out.chosen_param = static_cast<double>(K);
        pred = fit_bbc(train, K).predict(validation.features);
        break;
    }
    case ClassifierKind::ks: {
        const auto [bw0, bw1] = ks_scott_bandwidths(fit_data);
        pred = fit_ks_plugin(fit_data, bw0, bw1).predict(validation.features);
        break;
    }
    case ClassifierKind::lr: {
        pred = predict_linear(fit_logistic(fit_data, method.lr_lambda), validation.features);
        break;
    }
    }

    out.risk = am_risk(pred, validation.labels);
    return out;
}

inline std::string sanitize_csv(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

inline std::vector<SummaryEntry> summarize(const std::vector<ResultRow>& rows) {
    // keyed by (method, level, axis); insertion order preserved
    std::vector<SummaryEntry> entries;
    std::vector<std::vector<double>> risks;
    auto find = [&](const ResultRow& r) -> std::size_t {
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].method == r.method && entries[i].level == r.level && entries[i].axis_value == r.axis_value)
                return i;
        entries.push_back({r.method, r.level, r.axis_value, 0, 0, 0.0, 0.0, 0.0, 0.0});
        risks.emplace_back();
        return entries.size() - 1;
    };
    for (const auto& r : rows) {
        const std::size_t i = find(r);
        ++entries[i].replications;
        if (!r.error.empty()) {
            ++entries[i].errors;
            continue;
        }
        risks[i].push_back(r.am_risk);
        entries[i].mean_am_risk += r.am_risk;
        entries[i].mean_err_class1 += r.err_class1;
        entries[i].mean_err_class0 += r.err_class0;
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto n = risks[i].size();
        if (n == 0) continue;
        entries[i].mean_am_risk /= static_cast<double>(n);
        entries[i].mean_err_class1 /= static_cast<double>(n);
        entries[i].mean_err_class0 /= static_cast<double>(n);
        if (n >= 2) {
            double ss = 0.0;
            for (double v : risks[i]) ss += (v - entries[i].mean_am_risk) * (v - entries[i].mean_am_risk);
            entries[i].std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
        }
    }
    return entries;
}

inline void write_rows_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_rows_csv: cannot open '" + path + "'");
    out << "method,level,replication,am_risk,err_class1,err_class0,chosen_param,axis_value,clamped,error,wall_ms\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        out << r.method << "," << num(r.level) << "," << r.replication << ",";
        if (r.error.empty()) out << num(r.am_risk) << "," << num(r.err_class1) << "," << num(r.err_class0) << ",";
        else out << ",,,";
        out << (r.chosen_param ? num(*r.chosen_param) : "") << ",";
        out << (r.axis_value ? num(*r.axis_value) : "") << ",";
        out << (r.clamped ? 1 : 0) << ",";
        out << detail::sanitize_csv(r.error) << ",";
        out << num(r.wall_ms) << "\n";
    }
}

nlohmann::json spec_to_json(const ExperimentSpec& spec);

inline void write_summary_json(const ExperimentSpec& spec, const std::vector<SummaryEntry>& summary,
                               const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["config"] = spec_to_json(spec);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : summary) {
        nlohmann::json row{{"method", e.method},          {"level", e.level},
                           {"replications", e.replications}, {"errors", e.errors},
                           {"mean_am_risk", e.mean_am_risk}, {"std_error", e.std_error},
                           {"mean_err_class1", e.mean_err_class1}, {"mean_err_class0", e.mean_err_class0}};
        if (e.axis_value) row["axis_value"] = *e.axis_value;
        rows.push_back(std::move(row));
    }
    j["summary"] = std::move(rows);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_summary_json: cannot open '" + path + "'");
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// The experiment driver
// ---------------------------------------------------------------------------

namespace detail {

struct CellInput {
    std::size_t level_idx;
    std::size_t rep;
};

/// Runs one (level, replication) cell: draw/derive the data once, then run
/// every method on it.
inline std::vector<ResultRow> run_cell(const ExperimentSpec& spec, const LabeledDataset* csv_data,
                                       const std::vector<CalibrationResult>& calibrations, std::size_t level_idx,
                                       std::size_t rep) {
    const double level = spec.levels[level_idx];
    std::vector<ResultRow> rows;
    rows.reserve(spec.methods.size());
    for (const auto& m : spec.methods) rows.push_back({m.id, level, rep});

    RngStream cell = experiment_cell_stream(spec.seed, level_idx, rep);
    RngStream data_rng = cell.substream(0);

    LabeledDataset train, validation;
    try {
        if (std::holds_alternative<SimSource>(spec.source)) {
            const auto& sim = std::get<SimSource>(spec.source);
            GeneratorSpec gspec = sim.base;
            apply(gspec, calibrations[level_idx]);
            gspec.n = sim.train_n;
            train = generate(gspec, data_rng);
            validation = balanced_validation_set(gspec, spec.validation_raw_n, data_rng);
        } else {
            const auto& csv = std::get<CsvSource>(spec.source);
            auto [tr, val] = train_validation_split(*csv_data, SplitSpec{csv.train_fraction, 0}, data_rng);
            if (csv.standardize) {
                auto [tr_s, others, params] = standardize(tr, {val});
                tr = std::move(tr_s);
                val = std::move(others[0]);
            }
            train = subsample_minority(tr, level, data_rng);
            validation = balance_by_undersampling(val, data_rng);
        }
    } catch (const std::exception& e) {
        for (auto& r : rows) r.error = e.what();
        return rows;
    }

    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            RngStream mrng = cell.substream(1 + mi);
            const MethodOutcome outcome = run_method(train, validation, spec.methods[mi], spec, mrng);
            rows[mi].am_risk = outcome.risk.risk;
            rows[mi].err_class1 = outcome.risk.err_class1;
            rows[mi].err_class0 = outcome.risk.err_class0;
            rows[mi].chosen_param = outcome.chosen_param;
            rows[mi].clamped = outcome.clamped;
        } catch (const std::exception& e) {
            rows[mi].error = e.what();
        }
        rows[mi].wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    return rows;
}

} // namespace detail

/// Runs the experiment grid (levels x replications x methods) on a worker
/// pool; rows come out in deterministic (level, replication, method) order
/// regardless of scheduling. Rerunning with the same spec and seed reproduces
/// every column except wall_ms.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();

    LabeledDataset csv_data;
    const LabeledDataset* csv_ptr = nullptr;
    std::vector<CalibrationResult> calibrations;
    if (std::holds_alternative<SimSource>(spec.source)) {
        const auto& sim = std::get<SimSource>(spec.source);
        detail::CalibrationCache cache(spec.calibration_cache);
        for (double level : spec.levels) {
            const double p1 = 1.0 - level;
            if (!(p1 > 0.0 && p1 < 1.0)) throw std::invalid_argument("run_experiment: sim level must be in (0,1)");
            calibrations.push_back(cache.get_or_compute(sim.base.family, sim.base.d, p1, spec.mc_size,
                                                        spec.calibration_seed, sim.base.exp_convention));
        }
        cache.flush();
    } else {
        const auto& csv = std::get<CsvSource>(spec.source);
        csv_data = load_csv(csv.path, csv.label_column, csv.has_header);
        csv_ptr = &csv_data;
    }

    std::vector<detail::CellInput> cells;
    for (std::size_t li = 0; li < spec.levels.size(); ++li)
        for (std::size_t rep = 0; rep < spec.replications; ++rep) cells.push_back({li, rep});

    std::vector<std::vector<ResultRow>> buckets(cells.size());
    std::atomic<std::size_t> next{0};
    const std::size_t workers = std::min(detail::resolve_workers(spec.workers), cells.size());
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            buckets[i] = detail::run_cell(spec, csv_ptr, calibrations, cells[i].level_idx, cells[i].rep);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    ExperimentResult result;
    for (auto& bucket : buckets)
        for (auto& row : bucket) result.rows.push_back(std::move(row));
    result.summary = summarize(result.rows);

    if (!spec.out_csv.empty()) write_rows_csv(result.rows, spec.out_csv);
    if (!spec.out_json.empty()) write_summary_json(spec, result.summary, spec.out_json);
    return result;
}

// ---------------------------------------------------------------------------
// Hyperparameter sweeps
// ---------------------------------------------------------------------------

struct SweepAxis {
    enum class Kind { smote_k, kdeo_scale } kind = Kind::smote_k;
    std::vector<double> values;
};

inline SweepAxis::Kind sweep_kind_from_string(const std::string& s) {
    if (s == "smote_k") return SweepAxis::Kind::smote_k;
    if (s == "kdeo_scale") return SweepAxis::Kind::kdeo_scale;
    throw std::invalid_argument("unknown sweep axis '" + s + "'");
}

/// One run_experiment per axis value, with the matching oversampler
/// hyperparameter overridden in every method that uses it; the axis value is
/// recorded on each row.
inline ExperimentResult sweep(const ExperimentSpec& spec, const SweepAxis& axis) {
    if (axis.values.empty()) throw std::invalid_argument("sweep: empty axis");
    ExperimentResult result;
    for (double value : axis.values) {
        ExperimentSpec s = spec;
        s.out_csv.clear();
        s.out_json.clear();
        for (auto& m : s.methods) {
            if (!m.oversampler) continue;
            if (axis.kind == SweepAxis::Kind::smote_k && m.oversampler->method == OversampleMethod::smote)
                m.oversampler->smote_k = static_cast<std::size_t>(std::llround(value));
            if (axis.kind == SweepAxis::Kind::kdeo_scale && m.oversampler->method == OversampleMethod::kdeo)
                m.oversampler->kdeo_scale = value;
        }
        ExperimentResult one = run_experiment(s);
        for (auto& row : one.rows) {
            row.axis_value = value;
            result.rows.push_back(std::move(row));
        }
    }
    result.summary = summarize(result.rows);
    if (!spec.out_csv.empty()) write_rows_csv(result.rows, spec.out_csv);
    if (!spec.out_json.empty()) write_summary_json(spec, result.summary, spec.out_json);
    return result;
}

/// 70:30 split, optional standardization, minority subsampling to each level,
/// balanced validation, then the configured methods. Convenience wrapper over
/// run_experiment with a CSV source.
inline ExperimentResult real_data_pipeline(const std::string& csv_path, const std::string& label_column,
                                           const std::vector<double>& levels, std::vector<MethodConfig> methods,
                                           std::size_t replications, std::uint64_t seed,
                                           const std::string& out_csv = "", const std::string& out_json = "") {
    ExperimentSpec spec;
    spec.source = CsvSource{csv_path, label_column, true, true, 0.7};
    spec.methods = std::move(methods);
    spec.levels = levels;
    spec.replications = replications;
    spec.seed = seed;
    spec.out_csv = out_csv;
    spec.out_json = out_json;
    return run_experiment(spec);
}

// ---------------------------------------------------------------------------
// JSON config round trip
// ---------------------------------------------------------------------------

inline nlohmann::json oversampler_to_json(const OversamplerConfig& o) {
    nlohmann::json j{{"method", to_string(o.method)},
                     {"mode", o.mode == AugmentMode::pure_synthetic ? "pure" : "topup"}};
    if (o.method == OversampleMethod::smote) j["k"] = o.smote_k;
    else j["scale"] = o.kdeo_scale;
    return j;
}

inline OversamplerConfig oversampler_from_json(const nlohmann::json& j) {
    OversamplerConfig o;
    const std::string method = j.at("method").get<std::string>();
    if (method == "smote") o.method = OversampleMethod::smote;
    else if (method == "kdeo") o.method = OversampleMethod::kdeo;
    else throw std::invalid_argument("unknown oversampler '" + method + "'");
    if (j.contains("k")) o.smote_k = j.at("k").get<std::size_t>();
    if (j.contains("scale")) o.kdeo_scale = j.at("scale").get<double>();
    if (j.contains("mode")) {
        const std::string mode = j.at("mode").get<std::string>();
        if (mode == "pure") o.mode = AugmentMode::pure_synthetic;
        else if (mode == "topup") o.mode = AugmentMode::top_up;
        else throw std::invalid_argument("unknown oversample mode '" + mode + "'");
    }
    return o;
}

inline nlohmann::json spec_to_json(const ExperimentSpec& spec) {
    nlohmann::json j;
    if (std::holds_alternative<SimSource>(spec.source)) {
        const auto& sim = std::get<SimSource>(spec.source);
        j["source"] = {{"type", "sim"},
                       {"family", to_string(sim.base.family)},
                       {"d", sim.base.d},
                       {"train_n", sim.train_n},
                       {"exp_convention", sim.base.exp_convention == ExpConvention::rate ? "rate" : "mean"}};
    } else {
        const auto& csv = std::get<CsvSource>(spec.source);
        j["source"] = {{"type", "csv"},         {"path", csv.path},
                       {"label_column", csv.label_column}, {"has_header", csv.has_header},
                       {"standardize", csv.standardize},   {"train_fraction", csv.train_fraction}};
    }
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : spec.methods) {
        nlohmann::json mj{{"id", m.id}, {"classifier", to_string(m.classifier)}, {"cv", m.cv}};
        if (m.oversampler) mj["oversampler"] = oversampler_to_json(*m.oversampler);
        if (m.fixed_K) mj["K"] = *m.fixed_K;
        if (m.classifier == ClassifierKind::lr) mj["lambda"] = m.lr_lambda;
        methods.push_back(std::move(mj));
    }
    j["methods"] = std::move(methods);
    j["replications"] = spec.replications;
    j["levels"] = spec.levels;
    j["seed"] = spec.seed;
    j["mc_size"] = spec.mc_size;
    j["calibration_seed"] = spec.calibration_seed;
    j["calibration_cache"] = spec.calibration_cache;
    j["cv_folds"] = spec.cv_folds;
    j["cv_metric"] = spec.cv_metric == CvMetric::am_risk_raw_fold ? "am_risk" : "balanced_fold_error";
    j["validation_raw_n"] = spec.validation_raw_n;
    j["out_csv"] = spec.out_csv;
    j["out_json"] = spec.out_json;
    return j;
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
    ExperimentSpec spec;
    const auto& src = j.at("source");
    const std::string type = src.at("type").get<std::string>();
    if (type == "sim") {
        SimSource sim;
        sim.base.family = family_from_string(src.at("family").get<std::string>());
        sim.base.d = src.value("d", sim.base.family == Family::example4 ? std::size_t{2} : std::size_t{4});
        if (sim.base.family == Family::example4) sim.base.d = 2;
        sim.train_n = src.value("train_n", std::size_t{1000});
        if (src.value("exp_convention", std::string("rate")) == "mean")
            sim.base.exp_convention = ExpConvention::mean;
        spec.source = sim;
    } else if (type == "csv") {
        CsvSource csv;
        csv.path = src.at("path").get<std::string>();
        csv.label_column = src.value("label_column", std::string("label"));
        csv.has_header = src.value("has_header", true);
        csv.standardize = src.value("standardize", true);
        csv.train_fraction = src.value("train_fraction", 0.7);
        spec.source = csv;
    } else {
        throw std::invalid_argument("unknown source type '" + type + "'");
    }
    for (const auto& mj : j.at("methods")) {
        MethodConfig m;
        m.id = mj.at("id").get<std::string>();
        m.classifier = classifier_from_string(mj.at("classifier").get<std::string>());
        m.cv = mj.value("cv", false);
        if (mj.contains("oversampler")) m.oversampler = oversampler_from_json(mj.at("oversampler"));
        if (mj.contains("K")) m.fixed_K = mj.at("K").get<std::size_t>();
        m.lr_lambda = mj.value("lambda", 0.0);
        spec.methods.push_back(std::move(m));
    }
    spec.replications = j.value("replications", std::size_t{50});
    spec.levels = j.at("levels").get<std::vector<double>>();
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.mc_size = j.value("mc_size", std::size_t{1000000});
    spec.calibration_seed = j.value("calibration_seed", std::uint64_t{1000003});
    spec.calibration_cache = j.value("calibration_cache", std::string());
    spec.cv_folds = j.value("cv_folds", std::size_t{5});
    spec.cv_metric = j.value("cv_metric", std::string("am_risk")) == "balanced_fold_error"
                         ? CvMetric::error_on_balanced_fold
                         : CvMetric::am_risk_raw_fold;
    spec.validation_raw_n = j.value("validation_raw_n", std::size_t{10000});
    spec.out_csv = j.value("out_csv", std::string());
    spec.out_json = j.value("out_json", std::string());
    spec.workers = j.value("workers", std::size_t{0});
    return spec;
}

} // namespace imbo
