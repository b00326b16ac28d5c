// Command-line front end: dataset simulation, oversampling, model training
// and evaluation, and the experiment/sweep/audit drivers.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "imbo/imbo.hpp"
#include "imbo/model_io.hpp"

namespace {

imbo::LabelColumn parse_label_column(const std::string& s) {
    // bare integers are treated as 0-based column indices
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos)
        return static_cast<std::size_t>(std::stoull(s));
    return s;
}

imbo::ExperimentSpec load_spec(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config '" + config_path + "'");
    nlohmann::json j;
    in >> j;
    return imbo::spec_from_json(j);
}

void report_summary(const imbo::ExperimentResult& result) {
    for (const auto& e : result.summary) {
        std::printf("method=%-16s level=%-6g", e.method.c_str(), e.level);
        if (e.axis_value) std::printf(" axis=%-6g", *e.axis_value);
        std::printf(" reps=%-4zu mean_am_risk=%.4f (se %.4f)", e.replications, e.mean_am_risk, e.std_error);
        if (e.errors > 0) std::printf(" errors=%zu", e.errors);
        std::printf("\n");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic minority oversampling (SMOTE / KDEO), plug-in classifiers and AM-risk experiments"};
    app.require_subcommand(1);

    // --- simulate ---------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate", "Draw a dataset from one of the synthetic generators");
    std::string sim_family = "ex2", sim_out = "data.csv", sim_cache;
    std::size_t sim_d = 4, sim_n = 1000, sim_mc = 1000000;
    double sim_p1 = 0.10;
    std::uint64_t sim_seed = 1, sim_calib_seed = 1000003;
    std::string sim_exp_convention = "rate";
    simulate->add_option("--family", sim_family, "ex1|ex2|ex3|ex4|exS1");
    simulate->add_option("--d", sim_d, "feature dimension (ex4 is fixed at 2)");
    simulate->add_option("--target-p1", sim_p1, "target minority probability")->check(CLI::Range(1e-6, 1.0 - 1e-6));
    simulate->add_option("--n", sim_n, "sample count");
    simulate->add_option("--seed", sim_seed, "root seed");
    simulate->add_option("--out", sim_out, "output CSV path");
    simulate->add_option("--calibration-cache", sim_cache, "JSON sidecar for calibrated parameters");
    simulate->add_option("--calibration-seed", sim_calib_seed, "seed of the calibration Monte-Carlo stream");
    simulate->add_option("--mc-size", sim_mc, "Monte-Carlo size for calibration");
    simulate->add_option("--exp-convention", sim_exp_convention, "rate|mean reading of Exp(a)");

    // --- oversample -------------------------------------------------------
    auto* oversample = app.add_subcommand("oversample", "Balance a CSV dataset with synthetic minority samples");
    std::string ovs_method = "smote", ovs_mode = "pure", ovs_in, ovs_out = "oversampled.csv", ovs_label = "label";
    std::size_t ovs_k = 5;
    double ovs_scale = 1.0;
    std::uint64_t ovs_seed = 1;
    bool ovs_no_header = false;
    oversample->add_option("--method", ovs_method, "smote|kdeo")->check(CLI::IsMember({"smote", "kdeo"}));
    oversample->add_option("--k", ovs_k, "SMOTE neighbor count");
    oversample->add_option("--scale", ovs_scale, "KDEO multiplier on the Scott bandwidth");
    oversample->add_option("--mode", ovs_mode, "pure|topup")->check(CLI::IsMember({"pure", "topup"}));
    oversample->add_option("--in", ovs_in, "input CSV")->required();
    oversample->add_option("--out", ovs_out, "output CSV (gains a `synthetic` column)");
    oversample->add_option("--label-column", ovs_label, "label column name or index");
    oversample->add_flag("--no-header", ovs_no_header, "input has no header row");
    oversample->add_option("--seed", ovs_seed, "root seed");

    // --- train ------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Fit a classifier on a CSV dataset and save it as JSON");
    std::string train_model = "knn", train_in, train_out = "model.json", train_label = "label";
    std::optional<std::size_t> train_K;
    double train_threshold = 0.5, train_lambda = 0.0, train_tol = 1e-9;
    std::size_t train_iters = 500;
    bool train_no_header = false, train_per_class_counts = false;
    train->add_option("--model", train_model, "knn|ks|lr|bbc")->check(CLI::IsMember({"knn", "ks", "lr", "bbc"}));
    train->add_option("--in", train_in, "training CSV")->required();
    train->add_option("--out", train_out, "model JSON path");
    train->add_option("--label-column", train_label, "label column name or index");
    train->add_flag("--no-header", train_no_header, "input has no header row");
    train->add_option("--K", [&train_K](const std::vector<std::string>& v) {
        train_K = std::stoull(v.back());
        return true;
    }, "KNN/BBC neighbor count (default sqrt(n) rounded to odd)");
    train->add_option("--threshold", train_threshold, "KNN decision threshold");
    train->add_option("--lambda", train_lambda, "L1 penalty for lr");
    train->add_option("--max-iters", train_iters, "lr iteration cap");
    train->add_option("--tol", train_tol, "lr relative objective tolerance");
    train->add_flag("--per-class-counts", train_per_class_counts,
                    "KS: use per-class sample sizes in Scott's rule instead of the majority count");

    // --- evaluate ----------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "Score a saved model on a CSV dataset");
    std::string eval_model, eval_in, eval_label = "label";
    double eval_beta = 0.5;
    bool eval_no_header = false;
    evaluate->add_option("--model", eval_model, "model JSON")->required();
    evaluate->add_option("--in", eval_in, "evaluation CSV")->required();
    evaluate->add_option("--label-column", eval_label, "label column name or index");
    evaluate->add_flag("--no-header", eval_no_header, "input has no header row");
    evaluate->add_option("--beta", eval_beta, "class-1 weight of the beta-risk");

    // --- experiment ---------------------------------------------------------
    auto* experiment = app.add_subcommand("experiment", "Run an experiment described by a JSON config");
    std::string exp_config;
    std::optional<std::uint64_t> exp_seed;
    std::optional<std::size_t> exp_reps, exp_workers;
    std::string exp_out_csv, exp_out_json;
    experiment->add_option("--config", exp_config, "experiment JSON config")->required();
    experiment->add_option("--seed", [&exp_seed](const std::vector<std::string>& v) {
        exp_seed = std::stoull(v.back());
        return true;
    }, "override the config seed");
    experiment->add_option("--replications", [&exp_reps](const std::vector<std::string>& v) {
        exp_reps = std::stoull(v.back());
        return true;
    }, "override the replication count");
    experiment->add_option("--workers", [&exp_workers](const std::vector<std::string>& v) {
        exp_workers = std::stoull(v.back());
        return true;
    }, "worker threads (also IMBO_WORKERS env var)");
    experiment->add_option("--out-csv", exp_out_csv, "override the row CSV path");
    experiment->add_option("--out-json", exp_out_json, "override the summary JSON path");

    // --- sweep --------------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment over a hyperparameter axis");
    std::string sweep_config, sweep_axis = "smote_k";
    std::vector<double> sweep_values;
    std::optional<std::uint64_t> sweep_seed;
    std::optional<std::size_t> sweep_reps;
    std::string sweep_out_csv, sweep_out_json;
    sweep_cmd->add_option("--config", sweep_config, "experiment JSON config")->required();
    sweep_cmd->add_option("--axis", sweep_axis, "smote_k|kdeo_scale")
        ->check(CLI::IsMember({"smote_k", "kdeo_scale"}));
    sweep_cmd->add_option("--values", sweep_values, "axis values")->required()->delimiter(',');
    sweep_cmd->add_option("--seed", [&sweep_seed](const std::vector<std::string>& v) {
        sweep_seed = std::stoull(v.back());
        return true;
    }, "override the config seed");
    sweep_cmd->add_option("--replications", [&sweep_reps](const std::vector<std::string>& v) {
        sweep_reps = std::stoull(v.back());
        return true;
    }, "override the replication count");
    sweep_cmd->add_option("--out-csv", sweep_out_csv, "override the row CSV path");
    sweep_cmd->add_option("--out-json", sweep_out_json, "override the summary JSON path");

    // --- audit --------------------------------------------------------------
    auto* audit = app.add_subcommand("audit", "Concentration audit of an oversampler against fresh draws");
    std::string audit_method = "smote", audit_out = "audit.csv";
    std::size_t audit_n1 = 200, audit_m = 200, audit_reps = 50, audit_ref = 100000, audit_funcs = 20;
    double audit_scale = 1.0, audit_p1 = 0.5;
    std::size_t audit_k = 5;
    std::uint64_t audit_seed = 1;
    audit->add_option("--method", audit_method, "smote|kdeo")->check(CLI::IsMember({"smote", "kdeo"}));
    audit->add_option("--k", audit_k, "SMOTE neighbor count");
    audit->add_option("--scale", audit_scale, "KDEO multiplier on the Scott bandwidth");
    audit->add_option("--n1", audit_n1, "minority sample size per replication");
    audit->add_option("--m", audit_m, "synthetic sample size");
    audit->add_option("--reps", audit_reps, "replications");
    audit->add_option("--reference-size", audit_ref, "fresh reference draws per replication");
    audit->add_option("--functions", audit_funcs, "size of the cosine test family");
    audit->add_option("--target-p1", audit_p1, "minority probability of the ex4 weights (the audited marginal)");
    audit->add_option("--seed", audit_seed, "root seed");
    audit->add_option("--out", audit_out, "output CSV (one row per replication)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            imbo::GeneratorSpec spec;
            spec.family = imbo::family_from_string(sim_family);
            spec.d = spec.family == imbo::Family::example4 ? 2 : sim_d;
            spec.n = sim_n;
            if (sim_exp_convention == "mean") spec.exp_convention = imbo::ExpConvention::mean;
            imbo::detail::CalibrationCache cache(sim_cache);
            const auto calib = cache.get_or_compute(spec.family, spec.d, sim_p1, sim_mc, sim_calib_seed,
                                                    spec.exp_convention);
            cache.flush();
            imbo::apply(spec, calib);
            imbo::RngStream rng(sim_seed);
            const auto ds = imbo::generate(spec, rng);
            imbo::save_csv(ds, sim_out);
            const auto view = imbo::partition_classes(ds);
            std::printf("wrote %s: n=%zu d=%zu n1=%zu (p_hat=%.4f)\n", sim_out.c_str(), ds.n(), ds.dim(), view.n1,
                        view.p_hat);
        } else if (oversample->parsed()) {
            const auto ds = imbo::load_csv(ovs_in, parse_label_column(ovs_label), !ovs_no_header, {"synthetic"});
            imbo::OversamplerConfig cfg;
            cfg.method = ovs_method == "smote" ? imbo::OversampleMethod::smote : imbo::OversampleMethod::kdeo;
            cfg.smote_k = ovs_k;
            cfg.kdeo_scale = ovs_scale;
            cfg.mode = ovs_mode == "pure" ? imbo::AugmentMode::pure_synthetic : imbo::AugmentMode::top_up;
            imbo::RngStream rng(ovs_seed);
            const auto aug = imbo::oversample_to_balance(ds, cfg, rng);
            if (aug.k_clamped)
                std::fprintf(stderr, "warning: k clamped to %zu (minority size %zu)\n", aug.effective_k,
                             imbo::partition_classes(ds).n1);
            imbo::save_csv(aug.data, ovs_out, &aug.synthetic_flag);
            std::printf("wrote %s: n=%zu (from %zu)\n", ovs_out.c_str(), aug.data.n(), ds.n());
        } else if (train->parsed()) {
            const auto ds = imbo::load_csv(train_in, parse_label_column(train_label), !train_no_header, {"synthetic"});
            nlohmann::json j;
            if (train_model == "knn") {
                const std::size_t K = train_K ? *train_K : imbo::sqrt_n_odd(ds.n());
                j = imbo::to_json(imbo::fit_knn(ds, K, train_threshold));
            } else if (train_model == "bbc") {
                j = imbo::to_json(imbo::fit_bbc(ds, train_K));
            } else if (train_model == "ks") {
                const auto mode = train_per_class_counts ? imbo::KsCountMode::per_class
                                                         : imbo::KsCountMode::majority_count;
                const auto [bw0, bw1] = imbo::ks_scott_bandwidths(ds, mode);
                j = imbo::to_json(imbo::fit_ks_plugin(ds, bw0, bw1));
            } else {
                const auto model = imbo::fit_logistic(ds, train_lambda, train_iters, train_tol);
                if (!model.diagnostics.converged)
                    std::fprintf(stderr, "warning: optimizer stopped at iteration cap %zu\n", train_iters);
                j = imbo::to_json(model);
            }
            imbo::save_model_json(j, train_out);
            std::printf("wrote %s\n", train_out.c_str());
        } else if (evaluate->parsed()) {
            const auto ds = imbo::load_csv(eval_in, parse_label_column(eval_label), !eval_no_header, {"synthetic"});
            const auto j = imbo::load_model_json(eval_model);
            const std::string kind = j.at("model").get<std::string>();
            imbo::PredictionSet pred;
            if (kind == "knn") pred = imbo::knn_from_json(j).predict(ds.features);
            else if (kind == "ks") pred = imbo::ks_from_json(j).predict(ds.features);
            else if (kind == "linear") pred = imbo::predict_linear(imbo::linear_from_json(j), ds.features);
            else throw std::runtime_error("unknown model kind '" + kind + "'");
            const auto risk = imbo::am_risk(pred, ds.labels, eval_beta);
            nlohmann::json out{{"beta", risk.beta},
                               {"err_class1", risk.err_class1},
                               {"err_class0", risk.err_class0},
                               {"risk", risk.risk}};
            std::printf("%s\n", out.dump(2).c_str());
        } else if (experiment->parsed()) {
            imbo::ExperimentSpec spec = load_spec(exp_config);
            if (exp_seed) spec.seed = *exp_seed;
            if (exp_reps) spec.replications = *exp_reps;
            if (exp_workers) spec.workers = *exp_workers;
            if (!exp_out_csv.empty()) spec.out_csv = exp_out_csv;
            if (!exp_out_json.empty()) spec.out_json = exp_out_json;
            report_summary(imbo::run_experiment(spec));
        } else if (sweep_cmd->parsed()) {
            imbo::ExperimentSpec spec = load_spec(sweep_config);
            if (sweep_seed) spec.seed = *sweep_seed;
            if (sweep_reps) spec.replications = *sweep_reps;
            if (!sweep_out_csv.empty()) spec.out_csv = sweep_out_csv;
            if (!sweep_out_json.empty()) spec.out_json = sweep_out_json;
            imbo::SweepAxis axis;
            axis.kind = imbo::sweep_kind_from_string(sweep_axis);
            axis.values = sweep_values;
            report_summary(imbo::sweep(spec, axis));
        } else if (audit->parsed()) {
            const std::array<double, 4> weights{(1.0 - audit_p1) / 2.0, (1.0 - audit_p1) / 2.0, audit_p1 / 2.0,
                                                audit_p1 / 2.0};
            imbo::OversamplerConfig cfg;
            cfg.method = audit_method == "smote" ? imbo::OversampleMethod::smote : imbo::OversampleMethod::kdeo;
            cfg.smote_k = audit_k;
            cfg.kdeo_scale = audit_scale;
            const auto family = imbo::cosine_test_family(2, audit_funcs);
            imbo::RngStream rng(audit_seed);
            const auto reports = imbo::concentration_audit(imbo::example4_minority_sampler(weights), cfg, audit_n1,
                                                           audit_m, family, audit_ref, audit_reps, rng);
            std::ofstream out(audit_out);
            if (!out) throw std::runtime_error("cannot open '" + audit_out + "'");
            out << "replication,method,n1,m,k_or_scale,sup_discrepancy";
            for (std::size_t g = 0; g < family.size(); ++g) out << ",g" << g;
            out << "\n";
            char buf[40];
            for (std::size_t r = 0; r < reports.size(); ++r) {
                const auto& rep = reports[r];
                out << r << "," << rep.method << "," << rep.n1 << "," << rep.m << "," << rep.k_or_scale;
                std::snprintf(buf, sizeof(buf), ",%.12g", rep.sup_discrepancy);
                out << buf;
                for (double v : rep.per_function) {
                    std::snprintf(buf, sizeof(buf), ",%.12g", v);
                    out << buf;
                }
                out << "\n";
            }
            std::printf("wrote %s (%zu replications)\n", audit_out.c_str(), reports.size());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
