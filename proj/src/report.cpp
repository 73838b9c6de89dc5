#include "mrpleio/report.hpp"

#include <cstdio>
#include <ostream>

namespace mrpleio {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    // "-0.000000" and "0.000000" must print the same.
    if (std::string(buf) == "-0.000000") return "0.000000";
    return buf;
}

std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : std::string(); }

}  // namespace

nlohmann::json to_json(const CausalEstimate& est) {
    nlohmann::json j;
    j["method"] = est.method_tag;
    j["theta_hat"] = est.theta_hat;
    j["covariates_used"] = est.covariates_used;
    nlohmann::json delta = nlohmann::json::object();
    for (std::size_t i = 0; i < est.covariates_used.size() && static_cast<Eigen::Index>(i) < est.delta_hat.size(); ++i)
        delta[est.covariates_used[i]] = est.delta_hat[static_cast<Eigen::Index>(i)];
    j["delta_hat"] = delta;
    if (est.uncertainty) {
        j["se_theta"] = est.uncertainty->se;
        j["ci_low"] = est.uncertainty->ci_low;
        j["ci_high"] = est.uncertainty->ci_high;
        j["dispersion"] = est.uncertainty->dispersion;
    } else {
        j["se_theta"] = nullptr;
        j["post_selection_caveat"] = "standard errors from the penalized fit ignore selection; use an inference method";
    }
    return j;
}

nlohmann::json to_json(const RegularizationFit& fit) {
    nlohmann::json j;
    j["covariate_names"] = fit.covariate_names;
    j["lambdas"] = to_std(fit.lambdas);
    j["theta_path"] = to_std(fit.theta_path);
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < fit.delta_path.rows(); ++i) rows.push_back(to_std(fit.delta_path.row(i).transpose()));
    j["delta_path"] = rows;
    j["active_sets"] = fit.active_sets;
    j["cv_target"] = to_string(fit.cv_target);
    if (fit.cv_curve) j["cv_curve"] = to_std(*fit.cv_curve);
    if (fit.chosen_lambda) {
        j["chosen_lambda"] = *fit.chosen_lambda;
        j["repeat_minimizers"] = fit.repeat_minimizers;
        j["chosen_theta"] = fit.chosen_theta;
        j["chosen_delta"] = to_std(fit.chosen_delta);
        j["chosen_set"] = fit.chosen_set;
        j["capped"] = fit.capped;
        j["excluded_folds"] = fit.excluded_folds;
    }
    j["max_kkt_violation"] = fit.max_kkt_violation;
    return j;
}

nlohmann::json to_json(const BalanceDiagnostic& diag) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < diag.trait_names.size(); ++i)
        j[diag.trait_names[i]] = diag.correlations[static_cast<Eigen::Index>(i)];
    return j;
}

nlohmann::json to_json(const ScenarioConfig& cfg) {
    return {{"p", cfg.p},
            {"k", cfg.k},
            {"n", cfg.n},
            {"maf", cfg.maf},
            {"beta_x_range", {cfg.beta_x_range.low, cfg.beta_x_range.high}},
            {"beta_w_range", {cfg.beta_w_range.low, cfg.beta_w_range.high}},
            {"delta_range", {cfg.delta_range.low, cfg.delta_range.high}},
            {"n_pleiotropic", cfg.n_pleiotropic},
            {"regime", to_string(cfg.regime)},
            {"theta", cfg.theta},
            {"gamma_x", cfg.gamma_x},
            {"gamma_y", cfg.gamma_y},
            {"gamma_w", cfg.gamma_w_value()},
            {"n_datasets", cfg.n_datasets},
            {"seed", cfg.rng_seed},
            {"freeze_parameters", cfg.freeze_parameters}};
}

nlohmann::json to_json(const SimulationReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json row{{"method", to_string(r.method)}, {"reps_ok", r.reps_ok}, {"reps_failed", r.reps_failed},
                           {"mean", r.mean},         {"sd", r.sd},           {"mse", r.mse},
                           {"mean_selected", r.mean_selected}};
        row["mean_se"] = r.mean_se ? nlohmann::json(*r.mean_se) : nlohmann::json();
        row["coverage"] = r.coverage ? nlohmann::json(*r.coverage) : nlohmann::json();
        row["power"] = r.power ? nlohmann::json(*r.power) : nlohmann::json();
        if (!r.first_error.empty()) row["first_error"] = r.first_error;
        rows.push_back(row);
    }
    return {{"scenario", to_json(report.scenario)},
            {"n_reps", report.n_reps},
            {"methods", rows},
            {"mean_r2_x", report.mean_r2_x},
            {"max_kkt_violation", report.max_kkt_violation},
            {"zero_at_lambda_max", report.zero_at_lambda_max},
            {"redraws", report.redraws}};
}

void write_report_csv(std::ostream& out, const SimulationReport& report) {
    out << "method,reps_ok,reps_failed,mean,sd,mean_se,coverage,power,mse,mean_selected\n";
    for (const auto& r : report.rows) {
        out << to_string(r.method) << ',' << r.reps_ok << ',' << r.reps_failed << ',' << fixed(r.mean) << ','
            << fixed(r.sd) << ',' << fixed(r.mean_se) << ',' << fixed(r.coverage) << ',' << fixed(r.power) << ','
            << fixed(r.mse) << ',' << fixed(r.mean_selected) << '\n';
    }
}

}  // namespace mrpleio
