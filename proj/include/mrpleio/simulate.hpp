#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrpleio/inference.hpp"
#include "mrpleio/regularize.hpp"
#include "mrpleio/summary_data.hpp"

namespace mrpleio {

enum class SparsityRegime {
    outcome_effects,  // some delta_j = 0, every beta_w column drawn
    variant_effects,  // every delta_j drawn, some beta_w columns zero
};

std::string to_string(SparsityRegime r);
SparsityRegime parse_regime(const std::string& s);

struct Range {
    double low = 0.0;
    double high = 0.0;
};

/// Data-generating process for one simulation block:
///   X = G'beta_x + gamma_x U + e_X
///   W_j = G'beta_wj + gamma_wj U + e_Wj
///   Y = theta X + W'delta + gamma_y U + e_Y
/// with G_ij ~ Binomial(2, maf) and U, e ~ N(0, 1).
struct ScenarioConfig {
    int p = 10;
    int k = 8;
    int n = 20000;
    double maf = 0.3;
    Range beta_x_range{0.15, 0.3};
    Range beta_w_range{-0.2, 0.4};
    Range delta_range{-0.2, 0.3};
    int n_pleiotropic = 1;
    SparsityRegime regime = SparsityRegime::outcome_effects;
    double theta = 0.2;
    double gamma_x = 1.0;
    double gamma_y = 1.0;
    std::optional<double> gamma_w;  // defaults to 1/k
    int n_datasets = 2;
    std::uint64_t rng_seed = 1;
    /// Draw beta_x, beta_w and delta once and reuse them in every replicate.
    bool freeze_parameters = false;

    double gamma_w_value() const { return gamma_w ? *gamma_w : (k > 0 ? 1.0 / k : 0.0); }
    void validate() const;
};

/// Scenarios 1-4: p = 10 with k = 8 or 12, p = 80 with k = 70 or 90.
ScenarioConfig preset_scenario(int id);

/// `key = value` lines, `#` comments. A `scenario` key loads that preset
/// before any other key is applied.
ScenarioConfig parse_scenario_config(std::istream& in, const std::string& source = "<config>");
ScenarioConfig load_scenario_config(const std::string& path);
void write_scenario_config(std::ostream& out, const ScenarioConfig& cfg);

struct TrueParameters {
    Vector beta_x;
    Matrix beta_w;
    Vector delta;
    std::vector<std::string> pleiotropic;  // covariates on a genetic path to the outcome
};

struct Replicate {
    SummaryDataset analysis;                 // beta_x, beta_w from sample 1; beta_y, se_y from sample 2
    std::optional<SummaryDataset> selection; // all associations from an independent sample 3
    TrueParameters truth;
    double r2_x = 0.0;  // variance in X explained by the variants, sample 1
    int redraws = 0;    // samples regenerated because a variant was monomorphic
};

TrueParameters draw_parameters(const ScenarioConfig& cfg, std::uint64_t rep_index);

/// Deterministic in (cfg.rng_seed, rep_index).
Replicate generate_replicate(const ScenarioConfig& cfg, std::uint64_t rep_index);

enum class StudyMethod {
    ivw,
    reg,
    post_reg,
    mv_all,
    oracle,
    two_sample_a,
    two_sample_b,
    three_sample_a,
    three_sample_b,
    double_est,
};

std::string to_string(StudyMethod m);
StudyMethod parse_study_method(const std::string& s);
std::vector<StudyMethod> parse_study_methods(const std::string& comma_list);

/// IVW, Reg, Post-reg, Oracle, plus MV-All when p >= k + 2.
std::vector<StudyMethod> default_methods(const ScenarioConfig& cfg);

struct StudyOptions {
    /// Fold count, path and solver settings. The target is set per method and
    /// the seed is derived per replicate.
    CvConfig cv;
    DoubleEstimationOptions double_estimation;
    int threads = 1;
};

struct MethodOutcome {
    bool ok = false;
    double theta_hat = 0.0;
    std::optional<Uncertainty> uncertainty;
    std::size_t n_selected = 0;
    std::string error;
};

struct ReplicateResult {
    std::vector<MethodOutcome> outcomes;  // parallel to the method list
    double r2_x = 0.0;
    int redraws = 0;
    double max_kkt_violation = 0.0;
    bool zero_at_lambda_max = true;  // every fitted path has delta = 0 at lambda_max
};

ReplicateResult evaluate_replicate(const Replicate& rep, const std::vector<StudyMethod>& methods,
                                   const StudyOptions& options, std::uint64_t cv_seed);

struct MethodSummary {
    StudyMethod method;
    int reps_ok = 0;
    int reps_failed = 0;
    double mean = 0.0;
    double sd = 0.0;
    std::optional<double> mean_se;
    std::optional<double> coverage;
    std::optional<double> power;
    double mse = 0.0;
    double mean_selected = 0.0;
    std::string first_error;
};

struct SimulationReport {
    ScenarioConfig scenario;
    int n_reps = 0;
    std::vector<MethodSummary> rows;
    double mean_r2_x = 0.0;
    double max_kkt_violation = 0.0;
    bool zero_at_lambda_max = true;
    int redraws = 0;
};

/// Replicates run on up to `options.threads` workers; the report depends only
/// on (cfg, methods, n_reps, options.cv), not on the thread count.
SimulationReport run_study(const ScenarioConfig& cfg, const std::vector<StudyMethod>& methods, int n_reps,
                           const StudyOptions& options = {});

/// method,reps_ok,reps_failed,mean,sd,mean_se,coverage,power,mse,mean_selected
void write_report_csv(std::ostream& out, const SimulationReport& report);

}  // namespace mrpleio
