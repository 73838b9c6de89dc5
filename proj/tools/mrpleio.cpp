// mrpleio command-line front end.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mrpleio/error.hpp"
#include "mrpleio/estimators.hpp"
#include "mrpleio/inference.hpp"
#include "mrpleio/regularize.hpp"
#include "mrpleio/report.hpp"
#include "mrpleio/simulate.hpp"
#include "mrpleio/summary_data.hpp"

namespace {

using nlohmann::json;
using namespace mrpleio;

constexpr const char* kVersion = "0.1.0";

struct CvFlags {
    int folds = 10;
    int repeats = 1;
    std::uint64_t seed = 0;
    int n_lambda = 100;
    double lambda_min_ratio = 1e-4;
    std::string target = "mse";
    bool no_standardize = false;

    void add_to(CLI::App& cmd, bool standalone) {
        if (standalone)
            cmd.add_option("--cv-target", target, "Cross-validation target")
                ->check(CLI::IsMember({"mse", "projected"}));
        cmd.add_option("--folds", folds, "Number of cross-validation folds")->check(CLI::Range(2, 100000));
        cmd.add_option("--repeats", repeats, "Cross-validation repeats; chosen lambda is their mean")
            ->check(CLI::PositiveNumber);
        if (standalone) cmd.add_option("--seed", seed, "Seed for fold assignment");
        cmd.add_option("--n-lambda", n_lambda, "Length of the lambda path")->check(CLI::Range(2, 100000));
        cmd.add_option("--lambda-min-ratio", lambda_min_ratio, "Smallest lambda as a fraction of lambda_max")
            ->check(CLI::Range(1e-12, 0.999999));
        cmd.add_flag("--no-standardize", no_standardize, "Penalize raw coefficients instead of scaled ones");
    }

    CvConfig config() const {
        CvConfig cfg;
        cfg.n_folds = folds;
        cfg.n_repeats = repeats;
        cfg.rng_seed = seed;
        cfg.n_lambda = n_lambda;
        cfg.lambda_min_ratio = lambda_min_ratio;
        cfg.target = parse_cv_target(target);
        cfg.lasso.standardize = !no_standardize;
        return cfg;
    }

    json echo() const {
        return {{"folds", folds},       {"repeats", repeats},
                {"seed", seed},         {"n_lambda", n_lambda},
                {"lambda_min_ratio", lambda_min_ratio},
                {"cv_target", target},  {"standardize", !no_standardize}};
    }
};

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::vector<std::string> inputs;
    json config = json::object();
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::string manifest_path;
};

json input_record(const std::string& path) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    return {{"path", path}, {"bytes", ec ? json() : json(size)}};
}

void write_manifest(const Manifest& m, double wall_seconds) {
    json inputs = json::array();
    for (const auto& p : m.inputs) inputs.push_back(input_record(p));
    json j{{"command", m.command},
           {"argv", m.argv},
           {"inputs", inputs},
           {"config", m.config},
           {"seed", m.seed ? json(*m.seed) : json()},
           {"software_version", kVersion},
           {"wall_time_seconds", wall_seconds}};
    std::string path = m.manifest_path;
    if (path.empty() && !m.out_path.empty()) path = m.out_path + ".manifest.json";
    if (path.empty()) {
        std::cerr << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write manifest '" + path + "'");
    out << j.dump(2) << '\n';
}

// Output sink: a file when a path is given, stdout otherwise.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) throw InputError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : std::string()) + v[i];
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

void print_estimate(std::ostream& out, const CausalEstimate& est, const std::vector<std::string>& selected) {
    out << "method,theta_hat,se,ci_low,ci_high,n_selected,selected\n";
    out << est.method_tag << ',' << fmt(est.theta_hat) << ',';
    if (est.uncertainty)
        out << fmt(est.uncertainty->se) << ',' << fmt(est.uncertainty->ci_low) << ',' << fmt(est.uncertainty->ci_high);
    else
        out << ",,";
    out << ',' << selected.size() << ',' << join(selected, ';') << '\n';
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    std::string data;
    std::string select_data;
    std::string method = "post-reg";
    std::string out;
    std::string json_path;
    CvFlags cv;
};

int run_estimate(const EstimateArgs& a, Manifest& m) {
    m.inputs.push_back(a.data);
    if (!a.select_data.empty()) m.inputs.push_back(a.select_data);
    m.out_path = a.out;
    m.seed = a.cv.seed;
    m.config = {{"method", a.method}, {"cv", a.cv.echo()}};

    const auto d = load_summary_csv(a.data);
    std::optional<SummaryDataset> sel;
    if (!a.select_data.empty()) {
        if (a.method != "post-reg" && a.method != "double-est")
            throw InputError("--select-data applies only to --method post-reg or double-est");
        sel = load_summary_csv(a.select_data);
        if (sel->variant_ids() != d.variant_ids() || sel->covariate_names() != d.covariate_names())
            throw InputError("--select-data must list the same variants and covariates, in the same order, as --data");
    }
    const auto cfg = a.cv.config();

    CausalEstimate est;
    std::vector<std::string> selected;
    json report;
    if (a.method == "ivw") {
        est = ivw(d);
    } else if (a.method == "mv-all") {
        if (d.n_variants() < d.n_covariates() + 2)
            throw InputError("mv-all needs at least k + 2 variants for k covariates (have " +
                             std::to_string(d.n_variants()) + " variants, " + std::to_string(d.n_covariates()) +
                             " covariates); use --method reg or post-reg instead");
        est = mv_ivw(d);
        selected = d.covariate_names();
    } else if (a.method == "balance") {
        est = balancing_estimate(d);
        selected = d.covariate_names();
    } else if (a.method == "reg" || a.method == "post-reg") {
        if (d.n_covariates() == 0) throw InputError("--method " + a.method + " needs at least one covariate column");
        const auto& fit_data = sel ? *sel : d;
        const auto fit = cross_validate(fit_data, cfg);
        report["regularization"] = to_json(fit);
        if (a.method == "reg") {
            est = regularized_estimate(d, fit);
            selected = fit.chosen_set;
        } else {
            auto res = sel ? three_sample_ci(fit, d) : two_sample_ci(d, fit);
            est = std::move(res.estimate);
            selected = std::move(res.selection_set);
        }
    } else if (a.method == "double-est") {
        if (d.n_covariates() == 0) throw InputError("--method double-est needs at least one covariate column");
        auto res = double_estimation_ci(sel ? *sel : d, cfg);
        if (sel) res = estimate_on_set(d, res.selection_set, InferenceMethod::double_estimation);
        est = std::move(res.estimate);
        selected = std::move(res.selection_set);
    }
    Sink sink(a.out);
    print_estimate(sink.stream(), est, selected);
    if (!a.json_path.empty()) {
        report["estimate"] = to_json(est);
        report["selected"] = selected;
        report["data"] = a.data;
        write_json_file(a.json_path, report);
    }
    return 0;
}

// -------------------------------------------------------------------- path

struct PathArgs {
    std::string data;
    std::string out;
    std::string json_path;
    bool no_cv = false;
    CvFlags cv;
};

int run_path(const PathArgs& a, Manifest& m) {
    m.inputs.push_back(a.data);
    m.out_path = a.out;
    m.seed = a.cv.seed;
    m.config = {{"cv", a.cv.echo()}, {"no_cv", a.no_cv}};
    const auto d = load_summary_csv(a.data);
    if (d.n_covariates() == 0) throw InputError("path needs at least one covariate column");
    const auto cfg = a.cv.config();
    const auto fit = a.no_cv ? regularization_path(d, cfg.n_lambda, cfg.lambda_min_ratio, cfg.lasso)
                             : cross_validate(d, cfg);
    Sink sink(a.out);
    write_path_csv(sink.stream(), fit);
    if (!a.json_path.empty()) write_json_file(a.json_path, to_json(fit));
    return 0;
}

// ----------------------------------------------------------------- balance

struct BalanceArgs {
    std::string data;
    std::vector<std::string> sets;
    bool raw_scale = false;
    std::string out;
};

int run_balance(const BalanceArgs& a, Manifest& m) {
    m.inputs.push_back(a.data);
    m.out_path = a.out;
    m.config = {{"sets", a.sets}, {"raw_scale", a.raw_scale}};
    const auto d = load_summary_csv(a.data);

    std::vector<std::pair<std::string, std::vector<std::string>>> sets;
    for (const auto& arg : a.sets)
        for (const auto& label : split(arg, ';')) {
            if (label.empty()) throw InputError("empty covariate set in --sets '" + arg + "'");
            std::vector<std::string> names;
            if (label == "all") {
                names = d.covariate_names();
            } else if (label != "none") {
                for (const auto& n : split(label, ',')) {
                    if (n.empty()) throw InputError("empty covariate name in set '" + label + "'");
                    const auto& cn = d.covariate_names();
                    if (std::find(cn.begin(), cn.end(), n) == cn.end())
                        throw InputError("unknown covariate '" + n + "' in set '" + label +
                                         "'; available: " + join(d.covariate_names(), ','));
                    names.push_back(n);
                }
            }
            sets.emplace_back(label, std::move(names));
        }

    Sink sink(a.out);
    auto& out = sink.stream();
    out << "set_label,trait,correlation\n";
    for (const auto& [label, names] : sets) {
        const auto diag =
            balance_diagnostic(d, names, a.raw_scale ? BalanceScale::raw : BalanceScale::weighted);
        const std::string quoted = label.find(',') != std::string::npos ? "\"" + label + "\"" : label;
        for (std::size_t i = 0; i < diag.trait_names.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.10g", diag.correlations[static_cast<Eigen::Index>(i)]);
            out << quoted << ',' << diag.trait_names[i] << ',' << buf << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::optional<int> scenario;
    std::string config;
    std::optional<double> theta;
    std::optional<int> n_pleio;
    std::optional<std::string> regime;
    std::optional<std::uint64_t> seed;
    std::optional<int> n;
    bool freeze = false;
    int reps = 1000;
    std::string methods;
    int threads = 1;
    std::string out;
    std::string json_path;
    CvFlags cv;
};

int run_simulate(const SimulateArgs& a, Manifest& m) {
    if (a.reps < 1) throw InputError("--reps must be at least 1");
    if (a.threads < 1) throw InputError("--threads must be at least 1");
    ScenarioConfig cfg;
    if (!a.config.empty()) {
        m.inputs.push_back(a.config);
        cfg = load_scenario_config(a.config);
    } else {
        cfg = preset_scenario(*a.scenario);
    }
    if (a.theta) cfg.theta = *a.theta;
    if (a.n_pleio) cfg.n_pleiotropic = *a.n_pleio;
    if (a.regime) cfg.regime = parse_regime(*a.regime);
    if (a.seed) cfg.rng_seed = *a.seed;
    if (a.n) cfg.n = *a.n;
    if (a.freeze) cfg.freeze_parameters = true;

    const auto methods = a.methods.empty() ? default_methods(cfg) : parse_study_methods(a.methods);
    for (auto mth : methods)
        if (mth == StudyMethod::three_sample_a || mth == StudyMethod::three_sample_b) cfg.n_datasets = 3;
    cfg.validate();

    StudyOptions opts;
    opts.cv = a.cv.config();
    opts.threads = a.threads;

    m.out_path = a.out;
    m.seed = cfg.rng_seed;
    json names = json::array();
    for (auto mth : methods) names.push_back(to_string(mth));
    m.config = {{"scenario", to_json(cfg)}, {"methods", names}, {"reps", a.reps}, {"cv", a.cv.echo()},
                {"threads", a.threads}};

    const auto report = run_study(cfg, methods, a.reps, opts);
    Sink sink(a.out);
    write_report_csv(sink.stream(), report);
    if (!a.json_path.empty()) write_json_file(a.json_path, to_json(report));
    return 0;
}

// ------------------------------------------------------------------ driver

int run(const std::vector<std::string>& args, bool allow_replay);

int run_replay(const std::string& manifest_path, const std::string& out_override) {
    std::ifstream in(manifest_path);
    if (!in) throw InputError("cannot open manifest '" + manifest_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("manifest '" + manifest_path + "' is not valid JSON: " + e.what());
    }
    if (!j.contains("argv") || !j["argv"].is_array()) throw InputError("manifest has no argv array");
    auto argv = j["argv"].get<std::vector<std::string>>();
    if (!out_override.empty()) {
        bool replaced = false;
        for (std::size_t i = 0; i + 1 < argv.size(); ++i)
            if (argv[i] == "--out") {
                argv[i + 1] = out_override;
                replaced = true;
            }
        if (!replaced) argv.insert(argv.end(), {"--out", out_override});
    }
    // The replayed command writes its manifest next to its own output, never
    // over the manifest being replayed.
    std::vector<std::string> cleaned;
    for (std::size_t i = 0; i < argv.size(); ++i) {
        if (argv[i] == "--manifest" && i + 1 < argv.size()) {
            ++i;
            continue;
        }
        cleaned.push_back(argv[i]);
    }
    return run(cleaned, false);
}

int run(const std::vector<std::string>& args, bool allow_replay) {
    CLI::App app{"Causal effect estimation from summarized genetic-association data with measured pleiotropy",
                 "mrpleio"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string manifest_path;
    auto add_manifest = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", manifest_path,
                        "Run manifest path (default: <out>.manifest.json, or stderr without --out)");
    };

    EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "Estimate the causal effect from a summary-data CSV");
    c_est->add_option("--data", est.data, "Summary-data CSV")->required()->check(CLI::ExistingFile);
    c_est->add_option("--method", est.method, "Estimator")
        ->check(CLI::IsMember({"ivw", "mv-all", "reg", "post-reg", "balance", "double-est"}));
    c_est->add_option("--select-data", est.select_data, "Independent CSV used only for covariate selection")
        ->check(CLI::ExistingFile);
    c_est->add_option("--out", est.out, "Write the estimate CSV here instead of stdout");
    c_est->add_option("--json", est.json_path, "Write the full result as JSON");
    est.cv.add_to(*c_est, true);
    add_manifest(c_est);

    PathArgs path;
    auto* c_path = app.add_subcommand("path", "Regularization path with per-lambda coefficients");
    c_path->add_option("--data", path.data, "Summary-data CSV")->required()->check(CLI::ExistingFile);
    c_path->add_option("--out", path.out, "Write the path CSV here instead of stdout");
    c_path->add_option("--json", path.json_path, "Write the full regularization fit as JSON");
    c_path->add_flag("--no-cv", path.no_cv, "Skip cross-validation (cv_loss and chosen left empty)");
    path.cv.add_to(*c_path, true);
    add_manifest(c_path);

    BalanceArgs bal;
    auto* c_bal = app.add_subcommand("balance", "Correlation of each trait with the outcome residuals");
    c_bal->add_option("--data", bal.data, "Summary-data CSV")->required()->check(CLI::ExistingFile);
    c_bal->add_option("--sets", bal.sets,
                      "Covariate sets: 'none', 'all' or a comma list; repeat the flag or separate sets with ';'")
        ->required();
    c_bal->add_flag("--raw-scale", bal.raw_scale, "Correlate unweighted associations");
    c_bal->add_option("--out", bal.out, "Write the CSV here instead of stdout");
    add_manifest(c_bal);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo study under a simulation scenario");
    auto* o_scn = c_sim->add_option("--scenario", sim.scenario, "Preset scenario 1-4")->check(CLI::Range(1, 4));
    auto* o_cfg = c_sim->add_option("--config", sim.config, "Scenario file of 'key = value' lines")
                      ->check(CLI::ExistingFile);
    o_scn->excludes(o_cfg);
    c_sim->add_option("--theta", sim.theta, "True causal effect");
    c_sim->add_option("--n-pleio", sim.n_pleio, "Number of pleiotropic covariates");
    c_sim->add_option("--regime", sim.regime, "Sparsity regime")
        ->check(CLI::IsMember({"outcome", "variant", "outcome_effects", "variant_effects"}));
    c_sim->add_option("--seed", sim.seed, "Simulation seed");
    c_sim->add_option("--n", sim.n, "Individuals per sample");
    c_sim->add_flag("--freeze-parameters", sim.freeze, "Reuse one draw of the genetic effects in every replicate");
    c_sim->add_option("--reps", sim.reps, "Number of replicates");
    c_sim->add_option("--methods", sim.methods,
                      "Comma list of ivw, reg, post_reg, mv_all, oracle, two_sample_a, two_sample_b, "
                      "three_sample_a, three_sample_b, double_est");
    c_sim->add_option("--threads", sim.threads, "Worker threads");
    c_sim->add_option("--out", sim.out, "Write the report CSV here instead of stdout");
    c_sim->add_option("--json", sim.json_path, "Write the report as JSON");
    sim.cv.add_to(*c_sim, false);
    add_manifest(c_sim);

    std::string replay_manifest;
    std::string replay_out;
    CLI::App* c_rep = nullptr;
    if (allow_replay) {
        c_rep = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
        c_rep->add_option("manifest", replay_manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
        c_rep->add_option("--out", replay_out, "Redirect the replayed output");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (c_sim->parsed() && !sim.scenario && sim.config.empty()) {
        std::cerr << "simulate: one of --scenario or --config is required\n";
        return 2;
    }

    try {
        if (c_rep && c_rep->parsed()) return run_replay(replay_manifest, replay_out);

        Manifest m;
        m.argv = args;
        m.manifest_path = manifest_path;
        const auto start = std::chrono::steady_clock::now();
        int rc = 0;
        if (c_est->parsed()) {
            m.command = "estimate";
            rc = run_estimate(est, m);
        } else if (c_path->parsed()) {
            m.command = "path";
            rc = run_path(path, m);
        } else if (c_bal->parsed()) {
            m.command = "balance";
            rc = run_balance(bal, m);
        } else if (c_sim->parsed()) {
            m.command = "simulate";
            rc = run_simulate(sim, m);
        }
        const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
        write_manifest(m, wall.count());
        return rc;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        return run(args, true);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
