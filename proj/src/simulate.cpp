#include "mrpleio/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "mrpleio/error.hpp"
#include "mrpleio/random.hpp"

namespace mrpleio {

namespace {

// Stream keys. Parameters and each individual-level sample draw from
// separate substreams of (seed, replicate).
constexpr std::uint64_t kParamStream = 0x504152414d53ULL;
constexpr std::uint64_t kSampleStream = 0x53414d504c45ULL;
constexpr std::uint64_t kCvStream = 0x43565345454eULL;
constexpr std::uint64_t kFrozenReplicate = ~std::uint64_t{0};

std::vector<std::string> names(const char* prefix, int n) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

double uniform01(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

struct SampleStats {
    Vector beta;   // per trait column
    Matrix coef;   // p x m
    Matrix se;     // p x m
    Vector ss_g;   // centred genotype sums of squares
    Vector ss_t;   // centred trait sums of squares
};

// Simple linear regression (with intercept) of each trait column on each
// variant in turn.
SampleStats per_variant_regressions(const Matrix& G, const Matrix& traits) {
    const auto n = G.rows();
    const Eigen::RowVectorXd g_mean = G.colwise().mean();
    const Matrix Gc = G.rowwise() - g_mean;
    const Eigen::RowVectorXd t_mean = traits.colwise().mean();

    SampleStats out;
    out.ss_g = Gc.colwise().squaredNorm().transpose();
    out.ss_t = (traits.rowwise() - t_mean).colwise().squaredNorm().transpose();
    const Matrix cross = Gc.transpose() * traits;  // Gc is centred, so traits need not be
    out.coef = cross.array().colwise() / out.ss_g.array();
    out.se.resize(cross.rows(), cross.cols());
    for (Eigen::Index j = 0; j < cross.rows(); ++j) {
        for (Eigen::Index t = 0; t < cross.cols(); ++t) {
            const double rss = std::max(0.0, out.ss_t[t] - out.coef(j, t) * cross(j, t));
            out.se(j, t) = std::sqrt(rss / static_cast<double>(n - 2) / out.ss_g[j]);
        }
    }
    return out;
}

struct IndividualSample {
    Matrix G;
    Vector X;
    Matrix W;
    Vector Y;
};

// One sample of n individuals. Returns false if a variant is monomorphic.
bool simulate_sample(const ScenarioConfig& cfg, const TrueParameters& truth, Engine& eng, bool with_outcome,
                     IndividualSample& s) {
    const int n = cfg.n, p = cfg.p, k = cfg.k;
    const double q0 = (1.0 - cfg.maf) * (1.0 - cfg.maf);
    const double q1 = 1.0 - cfg.maf * cfg.maf;
    s.G.resize(n, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < n; ++i) {
            const double u = uniform01(eng);
            s.G(i, j) = u < q0 ? 0.0 : (u < q1 ? 1.0 : 2.0);
        }
        const double first = s.G(0, j);
        if ((s.G.col(j).array() == first).all()) return false;
    }
    boost::random::normal_distribution<double> normal;
    Vector U(n), eX(n), eY(n);
    for (int i = 0; i < n; ++i) U[i] = normal(eng);
    for (int i = 0; i < n; ++i) eX[i] = normal(eng);
    Matrix eW(n, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i) eW(i, j) = normal(eng);
    if (with_outcome)
        for (int i = 0; i < n; ++i) eY[i] = normal(eng);

    s.X = s.G * truth.beta_x + cfg.gamma_x * U + eX;
    s.W = s.G * truth.beta_w + eW;
    if (k > 0) s.W.colwise() += cfg.gamma_w_value() * U;
    if (with_outcome) {
        s.Y = cfg.theta * s.X + cfg.gamma_y * U + eY;
        if (k > 0) s.Y += s.W * truth.delta;
    }
    return true;
}

IndividualSample draw_sample(const ScenarioConfig& cfg, const TrueParameters& truth, std::uint64_t rep,
                             std::uint64_t sample_id, bool with_outcome, int& redraws) {
    IndividualSample s;
    for (std::uint64_t attempt = 0;; ++attempt) {
        auto eng = make_engine(cfg.rng_seed, {kSampleStream, rep, sample_id, attempt});
        if (simulate_sample(cfg, truth, eng, with_outcome, s)) return s;
        ++redraws;
    }
}

}  // namespace

std::string to_string(SparsityRegime r) {
    return r == SparsityRegime::outcome_effects ? "outcome_effects" : "variant_effects";
}

SparsityRegime parse_regime(const std::string& s) {
    if (s == "outcome_effects" || s == "outcome") return SparsityRegime::outcome_effects;
    if (s == "variant_effects" || s == "variant") return SparsityRegime::variant_effects;
    throw InputError("unknown sparsity regime '" + s + "' (expected outcome_effects or variant_effects)");
}

void ScenarioConfig::validate() const {
    if (p < 2) throw InputError("scenario needs p >= 2");
    if (k < 0) throw InputError("scenario needs k >= 0");
    if (n < 3) throw InputError("scenario needs n >= 3 individuals");
    if (!(maf > 0.0 && maf < 1.0)) throw InputError("maf must lie in (0, 1)");
    if (n_pleiotropic < 0 || n_pleiotropic > k) throw InputError("n_pleiotropic must lie in [0, k]");
    for (auto [r, name] : {std::pair{beta_x_range, "beta_x"}, std::pair{beta_w_range, "beta_w"},
                           std::pair{delta_range, "delta"}})
        if (!(r.low <= r.high) || !std::isfinite(r.low) || !std::isfinite(r.high))
            throw InputError(std::string(name) + " range must be ordered and finite");
    if (n_datasets != 2 && n_datasets != 3) throw InputError("n_datasets must be 2 or 3");
}

ScenarioConfig preset_scenario(int id) {
    ScenarioConfig cfg;
    switch (id) {
        case 1:
        case 2:
            cfg.p = 10;
            cfg.k = id == 1 ? 8 : 12;
            cfg.beta_x_range = {0.15, 0.3};
            cfg.beta_w_range = {-0.2, 0.4};
            break;
        case 3:
        case 4:
            cfg.p = 80;
            cfg.k = id == 3 ? 70 : 90;
            cfg.beta_x_range = {0.05, 0.12};
            cfg.beta_w_range = {0.05, 0.12};
            break;
        default:
            throw InputError("unknown scenario " + std::to_string(id) + " (expected 1-4)");
    }
    return cfg;
}

TrueParameters draw_parameters(const ScenarioConfig& cfg, std::uint64_t rep_index) {
    auto eng = make_engine(cfg.rng_seed, {kParamStream, cfg.freeze_parameters ? kFrozenReplicate : rep_index});
    // A point range still consumes a draw so the remaining streams line up.
    auto draw = [&](Range r) {
        if (r.low == r.high) return r.low + 0.0 * uniform01(eng);
        return boost::random::uniform_real_distribution<double>(r.low, r.high)(eng);
    };
    TrueParameters t;
    t.beta_x.resize(cfg.p);
    for (int j = 0; j < cfg.p; ++j) t.beta_x[j] = draw(cfg.beta_x_range);
    t.beta_w = Matrix::Zero(cfg.p, cfg.k);
    t.delta = Vector::Zero(cfg.k);
    const auto cov_names = names("W", cfg.k);
    for (int c = 0; c < cfg.k; ++c) {
        const bool pleiotropic = c < cfg.n_pleiotropic;
        const bool column_drawn = cfg.regime == SparsityRegime::outcome_effects || pleiotropic;
        for (int j = 0; j < cfg.p; ++j) {
            const double v = draw(cfg.beta_w_range);
            if (column_drawn) t.beta_w(j, c) = v;
        }
        const double dv = draw(cfg.delta_range);
        if (cfg.regime == SparsityRegime::variant_effects || pleiotropic) t.delta[c] = dv;
        if (pleiotropic) t.pleiotropic.push_back(cov_names[static_cast<std::size_t>(c)]);
    }
    return t;
}

Replicate generate_replicate(const ScenarioConfig& cfg, std::uint64_t rep_index) {
    cfg.validate();
    auto truth = draw_parameters(cfg, rep_index);
    const auto variant_ids = names("G", cfg.p);
    const auto cov_names = names("W", cfg.k);
    int redraws = 0;

    // Sample 1: exposure-side associations (risk factor and covariates).
    const auto s1 = draw_sample(cfg, truth, rep_index, 1, false, redraws);
    Matrix t1(cfg.n, cfg.k + 1);
    t1.col(0) = s1.X;
    t1.rightCols(cfg.k) = s1.W;
    const auto r1 = per_variant_regressions(s1.G, t1);
    double r2 = 0.0;
    for (int j = 0; j < cfg.p; ++j) r2 += r1.coef(j, 0) * r1.coef(j, 0) * r1.ss_g[j];
    r2 /= r1.ss_t[0];

    // Sample 2: outcome associations and their standard errors.
    const auto s2 = draw_sample(cfg, truth, rep_index, 2, true, redraws);
    const auto r2s = per_variant_regressions(s2.G, s2.Y);

    std::optional<SummaryDataset> selection;
    if (cfg.n_datasets == 3) {
        const auto s3 = draw_sample(cfg, truth, rep_index, 3, true, redraws);
        Matrix t3(cfg.n, cfg.k + 2);
        t3.col(0) = s3.X;
        t3.middleCols(1, cfg.k) = s3.W;
        t3.col(cfg.k + 1) = s3.Y;
        const auto r3 = per_variant_regressions(s3.G, t3);
        selection.emplace(variant_ids, r3.coef.col(0), r3.coef.middleCols(1, cfg.k), r3.coef.col(cfg.k + 1),
                          r3.se.col(cfg.k + 1), cov_names);
    }

    SummaryDataset analysis(variant_ids, r1.coef.col(0), r1.coef.rightCols(cfg.k), r2s.coef.col(0), r2s.se.col(0),
                            cov_names);
    return Replicate{std::move(analysis), std::move(selection), std::move(truth), r2, redraws};
}

std::string to_string(StudyMethod m) {
    switch (m) {
        case StudyMethod::ivw: return "ivw";
        case StudyMethod::reg: return "reg";
        case StudyMethod::post_reg: return "post_reg";
        case StudyMethod::mv_all: return "mv_all";
        case StudyMethod::oracle: return "oracle";
        case StudyMethod::two_sample_a: return "two_sample_a";
        case StudyMethod::two_sample_b: return "two_sample_b";
        case StudyMethod::three_sample_a: return "three_sample_a";
        case StudyMethod::three_sample_b: return "three_sample_b";
        case StudyMethod::double_est: return "double_est";
    }
    return "unknown";
}

StudyMethod parse_study_method(const std::string& s) {
    for (auto m : {StudyMethod::ivw, StudyMethod::reg, StudyMethod::post_reg, StudyMethod::mv_all, StudyMethod::oracle,
                   StudyMethod::two_sample_a, StudyMethod::two_sample_b, StudyMethod::three_sample_a,
                   StudyMethod::three_sample_b, StudyMethod::double_est})
        if (to_string(m) == s) return m;
    throw InputError("unknown method '" + s + "'");
}

std::vector<StudyMethod> parse_study_methods(const std::string& comma_list) {
    std::vector<StudyMethod> out;
    std::stringstream ss(comma_list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto m = parse_study_method(item);
        if (std::find(out.begin(), out.end(), m) != out.end()) throw InputError("method '" + item + "' listed twice");
        out.push_back(m);
    }
    if (out.empty()) throw InputError("no methods given");
    return out;
}

std::vector<StudyMethod> default_methods(const ScenarioConfig& cfg) {
    std::vector<StudyMethod> m{StudyMethod::ivw, StudyMethod::reg, StudyMethod::post_reg};
    if (cfg.p >= cfg.k + 2) m.push_back(StudyMethod::mv_all);
    m.push_back(StudyMethod::oracle);
    return m;
}

ReplicateResult evaluate_replicate(const Replicate& rep, const std::vector<StudyMethod>& methods,
                                   const StudyOptions& options, std::uint64_t cv_seed) {
    ReplicateResult out;
    out.r2_x = rep.r2_x;
    out.redraws = rep.redraws;
    const auto& d = rep.analysis;

    // Fits are shared between methods that use the same data and target.
    std::optional<RegularizationFit> fits[2][2];  // [analysis|selection][mse|projected]
    auto get_fit = [&](bool selection, CvTarget target) -> const RegularizationFit& {
        auto& slot = fits[selection ? 1 : 0][target == CvTarget::mse ? 0 : 1];
        if (!slot) {
            CvConfig cv = options.cv;
            cv.target = target;
            cv.rng_seed = cv_seed;
            slot.emplace(cross_validate(selection ? *rep.selection : d, cv));
            out.max_kkt_violation = std::max(out.max_kkt_violation, slot->max_kkt_violation);
            if (!slot->delta_path.row(0).isZero(0.0)) out.zero_at_lambda_max = false;
        }
        return *slot;
    };

    for (auto m : methods) {
        MethodOutcome o;
        try {
            CausalEstimate est;
            switch (m) {
                case StudyMethod::ivw: est = ivw(d); break;
                case StudyMethod::reg: est = regularized_estimate(d, get_fit(false, CvTarget::mse)); break;
                case StudyMethod::post_reg: est = post_regularization(d, get_fit(false, CvTarget::mse)); break;
                case StudyMethod::mv_all: est = mv_ivw(d); break;
                case StudyMethod::oracle: est = oracle_ci(d, rep.truth.pleiotropic).estimate; break;
                case StudyMethod::two_sample_a: est = two_sample_ci(d, get_fit(false, CvTarget::mse)).estimate; break;
                case StudyMethod::two_sample_b:
                    est = two_sample_ci(d, get_fit(false, CvTarget::projected)).estimate;
                    break;
                case StudyMethod::three_sample_a:
                case StudyMethod::three_sample_b: {
                    if (!rep.selection) throw InputError("three-sample methods need a selection dataset");
                    const auto target = m == StudyMethod::three_sample_a ? CvTarget::mse : CvTarget::projected;
                    est = three_sample_ci(get_fit(true, target), d).estimate;
                    break;
                }
                case StudyMethod::double_est: {
                    CvConfig cv = options.cv;
                    cv.rng_seed = cv_seed;
                    est = double_estimation_ci(d, cv, options.double_estimation).estimate;
                    break;
                }
            }
            o.ok = true;
            o.theta_hat = est.theta_hat;
            o.uncertainty = est.uncertainty;
            o.n_selected = est.covariates_used.size();
        } catch (const std::exception& e) {
            o.ok = false;
            o.error = e.what();
        }
        out.outcomes.push_back(std::move(o));
    }
    return out;
}

SimulationReport run_study(const ScenarioConfig& cfg, const std::vector<StudyMethod>& methods, int n_reps,
                           const StudyOptions& options) {
    cfg.validate();
    if (n_reps < 1) throw InputError("number of replications must be >= 1");
    if (methods.empty()) throw InputError("no methods requested");
    if (options.threads < 1) throw InputError("threads must be >= 1");
    for (auto m : methods) {
        if (m == StudyMethod::mv_all && cfg.p < cfg.k + 2)
            throw InputError("mv_all needs p >= k + 2 (p = " + std::to_string(cfg.p) + ", k = " +
                             std::to_string(cfg.k) + ")");
        if ((m == StudyMethod::three_sample_a || m == StudyMethod::three_sample_b) && cfg.n_datasets != 3)
            throw InputError("three-sample methods need n_datasets = 3");
        if ((m == StudyMethod::reg || m == StudyMethod::post_reg || m == StudyMethod::two_sample_a ||
             m == StudyMethod::two_sample_b || m == StudyMethod::three_sample_a ||
             m == StudyMethod::three_sample_b || m == StudyMethod::double_est) &&
            cfg.k < 1)
            throw InputError("method '" + to_string(m) + "' needs at least one covariate");
        if (m == StudyMethod::oracle && cfg.p < cfg.n_pleiotropic + 2)
            throw InputError("oracle needs p >= n_pleiotropic + 2");
    }

    std::vector<ReplicateResult> results(static_cast<std::size_t>(n_reps));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < n_reps; r = next++) {
            const auto rep = generate_replicate(cfg, static_cast<std::uint64_t>(r));
            const auto cv_seed = make_engine(cfg.rng_seed, {kCvStream, static_cast<std::uint64_t>(r)})();
            results[static_cast<std::size_t>(r)] = evaluate_replicate(rep, methods, options, cv_seed);
        }
    };
    const int n_threads = std::min(options.threads, n_reps);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    SimulationReport report;
    report.scenario = cfg;
    report.n_reps = n_reps;
    for (const auto& r : results) {
        report.mean_r2_x += r.r2_x;
        report.redraws += r.redraws;
        report.max_kkt_violation = std::max(report.max_kkt_violation, r.max_kkt_violation);
        report.zero_at_lambda_max = report.zero_at_lambda_max && r.zero_at_lambda_max;
    }
    report.mean_r2_x /= n_reps;

    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        MethodSummary s;
        s.method = methods[mi];
        double sum = 0.0, sum_se = 0.0, sq_err = 0.0, selected = 0.0;
        int n_se = 0, covered = 0, rejected = 0;
        std::vector<double> values;
        for (const auto& r : results) {
            const auto& o = r.outcomes[mi];
            if (!o.ok) {
                if (s.reps_failed++ == 0) s.first_error = o.error;
                continue;
            }
            ++s.reps_ok;
            values.push_back(o.theta_hat);
            sum += o.theta_hat;
            sq_err += (o.theta_hat - cfg.theta) * (o.theta_hat - cfg.theta);
            selected += static_cast<double>(o.n_selected);
            if (o.uncertainty) {
                ++n_se;
                sum_se += o.uncertainty->se;
                if (o.uncertainty->ci_low <= cfg.theta && cfg.theta <= o.uncertainty->ci_high) ++covered;
                if (o.uncertainty->ci_low > 0.0 || o.uncertainty->ci_high < 0.0) ++rejected;
            }
        }
        if (s.reps_ok > 0) {
            s.mean = sum / s.reps_ok;
            double ss = 0.0;
            for (double v : values) ss += (v - s.mean) * (v - s.mean);
            s.sd = s.reps_ok > 1 ? std::sqrt(ss / (s.reps_ok - 1)) : 0.0;
            s.mse = sq_err / s.reps_ok;
            s.mean_selected = selected / s.reps_ok;
        }
        if (n_se > 0) {
            s.mean_se = sum_se / n_se;
            s.coverage = static_cast<double>(covered) / n_se;
            s.power = static_cast<double>(rejected) / n_se;
        }
        report.rows.push_back(std::move(s));
    }
    return report;
}

}  // namespace mrpleio
