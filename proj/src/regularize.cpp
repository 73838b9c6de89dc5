#include "mrpleio/regularize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "mrpleio/error.hpp"
#include "mrpleio/random.hpp"

namespace mrpleio {

namespace {

std::vector<std::string> active_names(const std::vector<std::string>& names, const Vector& delta) {
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < delta.size(); ++j)
        if (delta[j] != 0.0) out.push_back(names[static_cast<std::size_t>(j)]);
    return out;
}

std::string num(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

// Held-out loss of (theta, delta) fitted on the training variants.
double held_out_loss(const SummaryDataset& test, CvTarget target, double theta, const Vector& delta,
                     const ProjectionComplement* test_projection) {
    const Vector w = weights(test).values();
    const Vector resid = test.beta_y() - test.beta_w() * delta;
    const auto n = static_cast<double>(test.n_variants());
    if (target == CvTarget::mse) {
        const Vector r = resid - theta * test.beta_x();
        return r.dot(w.cwiseProduct(r)) / n;
    }
    const Vector r = test_projection->apply(Vector(w.cwiseSqrt().cwiseProduct(resid)));
    return r.squaredNorm() / n;
}

}  // namespace

ProjectionComplement::ProjectionComplement(const SummaryDataset& d)
    : ProjectionComplement(Vector(weights(d).sqrt().cwiseProduct(d.beta_x()))) {}

ProjectionComplement::ProjectionComplement(Vector b) : b_(std::move(b)), bb_(b_.squaredNorm()) {
    if (!(bb_ > 0.0) || !std::isfinite(bb_)) throw NumericalError("degenerate instruments: beta_x' S beta_x = 0");
}

Vector ProjectionComplement::apply(const Vector& v) const { return v - b_ * (b_.dot(v) / bb_); }

Matrix ProjectionComplement::apply(const Matrix& m) const {
    const Eigen::RowVectorXd coef = (b_.transpose() * m) / bb_;
    return m - b_ * coef;
}

LassoProblem step_one_problem(const SummaryDataset& d, const LassoOptions& options) {
    const ProjectionComplement proj(d);
    const Vector s = weights(d).sqrt();
    const Vector y = proj.apply(Vector(s.cwiseProduct(d.beta_y())));
    const Matrix X = proj.apply(Matrix(s.asDiagonal() * d.beta_w()));
    return LassoProblem(X, y, options);
}

double step_two_theta(const SummaryDataset& d, const Vector& delta) {
    const bool none = delta.size() == 0 || (delta.array() == 0.0).all();
    return ivw_ratio(d.beta_x(), none ? d.beta_y() : Vector(d.beta_y() - d.beta_w() * delta), weights(d).values());
}

PenalizedSolution solve_penalized(const SummaryDataset& d, double lambda, const LassoOptions& options,
                                  const Vector& warm_start) {
    if (d.n_variants() < 2) throw InputError("penalized fit needs at least 2 variants");
    if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
    if (lambda == 0.0 && d.n_variants() < d.n_covariates() + 2)
        throw InputError("unpenalized fit (lambda = 0) needs p >= k + 2");
    PenalizedSolution out;
    if (d.n_covariates() == 0) {
        out.delta = Vector();
        out.theta = step_two_theta(d, out.delta);
        return out;
    }
    const auto problem = step_one_problem(d, options);
    auto sol = problem.solve(lambda, warm_start);
    out.delta = std::move(sol.coefficients);
    out.kkt_violation = sol.kkt_violation;
    out.theta = step_two_theta(d, out.delta);
    return out;
}

double penalized_objective(const SummaryDataset& d, double theta, const Vector& delta, double lambda,
                           const Vector& penalty_factors) {
    const Vector w = weights(d).values();
    Vector r = d.beta_y() - theta * d.beta_x();
    if (delta.size() > 0) r -= d.beta_w() * delta;
    const double penalty = penalty_factors.size() == 0 ? delta.cwiseAbs().sum()
                                                       : penalty_factors.cwiseProduct(delta.cwiseAbs()).sum();
    return 0.5 * r.dot(w.cwiseProduct(r)) + lambda * penalty;
}

Vector lambda_path(const SummaryDataset& d, int n_lambda, double lambda_min_ratio, const LassoOptions& options) {
    if (d.n_covariates() < 1) throw InputError("a lambda path needs at least one covariate");
    return geometric_path(step_one_problem(d, options).lambda_max(), n_lambda, lambda_min_ratio);
}

std::string to_string(CvTarget t) { return t == CvTarget::mse ? "mse" : "projected"; }

CvTarget parse_cv_target(const std::string& s) {
    if (s == "mse") return CvTarget::mse;
    if (s == "projected") return CvTarget::projected;
    throw InputError("unknown cross-validation target '" + s + "' (expected mse or projected)");
}

std::vector<int> assign_folds(Eigen::Index n, int n_folds, std::uint64_t seed, std::uint64_t repeat) {
    if (n_folds < 2 || n_folds > n)
        throw InputError("number of folds must lie in [2, p] (folds = " + std::to_string(n_folds) +
                         ", p = " + std::to_string(n) + ")");
    auto engine = make_engine(seed, {0x43565f464f4c44ULL, repeat});
    const auto perm = random_permutation(static_cast<std::size_t>(n), engine);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < perm.size(); ++i) fold[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
    return fold;
}

RegularizationFit regularization_path(const SummaryDataset& d, int n_lambda, double lambda_min_ratio,
                                      const LassoOptions& options) {
    if (d.n_variants() < 2) throw InputError("regularization needs at least 2 variants");
    const auto problem = step_one_problem(d, options);
    if (d.n_covariates() < 1) throw InputError("a lambda path needs at least one covariate");

    RegularizationFit fit;
    fit.covariate_names = d.covariate_names();
    fit.lambdas = geometric_path(problem.lambda_max(), n_lambda, lambda_min_ratio);
    fit.delta_path.resize(n_lambda, d.n_covariates());
    fit.theta_path.resize(n_lambda);
    Vector warm;
    for (int i = 0; i < n_lambda; ++i) {
        auto sol = problem.solve(fit.lambdas[i], warm);
        fit.max_kkt_violation = std::max(fit.max_kkt_violation, sol.kkt_violation);
        fit.delta_path.row(i) = sol.coefficients.transpose();
        fit.theta_path[i] = step_two_theta(d, sol.coefficients);
        fit.active_sets.push_back(active_names(fit.covariate_names, sol.coefficients));
        warm = std::move(sol.coefficients);
    }
    return fit;
}

namespace {

// Number of leading path values kept as cross-validation candidates: the path
// stops once the full-data fit saturates, i.e. the fraction of the Step-1
// response explained exceeds 0.999 or improves by less than a relative 1e-5
// between neighbouring values. At least five values are always kept.
Eigen::Index saturation_length(const SummaryDataset& d, const RegularizationFit& fit, const LassoOptions& opts) {
    const auto problem = step_one_problem(d, opts);
    const double null_rss = problem.objective(Vector::Zero(problem.n_features()), 0.0);
    const auto L = fit.lambdas.size();
    if (!(null_rss > 0.0)) return L;
    double prev = 0.0;
    for (Eigen::Index i = 0; i < L; ++i) {
        const double rsq = 1.0 - problem.objective(fit.delta_path.row(i).transpose(), 0.0) / null_rss;
        if (i >= 4 && (rsq - prev < 1e-5 * rsq || rsq > 0.999)) return i + 1;
        prev = rsq;
    }
    return L;
}

}  // namespace

RegularizationFit cross_validate(const SummaryDataset& d, const CvConfig& cfg) {
    const auto p = d.n_variants();
    if (d.n_covariates() < 1) throw InputError("cross-validation needs at least one covariate");
    if (cfg.n_repeats < 1) throw InputError("n_repeats must be >= 1");
    if (cfg.n_folds < 2 || cfg.n_folds > p)
        throw InputError("number of folds must lie in [2, p] (folds = " + std::to_string(cfg.n_folds) +
                         ", p = " + std::to_string(p) + ")");

    auto fit = regularization_path(d, cfg.n_lambda, cfg.lambda_min_ratio, cfg.lasso);
    fit.cv_target = cfg.target;
    fit.n_candidates = fit.lambdas.size();
    if (cfg.stop_at_saturation) fit.n_candidates = saturation_length(d, fit, cfg.lasso);
    const auto L = fit.n_candidates;
    Vector curve_total = Vector::Zero(L);

    for (int rep = 0; rep < cfg.n_repeats; ++rep) {
        const auto folds = assign_folds(p, cfg.n_folds, cfg.rng_seed, static_cast<std::uint64_t>(rep));
        Vector loss = Vector::Zero(L);
        int used = 0;
        for (int f = 0; f < cfg.n_folds; ++f) {
            std::vector<Eigen::Index> train, test;
            for (Eigen::Index i = 0; i < p; ++i) (folds[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
            // A single held-out variant is annihilated by its own projection,
            // so the projected target is undefined there.
            if (test.empty() || train.size() < 2 || (cfg.target == CvTarget::projected && test.size() < 2)) {
                ++fit.excluded_folds;
                continue;
            }
            const auto train_d = subset_variants(d, train);
            const auto test_d = subset_variants(d, test);
            std::optional<LassoProblem> problem;
            std::optional<ProjectionComplement> test_proj;
            try {
                problem.emplace(step_one_problem(train_d, cfg.lasso));
                if (cfg.target == CvTarget::projected) test_proj.emplace(test_d);
            } catch (const NumericalError&) {
                ++fit.excluded_folds;
                continue;
            }
            Vector warm;
            for (Eigen::Index i = 0; i < L; ++i) {
                auto sol = problem->solve(fit.lambdas[i], warm);
                fit.max_kkt_violation = std::max(fit.max_kkt_violation, sol.kkt_violation);
                const double theta = step_two_theta(train_d, sol.coefficients);
                loss[i] += held_out_loss(test_d, cfg.target, theta, sol.coefficients,
                                         test_proj ? &*test_proj : nullptr);
                warm = std::move(sol.coefficients);
            }
            ++used;
        }
        if (used == 0) throw NumericalError("every cross-validation fold was degenerate");
        loss /= static_cast<double>(used);
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < L; ++i)
            if (loss[i] < loss[best]) best = i;
        fit.repeat_minimizers.push_back(fit.lambdas[best]);
        curve_total += loss;
    }
    fit.cv_curve = Vector::Constant(fit.lambdas.size(), std::numeric_limits<double>::quiet_NaN());
    fit.cv_curve->head(L) = curve_total / static_cast<double>(cfg.n_repeats);

    double chosen = 0.0;
    for (double l : fit.repeat_minimizers) chosen += l;
    chosen /= static_cast<double>(fit.repeat_minimizers.size());

    // Largest path index whose lambda is >= chosen: the warm start, and the
    // lower end of the candidates if the cap has to raise lambda.
    Eigen::Index anchor = 0;
    for (Eigen::Index i = 0; i < L; ++i)
        if (fit.lambdas[i] >= chosen) anchor = i;
    Vector delta;
    if (fit.lambdas[anchor] == chosen) {
        delta = fit.delta_path.row(anchor).transpose();
    } else {
        auto sol = step_one_problem(d, cfg.lasso).solve(chosen, fit.delta_path.row(anchor).transpose());
        fit.max_kkt_violation = std::max(fit.max_kkt_violation, sol.kkt_violation);
        delta = std::move(sol.coefficients);
    }

    const auto cap = static_cast<std::size_t>(std::max<Eigen::Index>(p - 2, 0));
    if (active_names(fit.covariate_names, delta).size() > cap) {
        for (Eigen::Index i = anchor; i >= 0; --i) {
            if (fit.active_sets[static_cast<std::size_t>(i)].size() <= cap) {
                chosen = fit.lambdas[i];
                delta = fit.delta_path.row(i).transpose();
                fit.capped = true;
                break;
            }
        }
    }
    fit.chosen_lambda = chosen;
    fit.chosen_delta = delta;
    fit.chosen_theta = step_two_theta(d, delta);
    fit.chosen_set = active_names(fit.covariate_names, delta);
    return fit;
}

CausalEstimate regularized_estimate(const SummaryDataset& d, const RegularizationFit& fit) {
    if (!fit.chosen_lambda) throw InputError("regularization fit has no chosen lambda; run cross-validation");
    if (fit.covariate_names != d.covariate_names()) throw InputError("fit and dataset have different covariates");
    CausalEstimate est;
    est.theta_hat = fit.chosen_theta;
    est.covariates_used = fit.chosen_set;
    est.delta_hat.resize(static_cast<Eigen::Index>(fit.chosen_set.size()));
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j < fit.chosen_delta.size(); ++j)
        if (fit.chosen_delta[j] != 0.0) est.delta_hat[c++] = fit.chosen_delta[j];
    est.method_tag = "reg";
    return est;
}

CausalEstimate post_regularization(const SummaryDataset& d, const RegularizationFit& fit) {
    if (!fit.chosen_lambda) throw InputError("regularization fit has no chosen lambda; run cross-validation");
    if (fit.covariate_names != d.covariate_names()) throw InputError("fit and dataset have different covariates");
    auto est = fit.chosen_set.empty() ? ivw(d) : mv_ivw(subset_covariates(d, fit.chosen_set));
    est.method_tag = "post_reg";
    return est;
}

void write_path_csv(std::ostream& out, const RegularizationFit& fit) {
    out << "lambda,theta";
    for (const auto& name : fit.covariate_names) out << ",delta_" << name;
    out << ",n_active,cv_loss,chosen\n";
    Eigen::Index flagged = -1;
    if (fit.chosen_lambda) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < fit.lambdas.size(); ++i) {
            const double dist = std::abs(std::log(fit.lambdas[i]) - std::log(*fit.chosen_lambda));
            if (dist < best) {
                best = dist;
                flagged = i;
            }
        }
    }
    for (Eigen::Index i = 0; i < fit.lambdas.size(); ++i) {
        out << num(fit.lambdas[i]) << ',' << num(fit.theta_path[i]);
        for (Eigen::Index j = 0; j < fit.delta_path.cols(); ++j) out << ',' << num(fit.delta_path(i, j));
        out << ',' << fit.active_sets[static_cast<std::size_t>(i)].size() << ',';
        if (fit.cv_curve && !std::isnan((*fit.cv_curve)[i])) out << num((*fit.cv_curve)[i]);
        out << ',' << (i == flagged ? 1 : 0) << '\n';
    }
}

}  // namespace mrpleio
