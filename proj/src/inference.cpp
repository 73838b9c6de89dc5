#include "mrpleio/inference.hpp"

#include <algorithm>
#include <set>

#include "mrpleio/error.hpp"

namespace mrpleio {

namespace {

std::vector<std::string> names_where_nonzero(const std::vector<std::string>& names, const Vector& coef) {
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < coef.size(); ++j)
        if (coef[j] != 0.0) out.push_back(names[static_cast<std::size_t>(j)]);
    return out;
}

// Candidate coefficient vectors from the chosen lambda upward to lambda_max.
std::vector<Vector> raising_sequence(const LassoCvFit& fit) {
    std::vector<Vector> seq{fit.chosen_coef};
    for (Eigen::Index i = fit.lambdas.size() - 1; i >= 0; --i)
        if (fit.lambdas[i] > fit.chosen_lambda) seq.push_back(fit.coef_path.row(i).transpose());
    return seq;
}

}  // namespace

std::string to_string(InferenceMethod m) {
    switch (m) {
        case InferenceMethod::ivw: return "ivw";
        case InferenceMethod::mv_all: return "mv_all";
        case InferenceMethod::oracle: return "oracle";
        case InferenceMethod::two_sample_a: return "two_sample_a";
        case InferenceMethod::two_sample_b: return "two_sample_b";
        case InferenceMethod::three_sample_a: return "three_sample_a";
        case InferenceMethod::three_sample_b: return "three_sample_b";
        case InferenceMethod::double_estimation: return "double_est";
    }
    return "unknown";
}

InferenceResult estimate_on_set(const SummaryDataset& d, const std::vector<std::string>& set, InferenceMethod method) {
    auto est = set.empty() ? ivw(d) : mv_ivw(subset_covariates(d, set));
    est.method_tag = to_string(method);
    auto used = est.covariates_used;
    return InferenceResult{std::move(est), std::move(used), method};
}

InferenceResult two_sample_ci(const SummaryDataset& d, const RegularizationFit& fit) {
    if (!fit.chosen_lambda) throw InputError("regularization fit has no chosen lambda");
    const auto method = fit.cv_target == CvTarget::mse ? InferenceMethod::two_sample_a : InferenceMethod::two_sample_b;
    return estimate_on_set(d, fit.chosen_set, method);
}

InferenceResult two_sample_ci(const SummaryDataset& d, const CvConfig& cfg) {
    return two_sample_ci(d, cross_validate(d, cfg));
}

InferenceResult three_sample_ci(const RegularizationFit& selection_fit, const SummaryDataset& d_analyze) {
    if (!selection_fit.chosen_lambda) throw InputError("regularization fit has no chosen lambda");
    if (selection_fit.covariate_names != d_analyze.covariate_names())
        throw InputError("selection and analysis datasets have different covariates");
    const auto method = selection_fit.cv_target == CvTarget::mse ? InferenceMethod::three_sample_a
                                                                 : InferenceMethod::three_sample_b;
    return estimate_on_set(d_analyze, selection_fit.chosen_set, method);
}

InferenceResult three_sample_ci(const SummaryDataset& d_select, const SummaryDataset& d_analyze, const CvConfig& cfg) {
    if (d_select.variant_ids() != d_analyze.variant_ids())
        throw InputError("selection and analysis datasets have different variants");
    if (d_select.covariate_names() != d_analyze.covariate_names())
        throw InputError("selection and analysis datasets have different covariates");
    return three_sample_ci(cross_validate(d_select, cfg), d_analyze);
}

LassoCvFit cross_validate_lasso(const Matrix& X, const Vector& y, const CvConfig& cfg, std::uint64_t stream) {
    const auto p = X.rows();
    if (cfg.n_repeats < 1) throw InputError("n_repeats must be >= 1");
    const LassoProblem full(X, y, cfg.lasso);

    LassoCvFit fit;
    const int L = cfg.n_lambda;
    fit.lambdas = geometric_path(full.lambda_max(), L, cfg.lambda_min_ratio);
    fit.coef_path.resize(L, X.cols());
    Vector warm;
    for (int i = 0; i < L; ++i) {
        auto sol = full.solve(fit.lambdas[i], warm);
        fit.max_kkt_violation = std::max(fit.max_kkt_violation, sol.kkt_violation);
        fit.coef_path.row(i) = sol.coefficients.transpose();
        warm = std::move(sol.coefficients);
    }

    fit.cv_curve = Vector::Zero(L);
    double chosen = 0.0;
    for (int rep = 0; rep < cfg.n_repeats; ++rep) {
        const auto folds = assign_folds(p, cfg.n_folds, cfg.rng_seed ^ (stream * 0x9e3779b97f4a7c15ULL),
                                        static_cast<std::uint64_t>(rep));
        Vector loss = Vector::Zero(L);
        for (int f = 0; f < cfg.n_folds; ++f) {
            std::vector<Eigen::Index> train, test;
            for (Eigen::Index i = 0; i < p; ++i) (folds[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
            const Matrix Xtr = X(train, Eigen::all);
            const Vector ytr = y(train);
            const Matrix Xte = X(test, Eigen::all);
            const Vector yte = y(test);
            const LassoProblem problem(Xtr, ytr, cfg.lasso);
            Vector w;
            for (int i = 0; i < L; ++i) {
                auto sol = problem.solve(fit.lambdas[i], w);
                fit.max_kkt_violation = std::max(fit.max_kkt_violation, sol.kkt_violation);
                loss[i] += (yte - Xte * sol.coefficients).squaredNorm() / static_cast<double>(test.size());
                w = std::move(sol.coefficients);
            }
        }
        loss /= static_cast<double>(cfg.n_folds);
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < L; ++i)
            if (loss[i] < loss[best]) best = i;
        chosen += fit.lambdas[best];
        fit.cv_curve += loss;
    }
    fit.cv_curve /= static_cast<double>(cfg.n_repeats);
    fit.chosen_lambda = chosen / static_cast<double>(cfg.n_repeats);

    Eigen::Index anchor = 0;
    for (Eigen::Index i = 0; i < L; ++i)
        if (fit.lambdas[i] >= fit.chosen_lambda) anchor = i;
    if (fit.lambdas[anchor] == fit.chosen_lambda) {
        fit.chosen_coef = fit.coef_path.row(anchor).transpose();
    } else {
        auto sol = full.solve(fit.chosen_lambda, fit.coef_path.row(anchor).transpose());
        fit.max_kkt_violation = std::max(fit.max_kkt_violation, sol.kkt_violation);
        fit.chosen_coef = std::move(sol.coefficients);
    }
    return fit;
}

InferenceResult double_estimation_ci(const SummaryDataset& d, const CvConfig& cfg,
                                     const DoubleEstimationOptions& options) {
    const auto p = d.n_variants();
    if (d.n_covariates() < 1) throw InputError("double estimation needs at least one covariate");
    if (p < 3) throw InputError("double estimation needs at least 3 variants");
    if (cfg.n_folds < 2 || cfg.n_folds > p)
        throw InputError("number of folds must lie in [2, p] (folds = " + std::to_string(cfg.n_folds) +
                         ", p = " + std::to_string(p) + ")");

    const Vector s = options.weighted ? weights(d).sqrt() : Vector(Vector::Ones(p));
    const Matrix X = s.asDiagonal() * d.beta_w();
    const auto fit_x = cross_validate_lasso(X, s.cwiseProduct(d.beta_x()), cfg, 1);
    const auto fit_y = cross_validate_lasso(X, s.cwiseProduct(d.beta_y()), cfg, 2);

    const auto seq_x = raising_sequence(fit_x);
    const auto seq_y = raising_sequence(fit_y);
    const auto cap = static_cast<std::size_t>(p - 2);
    const auto& names = d.covariate_names();
    std::vector<std::string> selected;
    const std::size_t steps = std::max(seq_x.size(), seq_y.size());
    for (std::size_t t = 0; t < steps; ++t) {
        const auto a = names_where_nonzero(names, seq_x[std::min(t, seq_x.size() - 1)]);
        const auto b = names_where_nonzero(names, seq_y[std::min(t, seq_y.size() - 1)]);
        std::set<std::string> u(a.begin(), a.end());
        u.insert(b.begin(), b.end());
        if (u.size() <= cap) {
            for (const auto& name : names)
                if (u.count(name)) selected.push_back(name);
            break;
        }
    }
    return estimate_on_set(d, selected, InferenceMethod::double_estimation);
}

InferenceResult oracle_ci(const SummaryDataset& d, const std::vector<std::string>& true_set) {
    if (d.n_variants() < static_cast<Eigen::Index>(true_set.size()) + 2)
        throw InputError("oracle fit needs p >= |true set| + 2");
    return estimate_on_set(d, true_set, InferenceMethod::oracle);
}

}  // namespace mrpleio
