#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrpleio/estimators.hpp"
#include "mrpleio/lasso.hpp"
#include "mrpleio/summary_data.hpp"

namespace mrpleio {

/// Residual-maker of b = S^{1/2} beta_x: v -> v - b (b'b)^{-1} b'v.
/// Acts on S^{1/2}-scaled vectors.
class ProjectionComplement {
public:
    explicit ProjectionComplement(const SummaryDataset& d);
    explicit ProjectionComplement(Vector b);

    Vector apply(const Vector& v) const;
    Matrix apply(const Matrix& m) const;
    const Vector& direction() const { return b_; }

private:
    Vector b_;
    double bb_;
};

/// Step 1 of the two-step procedure as a standard Lasso problem:
/// response P S^{1/2} beta_y, design P S^{1/2} beta_w.
LassoProblem step_one_problem(const SummaryDataset& d, const LassoOptions& options = {});

/// Step 2: theta = (beta_y - beta_w delta)' S beta_x / (beta_x' S beta_x).
double step_two_theta(const SummaryDataset& d, const Vector& delta);

struct PenalizedSolution {
    double theta = 0.0;
    Vector delta;
    double kkt_violation = 0.0;
};

/// Minimizes 1/2 (by - theta bx - bW delta)' S (same) + lambda sum_j pf_j |delta_j|
/// with theta unpenalized. pf_j = 1 when options.standardize is false (the
/// plain objective); otherwise pf_j is the norm of the projected, weighted
/// covariate column.
PenalizedSolution solve_penalized(const SummaryDataset& d, double lambda, const LassoOptions& options = {},
                                  const Vector& warm_start = Vector());

/// The penalized objective at (theta, delta). Empty penalty_factors means 1.
double penalized_objective(const SummaryDataset& d, double theta, const Vector& delta, double lambda,
                           const Vector& penalty_factors = Vector());

/// Geometric lambda path from the Step-1 lambda_max. Requires k >= 1.
Vector lambda_path(const SummaryDataset& d, int n_lambda, double lambda_min_ratio,
                   const LassoOptions& options = {});

enum class CvTarget { mse, projected };

std::string to_string(CvTarget t);
CvTarget parse_cv_target(const std::string& s);

struct CvConfig {
    int n_folds = 10;
    int n_lambda = 100;
    double lambda_min_ratio = 1e-4;
    CvTarget target = CvTarget::mse;
    int n_repeats = 1;
    std::uint64_t rng_seed = 0;
    /// Only path values before the full-data fit saturates are candidates:
    /// fraction explained above 0.999 or a relative gain below 1e-5.
    bool stop_at_saturation = true;
    LassoOptions lasso;
};

struct RegularizationFit {
    std::vector<std::string> covariate_names;
    Vector lambdas;     // strictly decreasing, lambdas[0] = lambda_max
    Matrix delta_path;  // L x k
    Vector theta_path;  // L
    std::vector<std::vector<std::string>> active_sets;

    CvTarget cv_target = CvTarget::mse;
    /// Mean held-out loss per lambda, averaged over repeats; NaN past the
    /// candidate range.
    std::optional<Vector> cv_curve;
    Eigen::Index n_candidates = 0;  // leading path values eligible for selection
    std::vector<double> repeat_minimizers;
    std::optional<double> chosen_lambda;

    // Refit on all variants at chosen_lambda.
    double chosen_theta = 0.0;
    Vector chosen_delta;
    std::vector<std::string> chosen_set;
    bool capped = false;  // chosen_lambda raised to keep at most p - 2 covariates

    /// Worst subgradient-condition violation over every solution computed,
    /// including the per-fold paths.
    double max_kkt_violation = 0.0;
    int excluded_folds = 0;
};

/// Solution path on all variants without cross-validation.
RegularizationFit regularization_path(const SummaryDataset& d, int n_lambda, double lambda_min_ratio,
                                      const LassoOptions& options = {});

/// K-fold cross-validation over variants, repeated n_repeats times with
/// fresh splits; chosen lambda is the mean of the per-repeat minimizers.
RegularizationFit cross_validate(const SummaryDataset& d, const CvConfig& cfg);

/// Shrunken two-step estimate at the chosen lambda. Carries no standard
/// error.
CausalEstimate regularized_estimate(const SummaryDataset& d, const RegularizationFit& fit);

/// Multivariable IVW refit on the covariates selected at the chosen lambda
/// (plain IVW when none are selected).
CausalEstimate post_regularization(const SummaryDataset& d, const RegularizationFit& fit);

/// Path export: lambda, theta, delta_<name>..., n_active, cv_loss, chosen.
/// The chosen flag marks the path value nearest chosen_lambda on log scale.
void write_path_csv(std::ostream& out, const RegularizationFit& fit);

/// Folds of near-equal size from a seeded uniform permutation.
std::vector<int> assign_folds(Eigen::Index n, int n_folds, std::uint64_t seed, std::uint64_t repeat);

}  // namespace mrpleio
