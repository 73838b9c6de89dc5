#pragma once

#include <string>
#include <vector>

#include "mrpleio/estimators.hpp"
#include "mrpleio/regularize.hpp"

namespace mrpleio {

enum class InferenceMethod {
    ivw,
    mv_all,
    oracle,
    two_sample_a,
    two_sample_b,
    three_sample_a,
    three_sample_b,
    double_estimation,
};

std::string to_string(InferenceMethod m);

struct InferenceResult {
    CausalEstimate estimate;
    std::vector<std::string> selection_set;
    InferenceMethod method;
};

/// Multivariable IVW on `set` (IVW when empty), tagged as `method`.
InferenceResult estimate_on_set(const SummaryDataset& d, const std::vector<std::string>& set,
                                InferenceMethod method);

/// Selection and estimation on the same summary data. Confidence intervals
/// ignore the selection event and under-cover.
InferenceResult two_sample_ci(const SummaryDataset& d, const CvConfig& cfg);
InferenceResult two_sample_ci(const SummaryDataset& d, const RegularizationFit& fit);

/// Selection on an independent dataset, estimation on d_analyze. The two
/// datasets must share variant ids and covariate names; their independence is
/// the caller's responsibility.
InferenceResult three_sample_ci(const SummaryDataset& d_select, const SummaryDataset& d_analyze,
                                const CvConfig& cfg);
InferenceResult three_sample_ci(const RegularizationFit& selection_fit, const SummaryDataset& d_analyze);

/// Plain (fully penalized, no intercept) Lasso with lambda chosen by K-fold
/// cross-validation of held-out squared error.
struct LassoCvFit {
    Vector lambdas;
    Matrix coef_path;  // L x k, original scale
    Vector cv_curve;
    double chosen_lambda = 0.0;
    Vector chosen_coef;
    double max_kkt_violation = 0.0;
};

LassoCvFit cross_validate_lasso(const Matrix& X, const Vector& y, const CvConfig& cfg, std::uint64_t stream);

struct DoubleEstimationOptions {
    /// Scale both screening regressions by S^{1/2}.
    bool weighted = true;
};

/// Union of the covariates selected by Lasso regressions of beta_x on beta_w
/// and of beta_y on beta_w, capped at p - 2 by raising both lambdas together
/// along their paths, then multivariable IVW on the union.
InferenceResult double_estimation_ci(const SummaryDataset& d, const CvConfig& cfg,
                                     const DoubleEstimationOptions& options = {});

/// Multivariable IVW on the truly pleiotropic set (simulation benchmark).
InferenceResult oracle_ci(const SummaryDataset& d, const std::vector<std::string>& true_set);

}  // namespace mrpleio
