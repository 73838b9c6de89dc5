#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mrpleio/summary_data.hpp"

namespace mrpleio {

/// Two-sided 95% normal quantile used for every confidence interval.
inline constexpr double kZ95 = 1.959964;

/// Random-effects standard error and normal-based 95% interval.
struct Uncertainty {
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double dispersion = 1.0;  // multiplicative over-dispersion, floored at 1
};

Uncertainty normal_interval(double estimate, double se, double dispersion);

struct CausalEstimate {
    double theta_hat = 0.0;
    Vector delta_hat;  // one entry per name in covariates_used
    /// Absent for the shrunken "reg" estimator: standard errors taken from a
    /// penalized fit ignore the selection event and are not reported.
    std::optional<Uncertainty> uncertainty;
    std::vector<std::string> covariates_used;
    std::string method_tag;

    bool post_selection_caveat() const { return !uncertainty.has_value(); }
};

struct WeightedFit {
    Vector coefficients;
    Matrix covariance;  // dispersion * (X'WX)^{-1}
    double dispersion = 1.0;
    double weighted_rss = 0.0;
};

/// Weighted least squares without intercept. Dispersion is
/// max(1, RSS_w / (rows - cols)).
WeightedFit fit_weighted_regression(const Vector& y, const Matrix& X, const WeightVector& w);

/// beta_x' S beta_y / beta_x' S beta_x with S = diag(w).
double ivw_ratio(const Vector& beta_x, const Vector& beta_y, const Vector& w);

CausalEstimate ivw(const SummaryDataset& d);

/// Multivariable IVW: regress beta_y on [beta_x beta_w] with weights se_y^-2.
/// Requires p >= k + 2.
CausalEstimate mv_ivw(const SummaryDataset& d);

/// Covariate-balancing allele-score weights with S in place of the variant
/// covariance. alpha' S beta_w = 0 for every covariate.
struct BalancingWeights {
    Vector alpha;
    Vector xi;
};

BalancingWeights balancing_weights(const SummaryDataset& d);

/// Ratio estimator alpha' S beta_y / alpha' S beta_x. Numerically identical
/// to mv_ivw's theta; the standard error is taken from the mv_ivw fit when
/// p >= k + 2 and is absent otherwise.
CausalEstimate balancing_estimate(const SummaryDataset& d);

enum class BalanceScale { weighted, raw };

/// Correlations of the risk-factor and covariate associations with the
/// outcome residuals left after regressing on `covariates_in_model`.
struct BalanceDiagnostic {
    std::vector<std::string> trait_names;  // "risk_factor" first, then covariates
    Vector correlations;
};

/// Correlations are uncentred (cosine), matching the no-intercept regression:
/// a covariate in the model has correlation exactly zero with the residuals.
BalanceDiagnostic balance_diagnostic(const SummaryDataset& d,
                                     const std::vector<std::string>& covariates_in_model,
                                     BalanceScale scale = BalanceScale::weighted);

}  // namespace mrpleio
