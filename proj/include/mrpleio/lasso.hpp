#pragma once

#include "mrpleio/summary_data.hpp"

namespace mrpleio {

struct LassoOptions {
    /// Scale each design column to unit norm internally; the penalty then
    /// acts on standardized coefficients, i.e. lambda * ||x_j|| * |beta_j| on
    /// the original scale.
    bool standardize = true;
    /// Convergence when the largest coefficient change, measured on the
    /// standardized scale, drops below this.
    double tolerance = 1e-9;
    /// Coordinate-descent sweeps allowed per lambda.
    int max_sweeps = 100000;
};

struct LassoSolution {
    Vector coefficients;  // original (unstandardized) scale
    int sweeps = 0;
    double kkt_violation = 0.0;
};

/// Solves min_b 1/2 ||y - X b||^2 + lambda * sum_j pf_j |b_j| by cyclic
/// coordinate descent with covariance updates and an active-set cycle.
/// pf_j is ||x_j|| when standardizing and 1 otherwise. No intercept.
class LassoProblem {
public:
    LassoProblem(const Matrix& X, const Vector& y, const LassoOptions& options = {});

    Eigen::Index n_features() const { return scale_.size(); }

    /// Smallest lambda at which every coefficient is exactly zero.
    double lambda_max() const { return lambda_max_; }

    /// Per-coefficient penalty weights on the original scale.
    const Vector& penalty_factors() const { return scale_; }

    /// Warm start is given on the original scale; pass an empty vector for a
    /// cold start.
    LassoSolution solve(double lambda, const Vector& warm_start = Vector()) const;

    /// Largest violation of the subgradient optimality conditions on the
    /// standardized scale: |z_j'r| <= lambda for zero coefficients and
    /// z_j'r = lambda * sign(b_j) otherwise.
    double kkt_violation(const Vector& coefficients, double lambda) const;

    /// 1/2 ||y - X b||^2 + lambda * sum pf_j |b_j|.
    double objective(const Vector& coefficients, double lambda) const;

private:
    Vector to_standardized(const Vector& b) const;
    Vector to_original(const Vector& g) const;

    LassoOptions options_;
    Vector scale_;  // column norms (or 1), zero for null columns
    Matrix gram_;   // Z'Z of the standardized design
    Vector zty_;    // Z'y
    double yty_ = 0.0;
    double lambda_max_ = 0.0;
};

/// Geometric sequence of n values from lambda_max down to
/// lambda_max * min_ratio.
Vector geometric_path(double lambda_max, int n, double min_ratio);

}  // namespace mrpleio
