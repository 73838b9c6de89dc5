#include "mrpleio/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "mrpleio/error.hpp"

namespace mrpleio {

namespace {

constexpr double kRankTolerance = 1e-10;

CausalEstimate from_fit(const WeightedFit& fit, std::vector<std::string> covariates, std::string tag) {
    CausalEstimate est;
    est.theta_hat = fit.coefficients[0];
    est.delta_hat = fit.coefficients.tail(fit.coefficients.size() - 1);
    est.uncertainty = normal_interval(est.theta_hat, std::sqrt(fit.covariance(0, 0)), fit.dispersion);
    est.covariates_used = std::move(covariates);
    est.method_tag = std::move(tag);
    return est;
}

Matrix design(const SummaryDataset& d) {
    Matrix X(d.n_variants(), d.n_covariates() + 1);
    X.col(0) = d.beta_x();
    X.rightCols(d.n_covariates()) = d.beta_w();
    return X;
}

double cosine(const Vector& a, const Vector& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace

double ivw_ratio(const Vector& beta_x, const Vector& beta_y, const Vector& w) {
    const Vector wx = w.cwiseProduct(beta_x);
    const double info = wx.dot(beta_x);
    if (!(info > 0.0)) throw NumericalError("degenerate instruments: beta_x' S beta_x = 0");
    return wx.dot(beta_y) / info;
}

Uncertainty normal_interval(double estimate, double se, double dispersion) {
    return Uncertainty{se, estimate - kZ95 * se, estimate + kZ95 * se, dispersion};
}

WeightedFit fit_weighted_regression(const Vector& y, const Matrix& X, const WeightVector& w) {
    const auto n = X.rows();
    const auto c = X.cols();
    if (y.size() != n || w.size() != n) throw InputError("regression inputs have mismatched lengths");
    if (c < 1) throw InputError("regression needs at least one column");
    if (n <= c)
        throw InputError("weighted regression needs more rows than columns (rows " + std::to_string(n) +
                         ", columns " + std::to_string(c) + ")");

    const Vector sw = w.sqrt();
    const Matrix Xs = sw.asDiagonal() * X;
    const Vector ys = sw.cwiseProduct(y);

    Eigen::ColPivHouseholderQR<Matrix> qr(Xs);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < c)
        throw NumericalError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " < " +
                             std::to_string(c) + " columns)");

    WeightedFit fit;
    fit.coefficients = qr.solve(ys);
    fit.weighted_rss = (ys - Xs * fit.coefficients).squaredNorm();
    fit.dispersion = std::max(1.0, fit.weighted_rss / static_cast<double>(n - c));

    // (X'WX)^{-1} = P R^{-1} R^{-T} P'
    const Matrix R = qr.matrixR().topLeftCorner(c, c).template triangularView<Eigen::Upper>();
    const Matrix Rinv = R.triangularView<Eigen::Upper>().solve(Matrix::Identity(c, c));
    const Matrix unscaled = Rinv * Rinv.transpose();
    const auto& perm = qr.colsPermutation();
    fit.covariance = fit.dispersion * (perm * unscaled * perm.transpose());
    return fit;
}

CausalEstimate ivw(const SummaryDataset& d) {
    if (d.n_variants() < 2) throw InputError("IVW needs at least 2 variants");
    const auto w = weights(d);
    const double theta = ivw_ratio(d.beta_x(), d.beta_y(), w.values());
    auto est = from_fit(fit_weighted_regression(d.beta_y(), d.beta_x(), w), {}, "ivw");
    // Closed form for the point estimate so every IVW-equivalent path agrees bit for bit.
    est.theta_hat = theta;
    est.uncertainty = normal_interval(theta, est.uncertainty->se, est.uncertainty->dispersion);
    return est;
}

CausalEstimate mv_ivw(const SummaryDataset& d) {
    const auto p = d.n_variants();
    const auto k = d.n_covariates();
    if (k == 0) {
        auto est = ivw(d);
        est.method_tag = "mv_ivw";
        return est;
    }
    if (p < k + 2)
        throw InputError("multivariable IVW needs p >= k + 2 variants (p = " + std::to_string(p) +
                         ", k = " + std::to_string(k) + ")");
    return from_fit(fit_weighted_regression(d.beta_y(), design(d), weights(d)), d.covariate_names(), "mv_ivw");
}

BalancingWeights balancing_weights(const SummaryDataset& d) {
    const auto p = d.n_variants();
    const auto k = d.n_covariates();
    if (p <= k)
        throw InputError("balancing weights need p > k (p = " + std::to_string(p) + ", k = " + std::to_string(k) + ")");
    const Vector w = weights(d).values();

    BalancingWeights out;
    out.xi = d.beta_x();
    if (k > 0) {
        const Matrix Ws = w.cwiseSqrt().asDiagonal() * d.beta_w();
        Eigen::ColPivHouseholderQR<Matrix> qr(Ws);
        qr.setThreshold(kRankTolerance);
        if (qr.rank() < k) throw NumericalError("beta_w' S beta_w is singular");
        // (bW' S bW)^{-1} bW' S bx is the least-squares fit of S^{1/2} bx on S^{1/2} bW.
        const Vector gamma = qr.solve(Vector(w.cwiseSqrt().cwiseProduct(d.beta_x())));
        out.xi -= d.beta_w() * gamma;
    }
    const double norm = out.xi.dot(w.cwiseProduct(out.xi));
    if (!(norm > 0.0)) throw NumericalError("risk-factor associations are collinear with the covariates");
    out.alpha = out.xi / norm;
    return out;
}

CausalEstimate balancing_estimate(const SummaryDataset& d) {
    const auto bw = balancing_weights(d);
    const Vector w = weights(d).values();
    const Vector aw = bw.alpha.cwiseProduct(w);
    const double denom = aw.dot(d.beta_x());
    if (denom == 0.0) throw NumericalError("alpha' S beta_x = 0");

    CausalEstimate est;
    est.theta_hat = aw.dot(d.beta_y()) / denom;
    est.covariates_used = d.covariate_names();
    est.method_tag = "balance";
    if (d.n_variants() >= d.n_covariates() + 2) {
        const auto mv = mv_ivw(d);
        est.delta_hat = mv.delta_hat;
        est.uncertainty = normal_interval(est.theta_hat, mv.uncertainty->se, mv.uncertainty->dispersion);
    }
    return est;
}

BalanceDiagnostic balance_diagnostic(const SummaryDataset& d, const std::vector<std::string>& covariates_in_model,
                                     BalanceScale scale) {
    const auto sub = subset_covariates(d, covariates_in_model);
    const auto p = d.n_variants();
    const auto m = sub.n_covariates();
    const Vector s = weights(d).sqrt();

    // Weighted no-intercept regression of beta_y on the selected columns.
    Vector residual = d.beta_y();
    if (m > 0) {
        if (p <= m)
            throw InputError("balance diagnostic needs more variants than covariates in the model");
        const Matrix Ws = s.asDiagonal() * sub.beta_w();
        Eigen::ColPivHouseholderQR<Matrix> qr(Ws);
        qr.setThreshold(kRankTolerance);
        if (qr.rank() < m) throw NumericalError("selected covariate columns are rank deficient");
        const Vector coef = qr.solve(Vector(s.cwiseProduct(d.beta_y())));
        residual -= sub.beta_w() * coef;
    }

    auto scaled = [&](const Vector& v) -> Vector {
        return scale == BalanceScale::weighted ? Vector(s.cwiseProduct(v)) : v;
    };
    const Vector r = scaled(residual);

    BalanceDiagnostic out;
    out.trait_names.reserve(static_cast<std::size_t>(d.n_covariates() + 1));
    out.trait_names.push_back("risk_factor");
    out.correlations.resize(d.n_covariates() + 1);
    out.correlations[0] = cosine(scaled(d.beta_x()), r);
    for (Eigen::Index j = 0; j < d.n_covariates(); ++j) {
        out.trait_names.push_back(d.covariate_names()[static_cast<std::size_t>(j)]);
        out.correlations[j + 1] = cosine(scaled(d.beta_w().col(j)), r);
    }
    return out;
}

}  // namespace mrpleio
