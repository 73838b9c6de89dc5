#pragma once

// Independent reference computations and fixtures for the test suites. Nothing
// here calls into the library's solvers.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mrpleio/summary_data.hpp"

namespace testing_support {

using mrpleio::Matrix;
using mrpleio::SummaryDataset;
using mrpleio::Vector;

inline std::vector<std::string> names(const std::string& prefix, int n) {
    std::vector<std::string> out;
    for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

/// Random dataset: normal associations, se_y uniform on [0.5, 2].
inline SummaryDataset random_dataset(std::mt19937_64& rng, int p, int k, double theta = 0.2) {
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> se(0.5, 2.0);
    Vector bx(p), by(p), s(p);
    Matrix bw(p, k);
    for (int i = 0; i < p; ++i) {
        bx[i] = 1.0 + z(rng);
        for (int j = 0; j < k; ++j) bw(i, j) = z(rng);
        s[i] = se(rng);
    }
    Vector delta(k);
    for (int j = 0; j < k; ++j) delta[j] = 0.5 * z(rng);
    for (int i = 0; i < p; ++i) by[i] = theta * bx[i] + (k ? bw.row(i).dot(delta) : 0.0) + 0.3 * s[i] * z(rng);
    return SummaryDataset(names("rs", p), bx, bw, by, s, names("W", k));
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = A[r][c] / A[c][c];
            for (std::size_t j = c; j < n; ++j) A[r][j] -= f * A[c][j];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= A[i][j] * x[j];
        x[i] = acc / A[i][i];
    }
    return x;
}

/// Weighted least squares through explicit normal equations X'WX b = X'Wy.
inline std::vector<double> normal_equations(const Matrix& X, const Vector& y, const Vector& w) {
    const auto n = X.rows(), c = X.cols();
    std::vector<std::vector<double>> A(c, std::vector<double>(c, 0.0));
    std::vector<double> rhs(c, 0.0);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index a = 0; a < c; ++a) {
            rhs[a] += w[i] * X(i, a) * y[i];
            for (Eigen::Index b = 0; b < c; ++b) A[a][b] += w[i] * X(i, a) * X(i, b);
        }
    return gauss_solve(A, rhs);
}

/// 1/2 (by - theta bx - bW delta)' S (...) + lambda sum |delta_j|, written out
/// from the definition.
inline double plain_objective(const SummaryDataset& d, double theta, const std::vector<double>& delta, double lambda) {
    double rss = 0.0;
    for (Eigen::Index i = 0; i < d.n_variants(); ++i) {
        double r = d.beta_y()[i] - theta * d.beta_x()[i];
        for (Eigen::Index j = 0; j < d.n_covariates(); ++j) r -= d.beta_w()(i, j) * delta[static_cast<std::size_t>(j)];
        rss += r * r / (d.se_y()[i] * d.se_y()[i]);
    }
    double pen = 0.0;
    for (double v : delta) pen += std::abs(v);
    return 0.5 * rss + lambda * pen;
}

/// Minimum of the penalized objective over (theta, delta) by a shrinking
/// grid: 13 points per coordinate, recentred on the best point and narrowed
/// until the spacing is at most `spacing`.
inline double grid_minimum(const SummaryDataset& d, double lambda, double half_width, double spacing,
                           std::vector<double>* argmin = nullptr) {
    const std::size_t dim = static_cast<std::size_t>(d.n_covariates()) + 1;
    constexpr int kPoints = 13;
    std::vector<double> centre(dim, 0.0), best = centre;
    double best_obj = plain_objective(d, 0.0, std::vector<double>(dim - 1, 0.0), lambda);
    double h = half_width;
    while (true) {
        const double step = 2.0 * h / (kPoints - 1);
        std::vector<int> idx(dim, 0);
        std::vector<double> pt(dim), delta(dim - 1);
        while (true) {
            for (std::size_t a = 0; a < dim; ++a) pt[a] = centre[a] - h + step * idx[a];
            for (std::size_t a = 1; a < dim; ++a) delta[a - 1] = pt[a];
            const double obj = plain_objective(d, pt[0], delta, lambda);
            if (obj < best_obj) {
                best_obj = obj;
                best = pt;
            }
            std::size_t a = 0;
            while (a < dim && ++idx[a] == kPoints) idx[a++] = 0;
            if (a == dim) break;
        }
        if (step <= spacing) break;
        centre = best;
        h = std::max(3.0 * step, spacing * (kPoints - 1) / 2.0);
        h = std::min(h, 0.5 * (kPoints - 1) * step);
    }
    if (argmin) *argmin = best;
    return best_obj;
}

}  // namespace testing_support
