#include "mrpleio/lasso.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "mrpleio/error.hpp"

namespace mrpleio {

namespace {

double soft_threshold(double u, double lambda) {
    if (u > lambda) return u - lambda;
    if (u < -lambda) return u + lambda;
    return 0.0;
}

}  // namespace

LassoProblem::LassoProblem(const Matrix& X, const Vector& y, const LassoOptions& options) : options_(options) {
    if (X.rows() != y.size()) throw InputError("lasso design and response have different lengths");
    const auto k = X.cols();
    scale_.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double norm = X.col(j).norm();
        // Columns annihilated by a projection are numerically tiny, not zero.
        const bool null_column = norm <= 1e-12 * std::max(1.0, X.norm());
        scale_[j] = null_column ? 0.0 : (options_.standardize ? norm : 1.0);
    }
    Matrix Z = X;
    for (Eigen::Index j = 0; j < k; ++j) {
        if (scale_[j] == 0.0) Z.col(j).setZero();
        else Z.col(j) /= scale_[j];
    }
    gram_ = Z.transpose() * Z;
    zty_ = Z.transpose() * y;
    yty_ = y.squaredNorm();
    lambda_max_ = k > 0 ? zty_.cwiseAbs().maxCoeff() : 0.0;
}

Vector LassoProblem::to_standardized(const Vector& b) const { return b.cwiseProduct(scale_); }

Vector LassoProblem::to_original(const Vector& g) const {
    Vector b(g.size());
    for (Eigen::Index j = 0; j < g.size(); ++j) b[j] = scale_[j] == 0.0 ? 0.0 : g[j] / scale_[j];
    return b;
}

LassoSolution LassoProblem::solve(double lambda, const Vector& warm_start) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and >= 0");
    const auto k = n_features();
    LassoSolution out;
    if (k == 0 || lambda >= lambda_max_) {
        out.coefficients = Vector::Zero(k);
        out.kkt_violation = kkt_violation(out.coefficients, lambda);
        return out;
    }

    Vector gamma = warm_start.size() == k ? to_standardized(warm_start) : Vector(Vector::Zero(k));
    Vector grad = zty_ - gram_ * gamma;  // Z'r

    auto update = [&](Eigen::Index j) {
        const double gjj = gram_(j, j);
        if (gjj <= 0.0) return 0.0;
        const double old = gamma[j];
        const double next = soft_threshold(grad[j] + gjj * old, lambda) / gjj;
        const double delta = next - old;
        if (delta == 0.0) return 0.0;
        gamma[j] = next;
        grad.noalias() -= gram_.col(j) * delta;
        return std::abs(delta) * std::sqrt(gjj);
    };

    auto objective_std = [&](const Vector& g) {
        return 0.5 * g.dot(gram_ * g) - zty_.dot(g) + lambda * g.cwiseAbs().sum();
    };

    // Feature-sign step on the current active set and signs. With a
    // nonsingular active Gram the orthant quadratic has a unique minimizer;
    // move toward it while the objective falls, stopping at sign changes.
    // With a singular one the objective is linear along the null space, so
    // slide along it until a coefficient reaches zero.
    auto polish = [&](const std::vector<Eigen::Index>& act) {
        const auto m = static_cast<Eigen::Index>(act.size());
        if (m == 0) return;
        Matrix g_aa(m, m);
        Vector rhs(m), cur(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) g_aa(a, b) = gram_(act[a], act[b]);
            cur[a] = gamma[act[a]];
            rhs[a] = zty_[act[a]] - lambda * (cur[a] > 0.0 ? 1.0 : -1.0);
        }
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(g_aa);
        cod.setThreshold(1e-11);
        const Vector target = cod.solve(rhs);

        if (cod.rank() < m) {
            const Vector nu = rhs - g_aa * target;
            if (nu.norm() > 1e-10 * std::max(1.0, rhs.norm())) {
                double t = std::numeric_limits<double>::infinity();
                Eigen::Index hit = -1;
                for (Eigen::Index a = 0; a < m; ++a)
                    if (nu[a] * cur[a] < 0.0 && -cur[a] / nu[a] < t) {
                        t = -cur[a] / nu[a];
                        hit = a;
                    }
                if (hit < 0) return;
                Vector trial = gamma;
                for (Eigen::Index a = 0; a < m; ++a) {
                    double v = cur[a] + t * nu[a];
                    if (a == hit || (v > 0.0) != (cur[a] > 0.0)) v = 0.0;
                    trial[act[a]] = v;
                }
                if (objective_std(trial) <= objective_std(gamma)) {
                    gamma = std::move(trial);
                    grad = zty_ - gram_ * gamma;
                }
                return;
            }
        }

        std::vector<double> steps{1.0};
        for (Eigen::Index a = 0; a < m; ++a)
            if ((cur[a] > 0.0) != (target[a] > 0.0) || target[a] == 0.0) {
                const double t = cur[a] / (cur[a] - target[a]);
                if (t > 0.0 && t < 1.0) steps.push_back(t);
            }
        Vector best = gamma;
        double best_obj = objective_std(gamma);
        for (double t : steps) {
            Vector trial = gamma;
            for (Eigen::Index a = 0; a < m; ++a) {
                double v = cur[a] + t * (target[a] - cur[a]);
                if ((v > 0.0) != (cur[a] > 0.0) || std::abs(v) <= 1e-15 * std::abs(cur[a])) v = 0.0;
                trial[act[a]] = v;
            }
            const double obj = objective_std(trial);
            if (obj < best_obj) {
                best_obj = obj;
                best = std::move(trial);
            }
        }
        gamma = best;
        grad = zty_ - gram_ * gamma;
    };

    std::vector<Eigen::Index> active;
    int sweeps = 0;
    while (true) {
        double change = 0.0;
        for (Eigen::Index j = 0; j < k; ++j) change = std::max(change, update(j));
        ++sweeps;
        if (change < options_.tolerance) break;

        active.clear();
        for (Eigen::Index j = 0; j < k; ++j)
            if (gamma[j] != 0.0) active.push_back(j);
        for (int inner_sweeps = 1; sweeps < options_.max_sweeps; ++inner_sweeps) {
            double inner = 0.0;
            for (auto j : active) inner = std::max(inner, update(j));
            ++sweeps;
            if (inner < options_.tolerance) break;
            if (inner_sweeps % 25 == 0) {
                polish(active);
                active.clear();
                for (Eigen::Index j = 0; j < k; ++j)
                    if (gamma[j] != 0.0) active.push_back(j);
            }
        }
        if (sweeps >= options_.max_sweeps) {
            std::ostringstream msg;
            msg << "coordinate descent did not converge at lambda = " << lambda << " within "
                << options_.max_sweeps << " sweeps (last change " << change << ", " << active.size()
                << " active coefficients)";
            throw NumericalError(msg.str());
        }
    }

    out.coefficients = to_original(gamma);
    out.sweeps = sweeps;
    out.kkt_violation = kkt_violation(out.coefficients, lambda);
    return out;
}

double LassoProblem::kkt_violation(const Vector& coefficients, double lambda) const {
    const Vector gamma = to_standardized(coefficients);
    const Vector grad = zty_ - gram_ * gamma;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < gamma.size(); ++j) {
        if (scale_[j] == 0.0) continue;
        const double v = gamma[j] == 0.0 ? std::max(0.0, std::abs(grad[j]) - lambda)
                                         : std::abs(grad[j] - lambda * (gamma[j] > 0.0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

double LassoProblem::objective(const Vector& coefficients, double lambda) const {
    const Vector gamma = to_standardized(coefficients);
    const double rss = yty_ - 2.0 * zty_.dot(gamma) + gamma.dot(gram_ * gamma);
    return 0.5 * rss + lambda * gamma.cwiseAbs().sum();
}

Vector geometric_path(double lambda_max, int n, double min_ratio) {
    if (n < 2) throw InputError("lambda path needs at least 2 values");
    if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw InputError("lambda_min_ratio must lie in (0, 1)");
    if (!(lambda_max > 0.0)) throw NumericalError("lambda_max is zero: no covariate is correlated with the response");
    Vector path(n);
    const double step = std::log(min_ratio) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) path[i] = lambda_max * std::exp(step * i);
    path[n - 1] = lambda_max * min_ratio;
    return path;
}

}  // namespace mrpleio
