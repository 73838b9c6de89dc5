#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mrpleio {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Inverse-variance weights w[j] = se_y[j]^-2, i.e. the diagonal of S.
class WeightVector {
public:
    explicit WeightVector(Vector w);

    const Vector& values() const { return w_; }
    Eigen::Index size() const { return w_.size(); }
    double operator[](Eigen::Index j) const { return w_[j]; }
    /// Elementwise square root, the diagonal of S^{1/2}.
    Vector sqrt() const { return w_.array().sqrt(); }

private:
    Vector w_;
};

/// Per-variant association estimates for one risk factor, k candidate
/// pleiotropic covariates and one outcome. Immutable once constructed; the
/// constructor enforces dimensional consistency, finiteness and se_y > 0.
class SummaryDataset {
public:
    SummaryDataset(std::vector<std::string> variant_ids, Vector beta_x, Matrix beta_w,
                   Vector beta_y, Vector se_y, std::vector<std::string> covariate_names);

    Eigen::Index n_variants() const { return beta_x_.size(); }
    Eigen::Index n_covariates() const { return beta_w_.cols(); }

    const std::vector<std::string>& variant_ids() const { return variant_ids_; }
    const std::vector<std::string>& covariate_names() const { return covariate_names_; }
    const Vector& beta_x() const { return beta_x_; }
    const Matrix& beta_w() const { return beta_w_; }
    const Vector& beta_y() const { return beta_y_; }
    const Vector& se_y() const { return se_y_; }

    /// Column index of a named covariate; throws InputError if unknown.
    Eigen::Index covariate_index(const std::string& name) const;

    friend bool operator==(const SummaryDataset& a, const SummaryDataset& b);

private:
    std::vector<std::string> variant_ids_;
    Vector beta_x_;
    Matrix beta_w_;
    Vector beta_y_;
    Vector se_y_;
    std::vector<std::string> covariate_names_;
};

WeightVector weights(const SummaryDataset& d);

/// Restricts to the listed variants, in the listed order. Indices must be
/// unique and within [0, p).
SummaryDataset subset_variants(const SummaryDataset& d, std::span<const Eigen::Index> indices);

/// Restricts beta_w to the named covariates, keeping the dataset's column
/// order. An empty name list gives k = 0.
SummaryDataset subset_covariates(const SummaryDataset& d, std::span<const std::string> names);

/// Reads `variant_id,beta_x,beta_w_<name>...,beta_y,se_y`. Columns named
/// `se_*` other than `se_y` are ignored. Errors name the offending data row
/// (1-based, header excluded) and column.
SummaryDataset load_summary_csv(const std::string& path);
SummaryDataset read_summary_csv(std::istream& in, const std::string& source = "<stream>");

/// Writes the canonical column layout with shortest round-trip formatting.
void write_summary_csv(std::ostream& out, const SummaryDataset& d);
void save_summary_csv(const std::string& path, const SummaryDataset& d);

}  // namespace mrpleio
