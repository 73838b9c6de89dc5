#include "mrpleio/summary_data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

#include "mrpleio/error.hpp"

namespace mrpleio {

namespace {

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

WeightVector::WeightVector(Vector w) : w_(std::move(w)) {
    for (Eigen::Index j = 0; j < w_.size(); ++j) {
        if (!(w_[j] > 0.0) || !std::isfinite(w_[j]))
            throw InputError("weight " + std::to_string(j) + " must be positive and finite");
    }
}

SummaryDataset::SummaryDataset(std::vector<std::string> variant_ids, Vector beta_x, Matrix beta_w,
                               Vector beta_y, Vector se_y, std::vector<std::string> covariate_names)
    : variant_ids_(std::move(variant_ids)),
      beta_x_(std::move(beta_x)),
      beta_w_(std::move(beta_w)),
      beta_y_(std::move(beta_y)),
      se_y_(std::move(se_y)),
      covariate_names_(std::move(covariate_names)) {
    const auto p = beta_x_.size();
    if (p < 1) throw InputError("summary dataset needs at least one variant");
    if (static_cast<Eigen::Index>(variant_ids_.size()) != p || beta_y_.size() != p ||
        se_y_.size() != p || beta_w_.rows() != p)
        throw InputError("inconsistent variant counts: beta_x has " + std::to_string(p) +
                         " entries, variant_ids " + std::to_string(variant_ids_.size()) +
                         ", beta_w rows " + std::to_string(beta_w_.rows()) + ", beta_y " +
                         std::to_string(beta_y_.size()) + ", se_y " + std::to_string(se_y_.size()));
    if (static_cast<Eigen::Index>(covariate_names_.size()) != beta_w_.cols())
        throw InputError("beta_w has " + std::to_string(beta_w_.cols()) + " columns but " +
                         std::to_string(covariate_names_.size()) + " covariate names were given");
    std::set<std::string_view> seen;
    for (const auto& name : covariate_names_) {
        if (name.empty()) throw InputError("empty covariate name");
        if (!seen.insert(name).second) throw InputError("duplicate covariate name '" + name + "'");
    }
    if (!all_finite(beta_x_) || !all_finite(beta_w_) || !all_finite(beta_y_))
        throw InputError("association estimates must be finite");
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!(se_y_[j] > 0.0) || !std::isfinite(se_y_[j]))
            throw InputError("se_y for variant '" + variant_ids_[j] + "' must be positive and finite");
    }
}

Eigen::Index SummaryDataset::covariate_index(const std::string& name) const {
    for (std::size_t j = 0; j < covariate_names_.size(); ++j)
        if (covariate_names_[j] == name) return static_cast<Eigen::Index>(j);
    throw InputError("unknown covariate '" + name + "'");
}

bool operator==(const SummaryDataset& a, const SummaryDataset& b) {
    return a.variant_ids_ == b.variant_ids_ && a.covariate_names_ == b.covariate_names_ &&
           a.beta_x_ == b.beta_x_ && a.beta_w_.rows() == b.beta_w_.rows() &&
           a.beta_w_.cols() == b.beta_w_.cols() && a.beta_w_ == b.beta_w_ &&
           a.beta_y_ == b.beta_y_ && a.se_y_ == b.se_y_;
}

WeightVector weights(const SummaryDataset& d) {
    return WeightVector(d.se_y().array().square().inverse().matrix());
}

SummaryDataset subset_variants(const SummaryDataset& d, std::span<const Eigen::Index> indices) {
    if (indices.empty()) throw InputError("variant subset is empty");
    const auto p = d.n_variants();
    std::vector<bool> used(static_cast<std::size_t>(p), false);
    for (auto i : indices) {
        if (i < 0 || i >= p)
            throw InputError("variant index " + std::to_string(i) + " out of range [0, " +
                             std::to_string(p) + ")");
        if (used[static_cast<std::size_t>(i)])
            throw InputError("variant index " + std::to_string(i) + " repeated");
        used[static_cast<std::size_t>(i)] = true;
    }
    const auto m = static_cast<Eigen::Index>(indices.size());
    std::vector<std::string> ids;
    ids.reserve(indices.size());
    Vector bx(m), by(m), se(m);
    Matrix bw(m, d.n_covariates());
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto i = indices[static_cast<std::size_t>(r)];
        ids.push_back(d.variant_ids()[static_cast<std::size_t>(i)]);
        bx[r] = d.beta_x()[i];
        by[r] = d.beta_y()[i];
        se[r] = d.se_y()[i];
        bw.row(r) = d.beta_w().row(i);
    }
    return SummaryDataset(std::move(ids), std::move(bx), std::move(bw), std::move(by), std::move(se),
                          d.covariate_names());
}

SummaryDataset subset_covariates(const SummaryDataset& d, std::span<const std::string> names) {
    std::vector<bool> keep(static_cast<std::size_t>(d.n_covariates()), false);
    for (const auto& name : names) keep[static_cast<std::size_t>(d.covariate_index(name))] = true;
    std::vector<Eigen::Index> cols;
    std::vector<std::string> kept;
    for (Eigen::Index j = 0; j < d.n_covariates(); ++j) {
        if (keep[static_cast<std::size_t>(j)]) {
            cols.push_back(j);
            kept.push_back(d.covariate_names()[static_cast<std::size_t>(j)]);
        }
    }
    Matrix bw(d.n_variants(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) bw.col(static_cast<Eigen::Index>(c)) = d.beta_w().col(cols[c]);
    return SummaryDataset(d.variant_ids(), d.beta_x(), std::move(bw), d.beta_y(), d.se_y(),
                          std::move(kept));
}

SummaryDataset read_summary_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& msg) -> InputError {
        return InputError(source + ": " + msg);
    };

    // Header.
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (!trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) throw fail("missing header row");
    const std::string header_line = line;  // header views must outlive the data-row reads
    const auto header = split_fields(header_line);

    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t col_id = npos, col_bx = npos, col_by = npos, col_se = npos;
    std::vector<std::size_t> col_w;
    std::vector<std::string> cov_names;
    std::set<std::string_view> seen;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto h = header[c];
        if (h.empty()) throw fail("header column " + std::to_string(c + 1) + " is empty");
        if (!seen.insert(h).second) throw fail("duplicate column '" + std::string(h) + "'");
        if (h == "variant_id") col_id = c;
        else if (h == "beta_x") col_bx = c;
        else if (h == "beta_y") col_by = c;
        else if (h == "se_y") col_se = c;
        else if (h.starts_with("beta_w_") && h.size() > 7) {
            col_w.push_back(c);
            cov_names.emplace_back(h.substr(7));
        } else if (h.starts_with("se_")) {
            // se(beta_x), se(beta_w_*) and friends are not used by the model.
        } else {
            throw fail("unexpected column '" + std::string(h) + "'");
        }
    }
    for (auto [col, name] : {std::pair{col_id, "variant_id"}, std::pair{col_bx, "beta_x"},
                             std::pair{col_by, "beta_y"}, std::pair{col_se, "se_y"}})
        if (col == npos) throw fail(std::string("missing column '") + name + "'");

    std::vector<std::string> ids;
    std::vector<double> bx, by, se, bw;
    const std::size_t k = col_w.size();
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_fields(line);
        const std::string where = "data row " + std::to_string(row) + " (line " + std::to_string(line_no) + ")";
        if (fields.size() != header.size())
            throw fail(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
        auto number = [&](std::size_t c) {
            const auto cell = fields[c];
            if (cell.empty()) throw fail(where + ", column " + std::string(header[c]) + ": empty cell");
            auto v = parse_double(cell);
            if (!v || !std::isfinite(*v))
                throw fail(where + ", column " + std::string(header[c]) + ": not a finite number '" +
                           std::string(cell) + "'");
            return *v;
        };
        if (fields[col_id].empty()) throw fail(where + ", column variant_id: empty cell");
        ids.emplace_back(fields[col_id]);
        bx.push_back(number(col_bx));
        for (auto c : col_w) bw.push_back(number(c));
        by.push_back(number(col_by));
        const double s = number(col_se);
        if (!(s > 0.0)) throw fail(where + ", column se_y: must be > 0, found " + std::string(fields[col_se]));
        se.push_back(s);
    }
    if (row < 2) throw fail("need at least 2 data rows, found " + std::to_string(row));

    const auto p = static_cast<Eigen::Index>(row);
    Matrix beta_w(p, static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < p; ++i)
        for (std::size_t j = 0; j < k; ++j)
            beta_w(i, static_cast<Eigen::Index>(j)) = bw[static_cast<std::size_t>(i) * k + j];
    try {
        return SummaryDataset(std::move(ids), Eigen::Map<Vector>(bx.data(), p), std::move(beta_w),
                              Eigen::Map<Vector>(by.data(), p), Eigen::Map<Vector>(se.data(), p),
                              std::move(cov_names));
    } catch (const InputError& e) {
        throw fail(e.what());
    }
}

SummaryDataset load_summary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_summary_csv(in, path);
}

void write_summary_csv(std::ostream& out, const SummaryDataset& d) {
    out << "variant_id,beta_x";
    for (const auto& name : d.covariate_names()) out << ",beta_w_" << name;
    out << ",beta_y,se_y\n";
    for (Eigen::Index i = 0; i < d.n_variants(); ++i) {
        out << d.variant_ids()[static_cast<std::size_t>(i)] << ',' << shortest(d.beta_x()[i]);
        for (Eigen::Index j = 0; j < d.n_covariates(); ++j) out << ',' << shortest(d.beta_w()(i, j));
        out << ',' << shortest(d.beta_y()[i]) << ',' << shortest(d.se_y()[i]) << '\n';
    }
}

void save_summary_csv(const std::string& path, const SummaryDataset& d) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    write_summary_csv(out, d);
    if (!out) throw InputError("write to '" + path + "' failed");
}

}  // namespace mrpleio
