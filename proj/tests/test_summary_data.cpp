#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "mrpleio/error.hpp"
#include "mrpleio/summary_data.hpp"
#include "support.hpp"

using namespace mrpleio;
using testing_support::names;
using testing_support::random_dataset;

namespace {

SummaryDataset read(const std::string& text) {
    std::istringstream in(text);
    return read_summary_csv(in, "test.csv");
}

std::string error_of(const std::string& text) {
    try {
        read(text);
    } catch (const InputError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("csv with 31 variants and 8 covariates") {
    std::mt19937_64 rng(3);
    const auto d = random_dataset(rng, 31, 8);
    std::ostringstream out;
    write_summary_csv(out, d);
    const auto back = read(out.str());
    CHECK(back.n_variants() == 31);
    CHECK(back.n_covariates() == 8);
    CHECK(back == d);
}

TEST_CASE("minimal csv: two rows, no covariates") {
    const auto d = read("variant_id,beta_x,beta_y,se_y\nrs1,0.1,0.02,0.01\nrs2,0.2,0.04,0.02\n");
    CHECK(d.n_variants() == 2);
    CHECK(d.n_covariates() == 0);
    CHECK(d.beta_y()[1] == doctest::Approx(0.04));
}

TEST_CASE("se_y of zero is reported with its row") {
    const auto msg = error_of(
        "variant_id,beta_x,beta_y,se_y\nrs1,0.1,0.02,0.01\nrs2,0.2,0.04,0.02\nrs3,0.3,0.05,0\n");
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("se_y") != std::string::npos);
}

TEST_CASE("malformed files are rejected with a location") {
    CHECK(error_of("variant_id,beta_x,beta_y\nrs1,1,2\nrs2,1,2\n").find("se_y") != std::string::npos);
    CHECK(error_of("variant_id,beta_x,beta_x,beta_y,se_y\nrs1,1,1,2,1\nrs2,1,1,2,1\n").find("beta_x") !=
          std::string::npos);
    const auto bad_cell = error_of("variant_id,beta_x,beta_y,se_y\nrs1,1,2,1\nrs2,abc,2,1\n");
    CHECK(bad_cell.find("row 2") != std::string::npos);
    CHECK(bad_cell.find("beta_x") != std::string::npos);
    CHECK(error_of("variant_id,beta_x,beta_y,se_y\nrs1,1,,1\nrs2,1,2,1\n").find("row 1") != std::string::npos);
    CHECK(!error_of("variant_id,beta_x,beta_y,se_y\nrs1,1,2,1\n").empty());
    CHECK(!error_of("variant_id,beta_x,mystery,beta_y,se_y\nrs1,1,0,2,1\nrs2,1,0,2,1\n").empty());
}

TEST_CASE("se_ columns other than se_y are ignored and scientific notation parses") {
    const auto d = read(
        "variant_id,beta_x,se_x,beta_w_BMI,se_w_BMI,beta_y,se_y\n"
        "rs1,1e-1,0.01,2.5E-2,0.01,-3e-3,1e-2\nrs2,0.2,0.01,0.5,0.01,0.1,0.02\n");
    CHECK(d.n_covariates() == 1);
    CHECK(d.covariate_names()[0] == "BMI");
    CHECK(d.beta_w()(0, 0) == doctest::Approx(0.025));
    CHECK(d.beta_y()[0] == doctest::Approx(-0.003));
}

TEST_CASE("weights are inverse squared standard errors") {
    Vector bx(3), by(3), se(3);
    bx << 1, 2, 3;
    by << 1, 2, 3;
    se << 0.1, 0.2, 0.4;
    const SummaryDataset d(names("rs", 3), bx, Matrix(3, 0), by, se, {});
    const auto w = weights(d);
    CHECK(w[0] == doctest::Approx(100.0));
    CHECK(w[1] == doctest::Approx(25.0));
    CHECK(w[2] == doctest::Approx(6.25));

    Vector half(2), ones(2);
    half << 0.5, 0.5;
    ones << 1, 1;
    CHECK(weights(SummaryDataset(names("rs", 2), ones, Matrix(2, 0), ones, ones, {}))[0] == 1.0);
    CHECK(weights(SummaryDataset(names("rs", 2), ones, Matrix(2, 0), ones, half, {}))[1] == 4.0);
}

TEST_CASE("constructor invariants") {
    Vector v(2);
    v << 1, 2;
    Vector bad(2);
    bad << 1, -1;
    CHECK_THROWS_AS(SummaryDataset(names("rs", 2), v, Matrix(2, 0), v, bad, {}), InputError);
    CHECK_THROWS_AS(SummaryDataset(names("rs", 3), v, Matrix(2, 0), v, v, {}), InputError);
    CHECK_THROWS_AS(SummaryDataset(names("rs", 2), v, Matrix(2, 1), v, v, {}), InputError);
    Vector nan_v = v;
    nan_v[0] = std::nan("");
    CHECK_THROWS_AS(SummaryDataset(names("rs", 2), nan_v, Matrix(2, 0), v, v, {}), InputError);
    CHECK_THROWS_AS(SummaryDataset(names("rs", 2), v, Matrix::Zero(2, 2), v, v, {"A", "A"}), InputError);
}

TEST_CASE("subset_variants") {
    std::mt19937_64 rng(5);
    const auto d = random_dataset(rng, 10, 3);
    std::vector<Eigen::Index> first9(9), all(10);
    std::iota(first9.begin(), first9.end(), 0);
    std::iota(all.begin(), all.end(), 0);
    CHECK(subset_variants(d, first9).n_variants() == 9);
    CHECK(subset_variants(d, all) == d);
    CHECK_THROWS_AS(subset_variants(d, std::vector<Eigen::Index>{}), InputError);
    CHECK_THROWS_AS(subset_variants(d, std::vector<Eigen::Index>{0, 10}), InputError);
    CHECK_THROWS_AS(subset_variants(d, std::vector<Eigen::Index>{1, 1}), InputError);

    // Composition: A then B equals A[B].
    const std::vector<Eigen::Index> a{9, 2, 4, 7, 0}, b{3, 1, 4};
    std::vector<Eigen::Index> ab;
    for (auto i : b) ab.push_back(a[static_cast<std::size_t>(i)]);
    CHECK(subset_variants(subset_variants(d, a), b) == subset_variants(d, ab));
}

TEST_CASE("subset_covariates") {
    std::mt19937_64 rng(6);
    Vector bx = Vector::Ones(4), se = Vector::Ones(4);
    const SummaryDataset d(names("rs", 4), bx, Matrix::Random(4, 8), bx, se,
                           {"HDL", "LDL", "Tri", "SBP", "DBP", "BMI", "Glu", "eGFR"});
    const std::vector<std::string> pick{"BMI", "DBP"};
    const auto s = subset_covariates(d, pick);
    CHECK(s.n_covariates() == 2);
    CHECK(s.covariate_names() == std::vector<std::string>{"DBP", "BMI"});
    CHECK(s.beta_w().col(1) == d.beta_w().col(5));
    CHECK(subset_covariates(d, d.covariate_names()) == d);
    CHECK(subset_covariates(d, std::vector<std::string>{}).n_covariates() == 0);
    CHECK_THROWS_AS(subset_covariates(d, std::vector<std::string>{"CRP"}), InputError);
}

TEST_CASE("weights follow a joint permutation of variants") {
    std::mt19937_64 rng(8);
    const auto d = random_dataset(rng, 12, 2);
    std::vector<Eigen::Index> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto w = weights(d);
    const auto wp = weights(subset_variants(d, perm));
    for (Eigen::Index i = 0; i < 12; ++i) CHECK(wp[i] == w[perm[static_cast<std::size_t>(i)]]);
}

TEST_CASE("csv round trip is exact for awkward values") {
    Vector bx(3), by(3), se(3);
    bx << 0.1 + 0.2, 1e-300, -123456.789012345;
    by << 1.0 / 3.0, -2.0 / 7.0, 5e-17;
    se << 0.1, 3.14159265358979, 1e-8;
    Matrix bw(3, 1);
    bw << 1.0 / 9.0, 2e10, -0.0;
    const SummaryDataset d(names("rs", 3), bx, bw, by, se, {"X y"});
    std::ostringstream out;
    write_summary_csv(out, d);
    CHECK(read(out.str()) == d);
}
