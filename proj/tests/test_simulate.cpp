#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "mrpleio/error.hpp"
#include "mrpleio/simulate.hpp"

using namespace mrpleio;

namespace {

ScenarioConfig small(int p = 10, int k = 3) {
    ScenarioConfig cfg = preset_scenario(1);
    cfg.p = p;
    cfg.k = k;
    cfg.n = 2000;
    cfg.rng_seed = 21;
    return cfg;
}

std::string csv_of(const SimulationReport& r) {
    std::ostringstream out;
    write_report_csv(out, r);
    return out.str();
}

}  // namespace

TEST_CASE("preset scenarios") {
    const auto s1 = preset_scenario(1);
    CHECK(s1.p == 10);
    CHECK(s1.k == 8);
    CHECK(s1.beta_x_range.low == 0.15);
    CHECK(s1.beta_x_range.high == 0.3);
    CHECK(s1.beta_w_range.low == -0.2);
    CHECK(s1.beta_w_range.high == 0.4);
    CHECK(preset_scenario(2).k == 12);
    CHECK(preset_scenario(3).k == 70);
    const auto s4 = preset_scenario(4);
    CHECK(s4.p == 80);
    CHECK(s4.k == 90);
    CHECK(s4.beta_x_range.low == 0.05);
    CHECK(s4.beta_w_range.high == 0.12);
    CHECK(s4.n == 20000);
    CHECK(s4.maf == 0.3);
    CHECK(s4.gamma_w_value() == doctest::Approx(1.0 / 90.0));
    CHECK(s4.delta_range.low == -0.2);
    CHECK(s4.delta_range.high == 0.3);
    CHECK_THROWS_AS(preset_scenario(5), InputError);
    CHECK_THROWS_AS(preset_scenario(0), InputError);
}

TEST_CASE("scenario config files") {
    std::istringstream in(
        "# comment line\n"
        "scenario = 3   # start from a preset\n"
        "theta = 0\n"
        "n_pleiotropic = 21\n"
        "regime = variant_effects\n"
        "seed = 99\n"
        "gamma_w = 0.5\n");
    const auto cfg = parse_scenario_config(in, "cfg.txt");
    CHECK(cfg.p == 80);
    CHECK(cfg.k == 70);
    CHECK(cfg.theta == 0.0);
    CHECK(cfg.n_pleiotropic == 21);
    CHECK(cfg.regime == SparsityRegime::variant_effects);
    CHECK(cfg.rng_seed == 99);
    CHECK(cfg.gamma_w_value() == 0.5);

    std::ostringstream out;
    write_scenario_config(out, cfg);
    std::istringstream back(out.str());
    const auto again = parse_scenario_config(back);
    std::ostringstream out2;
    write_scenario_config(out2, again);
    CHECK(out.str() == out2.str());

    auto error_of = [](const std::string& text) {
        std::istringstream s(text);
        try {
            parse_scenario_config(s, "bad.txt");
        } catch (const InputError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(error_of("p = 10\nbogus = 1\n").find("bad.txt:2") != std::string::npos);
    CHECK(error_of("p = ten\n").find("bad.txt:1") != std::string::npos);
    CHECK(!error_of("p = 10\np = 11\n").empty());
    CHECK(!error_of("k = 3\nn_pleiotropic = 4\n").empty());
    CHECK(!error_of("just words\n").empty());
}

TEST_CASE("parameter draws follow the sparsity regime") {
    auto cfg = small(10, 6);
    cfg.n_pleiotropic = 2;
    const auto out = draw_parameters(cfg, 0);
    CHECK(out.pleiotropic == std::vector<std::string>{"W1", "W2"});
    CHECK(out.delta.head(2).cwiseAbs().minCoeff() > 0.0);
    CHECK(out.delta.tail(4).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.beta_w.cwiseAbs().minCoeff() > 0.0);
    CHECK((out.beta_x.array() >= 0.15).all());
    CHECK((out.beta_x.array() <= 0.3).all());

    cfg.regime = SparsityRegime::variant_effects;
    const auto var = draw_parameters(cfg, 0);
    CHECK(var.delta.cwiseAbs().minCoeff() > 0.0);
    CHECK(var.beta_w.leftCols(2).cwiseAbs().minCoeff() > 0.0);
    CHECK(var.beta_w.rightCols(4).cwiseAbs().maxCoeff() == 0.0);

    // With every covariate pleiotropic the two regimes are the same model.
    cfg.n_pleiotropic = 6;
    const auto a = draw_parameters(cfg, 3);
    cfg.regime = SparsityRegime::outcome_effects;
    const auto b = draw_parameters(cfg, 3);
    CHECK(a.beta_w == b.beta_w);
    CHECK(a.delta == b.delta);

    cfg.freeze_parameters = true;
    CHECK(draw_parameters(cfg, 1).beta_x == draw_parameters(cfg, 2).beta_x);
    cfg.freeze_parameters = false;
    CHECK(draw_parameters(cfg, 1).beta_x != draw_parameters(cfg, 2).beta_x);
}

TEST_CASE("replicates are reproducible and datasets are independent") {
    auto cfg = small();
    cfg.n_datasets = 3;
    const auto a = generate_replicate(cfg, 4), b = generate_replicate(cfg, 4);
    CHECK(a.analysis == b.analysis);
    REQUIRE(a.selection);
    CHECK(*a.selection == *b.selection);
    CHECK(a.selection->beta_x() != a.analysis.beta_x());
    CHECK(a.selection->variant_ids() == a.analysis.variant_ids());
    CHECK(a.selection->covariate_names() == a.analysis.covariate_names());
    CHECK(!(generate_replicate(cfg, 5).analysis == a.analysis));
    cfg.n_datasets = 2;
    const auto c = generate_replicate(cfg, 4);
    CHECK(!c.selection);
    CHECK(c.analysis == a.analysis);
    CHECK(a.r2_x > 0.0);
    CHECK(a.r2_x < 1.0);
}

TEST_CASE("variance explained by the variants") {
    for (int id : {1, 3}) {
        auto cfg = preset_scenario(id);
        cfg.rng_seed = 2;
        double total = 0.0;
        const int reps = 20;
        for (int r = 0; r < reps; ++r) total += generate_replicate(cfg, static_cast<std::uint64_t>(r)).r2_x;
        const double target = id == 1 ? 0.100 : 0.117;
        CHECK(std::abs(total / reps - target) < 0.015);
    }
}

TEST_CASE("study method lists") {
    CHECK(parse_study_methods("ivw,post_reg,oracle").size() == 3);
    CHECK_THROWS_AS(parse_study_methods("ivw,ivw"), InputError);
    CHECK_THROWS_AS(parse_study_methods(""), InputError);
    CHECK_THROWS_AS(parse_study_methods("ivw,magic"), InputError);
    CHECK(default_methods(preset_scenario(1)).size() == 5);
    CHECK(default_methods(preset_scenario(2)).size() == 4);
    for (auto m : {StudyMethod::ivw, StudyMethod::reg, StudyMethod::post_reg, StudyMethod::mv_all, StudyMethod::oracle,
                   StudyMethod::two_sample_a, StudyMethod::two_sample_b, StudyMethod::three_sample_a,
                   StudyMethod::three_sample_b, StudyMethod::double_est})
        CHECK(parse_study_method(to_string(m)) == m);
}

TEST_CASE("run_study rejects incompatible requests") {
    auto cfg = small(10, 9);
    CHECK_THROWS_AS(run_study(cfg, {StudyMethod::mv_all}, 2), InputError);
    CHECK_THROWS_AS(run_study(cfg, {StudyMethod::three_sample_a}, 2), InputError);
    CHECK_THROWS_AS(run_study(cfg, {StudyMethod::ivw}, 0), InputError);
    CHECK_THROWS_AS(run_study(cfg, {}, 2), InputError);
    cfg.k = 0;
    cfg.n_pleiotropic = 0;
    CHECK_THROWS_AS(run_study(cfg, {StudyMethod::reg}, 2), InputError);
}

TEST_CASE("reports do not depend on the thread count") {
    auto cfg = small(12, 4);
    cfg.n_datasets = 3;
    const std::vector<StudyMethod> methods{StudyMethod::ivw,           StudyMethod::reg,
                                           StudyMethod::post_reg,      StudyMethod::mv_all,
                                           StudyMethod::oracle,        StudyMethod::two_sample_a,
                                           StudyMethod::three_sample_a, StudyMethod::double_est};
    StudyOptions one, many;
    many.threads = 4;
    const auto a = run_study(cfg, methods, 12, one);
    const auto b = run_study(cfg, methods, 12, many);
    CHECK(csv_of(a) == csv_of(b));
    CHECK(a.max_kkt_violation == b.max_kkt_violation);
    CHECK(a.max_kkt_violation <= 1e-6);
    CHECK(a.zero_at_lambda_max);
}

TEST_CASE("report aggregates") {
    auto cfg = small(12, 4);
    const auto rep = run_study(cfg, {StudyMethod::ivw, StudyMethod::reg, StudyMethod::oracle}, 10);
    const auto text = csv_of(rep);
    CHECK(text.rfind("method,reps_ok,reps_failed,mean,sd,mean_se,coverage,power,mse,mean_selected\n", 0) == 0);
    for (const auto& row : rep.rows) {
        CHECK(row.reps_ok + row.reps_failed == 10);
        CHECK(row.sd >= 0.0);
        if (row.coverage) {
            CHECK(*row.coverage >= 0.0);
            CHECK(*row.coverage <= 1.0);
            CHECK(*row.power >= 0.0);
            CHECK(*row.power <= 1.0);
        }
    }
    CHECK(!rep.rows[1].coverage);  // the shrunken estimator carries no interval
    CHECK(text.find("\nreg,10,0,") != std::string::npos);
}

TEST_CASE("null model: ivw is unbiased without pleiotropy") {
    auto cfg = preset_scenario(1);
    cfg.theta = 0.0;
    cfg.n_pleiotropic = 0;
    cfg.beta_w_range = {0.0, 0.0};
    cfg.rng_seed = 31;
    const auto rep = run_study(cfg, {StudyMethod::ivw, StudyMethod::oracle}, 1000);
    CHECK(std::abs(rep.rows[0].mean) < 0.01);
    // Oracle with an empty true set is IVW; nominal coverage within the
    // binomial band.
    CHECK(*rep.rows[1].coverage >= 0.93);
    CHECK(*rep.rows[1].coverage <= 0.97);
}

TEST_CASE("doubling the sample size shrinks the oracle standard error by about root two") {
    auto cfg = preset_scenario(1);
    cfg.rng_seed = 41;
    const auto base = run_study(cfg, {StudyMethod::oracle}, 500);
    cfg.n *= 2;
    const auto doubled = run_study(cfg, {StudyMethod::oracle}, 500);
    const double ratio = *doubled.rows[0].mean_se / *base.rows[0].mean_se;
    CHECK(ratio >= 0.6);
    CHECK(ratio <= 0.8);
}
