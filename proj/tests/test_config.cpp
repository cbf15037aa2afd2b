#include <doctest.h>

#include "lorenz_shadow/errors.hpp"
#include "lorenz_shadow/io.hpp"
#include "lorenz_shadow/pseudo_orbit.hpp"

using namespace lorenz_shadow;

TEST_CASE("flat key-value parsing") {
    SUBCASE("comments, blanks and spacing") {
        const auto kv = parse_key_value_text("# header\n\n kappa = 0.5  # inline\nK=4\n");
        CHECK(kv.at("kappa") == "0.5");
        CHECK(kv.at("K") == "4");
    }
    SUBCASE("missing equals sign") {
        CHECK_THROWS_AS(parse_key_value_text("kappa 0.5\n"), ConfigError);
    }
    SUBCASE("duplicate keys") {
        CHECK_THROWS_AS(parse_key_value_text("K = 1\nK = 2\n"), ConfigError);
    }
}

TEST_CASE("experiment config") {
    SUBCASE("defaults with strict unknown-key rejection") {
        CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("speed = 9\n"),
                             "config error: unknown key 'speed'", ConfigError);
    }
    SUBCASE("missing gamma is auto-chosen") {
        const auto cfg = ExperimentConfig::from_text("case = C\nK = 4\n");
        CHECK(cfg.gamma_defaulted);
        CHECK(cfg.model.gamma == doctest::Approx(0.003).epsilon(1e-12));
        CHECK(cfg.K == 4);
    }
    SUBCASE("explicit gamma is kept") {
        const auto cfg = ExperimentConfig::from_text("gamma = 0.002\n");
        CHECK(!cfg.gamma_defaulted);
        CHECK(cfg.model.gamma == 0.002);
    }
    SUBCASE("unparsable numbers carry the key name") {
        CHECK_THROWS_AS(ExperimentConfig::from_text("kappa = fast\n"), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::from_text("budget = many\n"), ConfigError);
    }
    SUBCASE("case mismatch with explicit coefficients is a config error") {
        const auto cfg = ExperimentConfig::from_text("case = A\nc_plus = 1.63\n");
        CHECK_THROWS_AS(cfg.model.require_valid(), ConfigError);
    }
    SUBCASE("round trip through text") {
        const auto cfg = ExperimentConfig::from_text("case = B\nseed = 7\nbudget = 11\n");
        const auto back = ExperimentConfig::from_text(cfg.to_text());
        CHECK(back.model.c_minus == cfg.model.c_minus);
        CHECK(back.seed == 7);
        CHECK(back.budget == 11);
        CHECK(back.model.flow_case == Case::B);
    }
    SUBCASE("bounds on the harness knobs") {
        CHECK_THROWS_AS(ExperimentConfig::from_text("K = 0\n"), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::from_text("K = 2\nn_max = 40\n"), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::from_text("budget = -1\n"), ConfigError);
    }
}

TEST_CASE("doubles format deterministically and round-trip") {
    for (double v : {0.003, 1.0 / 3.0, 6.489e-05, 11.95703125, -0.46920379872721767}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
        CHECK(format_double(v) == s);
    }
}
