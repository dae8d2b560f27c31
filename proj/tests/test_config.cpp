#include "config.hpp"

#include <doctest.h>

using namespace bmfg;
using namespace bmfg::cli;

namespace {

const std::filesystem::path data = BMFG_TEST_DATA;

RunConfig parse(const char* text) { return parse_config(Json::parse(text)); }

} // namespace

TEST_CASE("defaults reproduce the reference example")
{
    const auto cfg = parse("{}");
    CHECK(cfg.n == 4000);
    CHECK(cfg.cost.gamma == 0.5);
    CHECK(cfg.cost.beta == 0.9);
    CHECK(cfg.cost.cost(0.5, 0.3) == doctest::Approx(0.5 * 0.5));
    CHECK(cfg.kernel.is_uniform());
    REQUIRE(cfg.linear_c);
    CHECK(*cfg.linear_c == 0.2);
    CHECK(cfg.tol.bellman == 1e-8);
    CHECK(cfg.seed == 1);
    CHECK(cfg.write_csv);
}

TEST_CASE("full file")
{
    const auto cfg = load_config(data / "gap_power.json");
    CHECK(cfg.kernel.name().find("power") != std::string::npos);
    CHECK(cfg.cost.beta == 0.85);
    CHECK(cfg.cost.cost(0.5, 0.1) == doctest::Approx(0.25 * 0.4));
    CHECK_FALSE(cfg.linear_c);
    CHECK(cfg.n == 500);
    CHECK(cfg.tol.bellman == 1e-9);
    CHECK(cfg.simulate.agents == 200);
    REQUIRE(cfg.simulate.policy);
    CHECK(cfg.simulate.policy->value() == 0.4);
    CHECK(cfg.out_dir == data / "out");
    CHECK_FALSE(cfg.write_csv);
    CHECK(cfg.seed == 7);
    CHECK(cfg.threads == 2);
    CHECK(cfg.model().grid().n() == 500);
}

TEST_CASE("tabulated cost component resolves against the file directory")
{
    const auto cfg = load_config(data / "tabulated_cost.json");
    CHECK(cfg.cost.r1(0.25) == doctest::Approx(0.2));
    CHECK_FALSE(cfg.linear_c);
}

TEST_CASE("identity components keep the closed forms available")
{
    const auto cfg = parse(R"({"model": {"c": 0.3, "r1": {"family": "linear"}, "r2": {"offset": 0.3}}})");
    REQUIRE(cfg.linear_c);
    CHECK(*cfg.linear_c == 0.3);
}

TEST_CASE("diagnostics name the field")
{
    CHECK_THROWS_WITH_AS(load_config(data / "bad_key.json"), "model.gama: unknown key", ConfigError);
    CHECK_THROWS_WITH_AS(load_config(data / "syntax_error.json"), doctest::Contains("syntax_error.json:5"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(load_config(data / "missing.json"), doctest::Contains("cannot open"), ConfigError);

    CHECK_THROWS_WITH_AS(parse(R"({"model": {"beta": 1.5}})"), doctest::Contains("model.beta"), ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"model": {"gamma": "high"}})"), "model.gamma: expected a number", ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"model": {"kernel": {"type": "cauchy"}}})"), doctest::Contains("model.kernel.type"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"model": {"kernel": {"type": "gap", "exponent": 0.5}}})"),
                         doctest::Contains("model.kernel.exponent"), ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"model": {"r1": {"family": "power", "k": -1}}})"), doctest::Contains("model.r1.k"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"numerics": {"n": 1}})"), doctest::Contains("numerics.n"), ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"numerics": {"n": 10.5}})"), "numerics.n: expected an integer", ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"command": {"simulate": {"horizon": 10, "burn_in": 10}}})"),
                         doctest::Contains("command.simulate.horizon"), ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"command": {"simulate": {"policy": 1.5}}})"),
                         doctest::Contains("command.simulate.policy"), ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"command": {"curve": {"thetas": [0.2, 1.0]}}})"),
                         doctest::Contains("command.curve.thetas[1]"), ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"output": {"formats": ["xml"]}})"), doctest::Contains("output.formats"), ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"seed": -3})"), doctest::Contains("seed"), ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"model": {"kernel": {"type": "tabulated"}}})"),
                         doctest::Contains("model.kernel.density_csv"), ConfigError);
    // cost ordering is checked after parsing
    CHECK_THROWS_WITH_AS(parse(R"({"model": {"r2": {"slope": -1, "offset": 2}}})"), doctest::Contains("model:"),
                         ConfigError);
    CHECK_THROWS_AS(parse("[1, 2]"), ConfigError);
}

TEST_CASE("policy keywords")
{
    CHECK(*parse(R"({"command": {"simulate": {"policy": "above_one"}}})").simulate.policy == Threshold::above_one());
    CHECK(*parse(R"({"command": {"simulate": {"policy": "zero"}}})").simulate.policy == Threshold::zero());
    CHECK_FALSE(parse(R"({"command": {"simulate": {"policy": "equilibrium"}}})").simulate.policy);
    CHECK(parse(R"({"command": {"simulate": {"initial_law": "stationary"}}})").simulate.initial_law ==
          InitialLaw::custom);
    CHECK(parse(R"({"command": {"sensitivity": {"z_prime": "finite_difference"}}})").sensitivity.z_prime ==
          MeanDerivative::finite_difference);
}
