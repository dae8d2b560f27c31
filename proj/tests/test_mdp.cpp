#include "bmfg/mdp.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace bmfg;

namespace {

constexpr double c = 0.2;
constexpr double beta = 0.9;

struct Fixture {
    Grid grid{1000};
    Discretization disc{TransitionKernel::uniform(), grid};
    SolverOptions opts{1e-9};
};

// V_beta(0) for R = x (c + z) under the uniform kernel
double uncontrolled_v0(double z) { return beta * (c + z) / ((1 - beta) * (2 - beta)); }

bool strictly_increasing(std::span<const double> v)
{
    for (std::size_t j = 1; j < v.size(); ++j)
        if (!(v[j] > v[j - 1]))
            return false;
    return true;
}

} // namespace

TEST_CASE("cost model validation")
{
    const Grid g(100);
    CHECK_NOTHROW(CostModel::linear(c, 0.5, beta).validate(g));
    CHECK_THROWS_WITH_AS(CostModel::linear(c, 0.5, 1.0).validate(g), doctest::Contains("beta"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(CostModel::linear(c, 0.0, beta).validate(g), doctest::Contains("gamma"), std::invalid_argument);
    CHECK_THROWS_AS(CostModel::product(CostComponent::constant(1.0), CostComponent::linear(1.0, c), 0.5, beta).validate(g),
                    std::invalid_argument);
    CHECK_THROWS_AS(CostModel::product(CostComponent::linear(), CostComponent::constant(1.0), 0.5, beta).validate(g),
                    std::invalid_argument);
    CHECK_THROWS_AS(CostModel::product(CostComponent::linear(), CostComponent::linear(1.0, -0.5), 0.5, beta).validate(g),
                    std::invalid_argument);
    const auto joint = CostModel::general([](double x, double z) { return x * x + x * z; }, 0.5, beta);
    CHECK_NOTHROW(joint.validate(g));
    const auto decreasing = CostModel::general([](double x, double z) { return x - z; }, 0.5, beta);
    CHECK_THROWS_AS(decreasing.validate(g), std::invalid_argument);
}

TEST_CASE("threshold tags")
{
    CHECK(Threshold::from_value(0.0) == Threshold::zero());
    CHECK(Threshold::from_value(1.0) == Threshold::one());
    CHECK(Threshold::from_value(1.5) == Threshold::above_one());
    CHECK(Threshold::from_value(0.3).is_interior());
    CHECK_THROWS_AS(Threshold::interior(1.0), std::invalid_argument);
    CHECK(std::isinf(Threshold::above_one().numeric()));
    CHECK(Threshold::one().acts_at(1.0));
    CHECK_FALSE(Threshold::one().acts_at(0.999));
    CHECK_FALSE(Threshold::above_one().acts_at(1.0));
    CHECK(Threshold::zero().acts_at(0.0));
    for (const auto& t : {Threshold::zero(), Threshold::interior(0.25), Threshold::one(), Threshold::above_one()})
        CHECK(Threshold::from_tag(t.tag(), t.value()) == t);
    CHECK_THROWS_AS(Threshold::from_tag("sometimes", 0.5), std::invalid_argument);
}

TEST_CASE("bellman operator")
{
    Fixture f;
    const double z = 0.3;
    const auto model = CostModel::linear(c, 0.5, beta);

    SUBCASE("first step from zero is the running cost")
    {
        const auto zero = GridFunction::sample(f.grid, [](double) { return 0.0; });
        const auto out = bellman_operator(zero, model, f.disc, z);
        for (int j = 0; j < f.grid.size(); ++j)
            REQUIRE(out[j] == doctest::Approx(f.grid.node(j) * (c + z)).epsilon(1e-14));
    }

    SUBCASE("beta contraction on random pairs")
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> a(f.grid.size()), b(f.grid.size());
            for (auto& x : a)
                x = u(rng);
            for (auto& x : b)
                x = u(rng);
            const GridFunction ga(f.grid, a), gb(f.grid, b);
            const auto la = bellman_operator(ga, model, f.disc, z);
            const auto lb = bellman_operator(gb, model, f.disc, z);
            REQUIRE(sup_distance(la.values(), lb.values()) <= beta * sup_distance(a, b) + 1e-12);
        }
    }

    SUBCASE("increasing input gives increasing output")
    {
        const auto g = GridFunction::sample(f.grid, [](double x) { return std::sqrt(x) + 3 * x * x; });
        CHECK(strictly_increasing(bellman_operator(g, model, f.disc, z).values()));
    }

    SUBCASE("policy operator with the optimal threshold reproduces the fixed point")
    {
        const auto vf = solve_value_function(model, f.disc, z, f.opts);
        const auto theta = extract_threshold(vf, f.opts);
        REQUIRE(theta.is_interior());
        const auto tv = policy_operator(vf.v, model, f.disc, z, theta);
        // nodes next to theta may pick the other action within the Bellman tolerance
        CHECK(sup_distance(tv.values(), vf.v.values()) < 1e-3);
        const auto never = policy_operator(vf.v, model, f.disc, z, Threshold::above_one());
        const auto always = policy_operator(vf.v, model, f.disc, z, Threshold::zero());
        for (int j = 0; j < f.grid.size(); ++j) {
            REQUIRE(vf.v[j] <= never[j] + 1e-8);
            REQUIRE(vf.v[j] <= always[j] + 1e-8);
        }
    }
}

TEST_CASE("value iteration: linear-cost closed forms")
{
    Fixture f;
    for (double z : {0.0, 0.345854, 0.8}) {
        const double above = 2 * beta * (c + z) / (2 - beta);
        const auto model = CostModel::linear(c, above + 0.05, beta);
        const auto vf = solve_value_function(model, f.disc, z, f.opts);
        CHECK(vf.residual <= f.opts.tol);
        CHECK(vf.v[0] == doctest::Approx(uncontrolled_v0(z)).epsilon(1e-6));
        CHECK(extract_threshold(vf, f.opts) == Threshold::above_one());

        const auto V = solve_uncontrolled_value(model, f.disc, z, f.opts);
        CHECK(V[0] == doctest::Approx(uncontrolled_v0(z)).epsilon(1e-6));
        CHECK(V(1.0 - 1e-9) == doctest::Approx((c + z) / (1 - beta)).epsilon(1e-6));
        CHECK(strictly_increasing(V.values()));
    }
}

TEST_CASE("value iteration: always act below the lower gamma bound")
{
    Fixture f;
    const double z = 0.4;
    const double gamma = beta * (c + z) / 2 - 0.02;
    const auto vf = solve_value_function(CostModel::linear(c, gamma, beta), f.disc, z, f.opts);
    CHECK(vf.v[0] == doctest::Approx(gamma / (1 - beta)).epsilon(1e-7));
    CHECK(extract_threshold(vf, f.opts) == Threshold::zero());
}

TEST_CASE("value iteration: reference example inputs")
{
    const Grid grid(4000);
    const Discretization disc(TransitionKernel::uniform(), grid);
    const SolverOptions opts{1e-8};
    const auto vf = solve_value_function(CostModel::linear(c, 0.5, beta), disc, 0.345854, opts);
    CHECK(std::abs(vf.v[0] - 3.497854) < 1e-3);
    const auto theta = extract_threshold(vf, opts);
    REQUIRE(theta.is_interior());
    CHECK(std::abs(theta.value() - 0.485162) < 2e-3);
    CHECK(strictly_increasing(vf.v.values()));
    CHECK(strictly_increasing(vf.G.values()));
}

TEST_CASE("value iteration is independent of the starting point")
{
    Fixture f;
    const auto model = CostModel::linear(c, 0.5, beta);
    const auto a = solve_value_function(model, f.disc, 0.3, f.opts);
    const auto ten = GridFunction::sample(f.grid, [](double) { return 10.0; });
    const auto b = solve_value_function(model, f.disc, 0.3, f.opts, &ten);
    CHECK(sup_distance(a.v.values(), b.v.values()) <= 2 * f.opts.tol);
}

TEST_CASE("value iteration cap")
{
    Fixture f;
    SolverOptions tight{1e-12, 5};
    CHECK_THROWS_WITH_AS(solve_value_function(CostModel::linear(c, 0.5, beta), f.disc, 0.3, tight),
                         doctest::Contains("iteration cap exceeded"), SolverError);
}

TEST_CASE("zero running cost gives zero uncontrolled value")
{
    Fixture f;
    const auto zero = CostModel::general([](double, double) { return 0.0; }, 0.5, beta);
    const auto V = solve_uncontrolled_value(zero, f.disc, 0.5, f.opts);
    for (double v : V.values())
        REQUIRE(v == 0.0);
}

TEST_CASE("gamma bounds: linear cost")
{
    Fixture f;
    for (double z : {0.1, 0.345854, 0.9}) {
        const auto b = gamma_bounds(CostModel::linear(c, 0.5, beta), f.disc, z, f.opts);
        CHECK(b.gamma_zero == doctest::Approx(beta * (c + z) / 2).epsilon(1e-9));
        CHECK(b.gamma_above_one == doctest::Approx(2 * beta * (c + z) / (2 - beta)).epsilon(1e-6));

        for (double side : {-1.0, 1.0}) {
            const double g0 = b.gamma_zero + side * 1e-3;
            const auto t0 = extract_threshold(solve_value_function(CostModel::linear(c, g0, beta), f.disc, z, f.opts), f.opts);
            CHECK((side < 0 ? t0 == Threshold::zero() : t0.is_interior()));

            const double g1 = b.gamma_above_one + side * 1e-3;
            const auto t1 = extract_threshold(solve_value_function(CostModel::linear(c, g1, beta), f.disc, z, f.opts), f.opts);
            CHECK((side > 0 ? t1 == Threshold::above_one() : t1.is_interior()));
        }
    }
}

TEST_CASE("gamma bounds: general joint cost")
{
    Fixture f;
    const auto model = CostModel::general([](double x, double z) { return x * x * (1 + z) + 0.1 * x; }, 0.5, beta);
    const double z = 0.4;
    const auto b = gamma_bounds(model, f.disc, z, f.opts);
    // int (y^2 (1+z) + 0.1 y) dy under Q0(.|0)
    CHECK(b.gamma_zero == doctest::Approx(beta * ((1 + z) / 3 + 0.05)).epsilon(1e-6));
    CHECK(b.gamma_above_one > b.gamma_zero);
}

TEST_CASE("threshold is nondecreasing in the effort cost")
{
    Fixture f;
    const double z = 0.35;
    double prev = -1.0;
    bool prev_interior = false;
    for (double gamma = 0.05; gamma < 1.3; gamma += 0.05) {
        const auto vf = solve_value_function(CostModel::linear(c, gamma, beta), f.disc, z, f.opts);
        const auto t = extract_threshold(vf, f.opts);
        const double x = t.numeric();
        if (prev_interior && t.is_interior())
            CHECK(x > prev);
        else
            CHECK(x >= prev);
        prev = x;
        prev_interior = t.is_interior();
    }
}

TEST_CASE("prior estimate sandwich")
{
    Fixture f;
    const double z = 0.345854;
    const auto model = CostModel::product(CostComponent::power(1.5), CostComponent::linear(1.0, c), 0.4, beta);
    const auto vf = solve_value_function(model, f.disc, z, f.opts);
    const double r0 = model.cost(0.0, z), r1 = model.cost(1.0, z);
    for (int j = 0; j < f.grid.size(); ++j) {
        const double x = f.grid.node(j), r = model.cost(x, z);
        REQUIRE(vf.v[j] >= r + beta * r0 / (1 - beta) - 1e-8);
        REQUIRE(vf.v[j] <= std::min(r1 / (1 - beta), r + (model.gamma + beta * r0) / (1 - beta)) + 1e-8);
    }
}

TEST_CASE("cost sweep")
{
    Fixture f;
    const auto r1 = CostComponent::linear();
    const double rho = 0.9;

    SUBCASE("analytic saturation bounds")
    {
        const double never = rho * 1.0 / (1 - rho) * 1.01;
        const double always = rho * (1 - rho) * 0.5 * 0.99;
        const auto curve = threshold_cost_curve(r1, f.disc, rho, {always, never}, f.opts);
        CHECK(curve.points[0].theta == Threshold::zero());
        CHECK(curve.points[1].theta == Threshold::above_one());
        CHECK(curve.r_lower >= always);
        CHECK(curve.r_upper <= never);
    }

    SUBCASE("uniform kernel, R1(x) = x: endpoints match the regime bounds")
    {
        const auto curve = threshold_cost_curve(r1, f.disc, rho, {0.5}, f.opts);
        CHECK(curve.r_lower == doctest::Approx(rho / 2).epsilon(1e-6));
        CHECK(curve.r_upper == doctest::Approx(2 * rho / (2 - rho)).epsilon(1e-5));
    }

    SUBCASE("strictly increasing on a 50-point ladder")
    {
        const auto probe = threshold_cost_curve(r1, f.disc, rho, {1.0}, f.opts);
        const auto ladder = cost_ladder(probe.r_lower, probe.r_upper, 50);
        REQUIRE(ladder.size() == 50);
        const auto curve = threshold_cost_curve(r1, f.disc, rho, ladder, f.opts);
        CHECK(curve.points.front().theta.numeric() <= 0.02);
        CHECK(curve.points.back().theta.numeric() >= 0.98);
        for (std::size_t i = 1; i < curve.points.size(); ++i)
            REQUIRE(curve.points[i].theta.numeric() > curve.points[i - 1].theta.numeric());
    }

    CHECK_THROWS_AS(threshold_cost_curve(r1, f.disc, 1.0, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(threshold_cost_curve(r1, f.disc, rho, {0.5, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(cost_ladder(0.1, 0.2, 1), std::invalid_argument);
}
