#include "bmfg/sensitivity.hpp"

#include <doctest.h>

#include <cmath>

using namespace bmfg;

namespace {

constexpr double c = 0.2;
constexpr double gamma_bar = 0.5;
constexpr double beta = 0.9;

// exact reference equilibrium and its gamma-derivatives, frozen from
// central differences of the closed-form equilibrium (step 1e-5)
constexpr double v0_exact = 3.497853996;
constexpr double theta_exact = 0.485162022;
constexpr double z_exact = 0.345854189;
constexpr double w0_exact = 4.563647;
constexpr double theta_gamma_exact = 1.163497;
constexpr double z_gamma_exact = 0.336564;

struct Solved {
    GameModel model;
    EquilibriumSolution eq;
    SensitivityResult sens;
};

const Solved& example2()
{
    static const Solved s = [] {
        GameModel m(TransitionKernel::uniform(), CostModel::linear(c, gamma_bar, beta), Grid(4000));
        auto eq = solve_equilibrium(m);
        auto sens = solve_sensitivities(m, eq);
        return Solved{m, std::move(eq), std::move(sens)};
    }();
    return s;
}

} // namespace

TEST_CASE("branch function")
{
    const BranchFunction f(0.5, PiecewiseLinear({0.0, 0.5}, {0.0, 1.0}), PiecewiseLinear({0.5, 1.0}, {3.0, 4.0}));
    CHECK(f(0.25) == doctest::Approx(0.5));
    CHECK(f(0.5) == 1.0);
    CHECK(f(0.75) == doctest::Approx(3.5));
    CHECK(f.jump() == 2.0);
    CHECK_THROWS_AS(BranchFunction(0.5, PiecewiseLinear(), PiecewiseLinear({0.5}, {1.0})), std::invalid_argument);
}

TEST_CASE("closed-form equilibrium")
{
    const auto e = solve_uniform_equilibrium_closed_form(c, gamma_bar, beta);
    CHECK(std::abs(e.v0 - 3.497854) < 1e-5);
    CHECK(std::abs(e.theta - 0.485162) < 1e-5);
    CHECK(std::abs(e.z - 0.345854) < 1e-5);
    CHECK(e.v0 == doctest::Approx(v0_exact).epsilon(1e-9));
    CHECK(e.theta == doctest::Approx(theta_exact).epsilon(1e-9));
    CHECK(e.z == doctest::Approx(z_exact).epsilon(1e-9));
    CHECK(std::pow(1 - e.theta, beta - 1) - beta > 0.0);
    CHECK(e.z == doctest::Approx(closed_form_uniform_stationary(e.theta).z).epsilon(1e-12));

    CHECK_THROWS_AS(solve_uniform_equilibrium_closed_form(c, gamma_bar, 1.0), std::invalid_argument);
    CHECK_THROWS_WITH_AS(solve_uniform_equilibrium_closed_form(c, 50.0, beta), doctest::Contains("no interior root"),
                         SolverError);
}

TEST_CASE("closed-form sensitivities")
{
    const auto e = solve_uniform_equilibrium_closed_form(c, gamma_bar, beta);
    const auto s = solve_uniform_sensitivity_closed_form(e, gamma_bar, beta, c);
    CHECK(s.theta_gamma > 0.0);
    CHECK(s.z_gamma > 0.0);
    CHECK(s.w0 == doctest::Approx(w0_exact).epsilon(1e-6));
    CHECK(s.theta_gamma == doctest::Approx(theta_gamma_exact).epsilon(1e-6));
    CHECK(s.z_gamma == doctest::Approx(z_gamma_exact).epsilon(1e-6));

    // independent oracle: differentiate the closed-form equilibrium in gamma
    const double h = 1e-5;
    const auto p = solve_uniform_equilibrium_closed_form(c, gamma_bar + h, beta);
    const auto m = solve_uniform_equilibrium_closed_form(c, gamma_bar - h, beta);
    CHECK(s.w0 == doctest::Approx((p.v0 - m.v0) / (2 * h)).epsilon(1e-6));
    CHECK(s.theta_gamma == doctest::Approx((p.theta - m.theta) / (2 * h)).epsilon(1e-6));
    CHECK(s.z_gamma == doctest::Approx((p.z - m.z) / (2 * h)).epsilon(1e-6));

    // the coupling z_gamma = z'(theta) theta_gamma
    CHECK(s.z_gamma == doctest::Approx(closed_form_uniform_stationary(e.theta).mean_derivative() * s.theta_gamma)
                           .epsilon(1e-9));

    // a second parameter set, same oracle
    const auto e2 = solve_uniform_equilibrium_closed_form(0.5, 0.8, 0.8);
    const auto s2 = solve_uniform_sensitivity_closed_form(e2, 0.8, 0.8, 0.5);
    const auto p2 = solve_uniform_equilibrium_closed_form(0.5, 0.8 + h, 0.8);
    const auto m2 = solve_uniform_equilibrium_closed_form(0.5, 0.8 - h, 0.8);
    CHECK(s2.theta_gamma == doctest::Approx((p2.theta - m2.theta) / (2 * h)).epsilon(1e-6));
    CHECK(s2.w0 == doctest::Approx((p2.v0 - m2.v0) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("w equation: zero forcing and superposition")
{
    const auto& s = example2();
    const double th = s.eq.theta.value();

    const auto zero = solve_w_equation(s.model, th, s.eq.z, 0.0, 0.0);
    for (double x : {0.0, 0.2, th, 0.7, 1.0})
        CHECK(zero.w(x) == 0.0);

    const auto a = solve_w_equation(s.model, th, s.eq.z, 0.0, 1.0);
    const auto b = solve_w_equation(s.model, th, s.eq.z, 1.0, 0.0);
    for (double lambda : {0.5, 2.0}) {
        const auto w = solve_w_equation(s.model, th, s.eq.z, lambda, 1.0);
        for (double x : {0.0, 0.1, 0.3, th, 0.6, 0.9, 1.0})
            CHECK(std::abs(w.w(x) - (a.w(x) + lambda * b.w(x))) < 1e-7);
    }

    // Banach modulus
    REQUIRE(a.update_norms.size() > 2);
    for (std::size_t i = 1; i < a.update_norms.size(); ++i)
        REQUIRE(a.update_norms[i] <= beta * a.update_norms[i - 1] * (1 + 1e-9) + 1e-15);
    CHECK(a.iterations == static_cast<int>(a.update_norms.size()));

    CHECK_THROWS_AS(solve_w_equation(s.model, 1.0, s.eq.z, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("reference sensitivities on the grid")
{
    const auto& s = example2();
    const auto& r = s.sens;
    CHECK(r.method == SensitivityMethod::uniform_closed_form);
    CHECK_FALSE(r.truncated);

    // printed reference digits
    CHECK(std::abs(r.w0 - 4.563055) < 1e-2);
    CHECK(std::abs(r.theta_gamma - 1.162861) < 1e-2);
    CHECK(std::abs(r.z_gamma - 0.336380) < 1e-2);
    // exact values
    CHECK(std::abs(r.w0 - w0_exact) < 1e-4);
    CHECK(std::abs(r.theta_gamma - theta_gamma_exact) < 1e-4);
    CHECK(std::abs(r.z_gamma - z_gamma_exact) < 1e-4);
    CHECK(r.theta_gamma > 0.0);
    CHECK(r.z_gamma > 0.0);
    CHECK(r.w0 == r.w(0.0));

    // the upper branch identity holds by construction
    const double s2 = s.model.cost().r2.derivative(s.eq.z);
    for (double x : r.w.upper().x())
        if (x > r.w.theta())
            REQUIRE(std::abs(r.w(x) - beta * r.w0 - x * s2 * r.z_gamma - 1.0) < 1e-12);

    // discontinuity at the threshold
    CHECK(std::abs(r.w.jump()) > 10 * s.model.grid().h());

    // w = w_a + z_gamma w_b
    const auto basis = solve_w_basis(s.model, s.eq);
    for (double x : {0.0, 0.25, 0.6, 0.95})
        CHECK(std::abs(r.w(x) - (basis.a.w(x) + r.z_gamma * basis.b.w(x))) < 1e-7);
}

TEST_CASE("mean-derivative routes agree")
{
    const auto& s = example2();
    const auto fd = solve_sensitivities(s.model, s.eq, MeanDerivative::finite_difference);
    CHECK(fd.method == SensitivityMethod::finite_difference);
    CHECK(std::abs(fd.z_prime - s.sens.z_prime) < 1e-3);
    CHECK(std::abs(fd.theta_gamma - s.sens.theta_gamma) < 1e-3);

    const GameModel gap(TransitionKernel::multiplicative_gap(GapDensity::power(2.0)), CostModel::linear(c, 0.5, beta),
                        Grid(500));
    const auto eq = solve_equilibrium(gap);
    CHECK_THROWS_AS(solve_sensitivities(gap, eq, MeanDerivative::closed_form), std::invalid_argument);
    CHECK(solve_sensitivities(gap, eq).method == SensitivityMethod::general_kernel);
}

TEST_CASE("finite-difference consistency")
{
    const auto& s = example2();
    const auto fd = finite_difference_check(s.model, s.eq, 1e-3, &s.sens);
    CHECK(fd.theta_gamma_rel_error < 1e-2);
    CHECK(fd.z_gamma_rel_error < 1e-2);
    REQUIRE(fd.w_probes.size() == 2);
    for (const auto& p : fd.w_probes)
        CHECK(p.rel_error < 2e-2);
    CHECK(fd.theta_plus > fd.theta_minus);
    CHECK(fd.z_plus > fd.z_minus);
    CHECK_THROWS_AS(finite_difference_check(s.model, s.eq, 0.0), std::invalid_argument);
    CHECK_THROWS_WITH_AS(finite_difference_check(s.model, s.eq, 0.45), doctest::Contains("non-interior"),
                         SolverError);
}

TEST_CASE("central differences are second order until grid bias")
{
    const auto& s = example2();
    const auto big = finite_difference_check(s.model, s.eq, 4e-2, &s.sens);
    const auto small = finite_difference_check(s.model, s.eq, 2e-2, &s.sens);
    CHECK(small.theta_gamma_rel_error < big.theta_gamma_rel_error);
    CHECK(small.z_gamma_rel_error < big.z_gamma_rel_error);
}

TEST_CASE("gap kernel sensitivities agree with finite differences")
{
    const GameModel m(TransitionKernel::multiplicative_gap(GapDensity::power(2.0)), CostModel::linear(c, 0.5, beta),
                      Grid(2000));
    const auto eq = solve_equilibrium(m);
    const auto sens = solve_sensitivities(m, eq);
    const auto fd = finite_difference_check(m, eq, 1e-3, &sens);
    CHECK(fd.theta_gamma_rel_error < 1e-2);
    CHECK(fd.z_gamma_rel_error < 1e-2);
    CHECK(std::abs(sens.w.jump()) > 10 * m.grid().h());
}

TEST_CASE("decoupled cost: R2 constant")
{
    const auto cost = CostModel::product(CostComponent::linear(), CostComponent::constant(0.6), 0.5, beta);
    const auto m = GameModel::unchecked(TransitionKernel::uniform(), cost, Grid(1000));
    const auto eq = solve_equilibrium(m);
    REQUIRE(eq.theta.is_interior());
    const auto sens = solve_sensitivities(m, eq);
    CHECK(sens.theta_gamma > 0.0);

    // with no z-forcing, w is the c0 = 0 basis solution
    const auto a = solve_w_equation(m, eq.theta.value(), eq.z, 0.0, 1.0);
    for (double x : {0.0, 0.3, 0.8})
        CHECK(sens.w(x) == doctest::Approx(a.w(x)).epsilon(1e-12));

    // and theta_gamma matches the single-agent derivative of the threshold
    const double h = 1e-3;
    const auto opts = m.tol().solver();
    auto theta_at = [&](double g) {
        return extract_threshold(solve_value_function(cost.with_gamma(g), m.discretization(), eq.z, opts), opts).value();
    };
    CHECK(sens.theta_gamma == doctest::Approx((theta_at(0.5 + h) - theta_at(0.5 - h)) / (2 * h)).epsilon(1e-2));
}

TEST_CASE("sensitivities need an interior threshold")
{
    const auto& s = example2();
    auto eq = s.eq;
    eq.theta = Threshold::above_one();
    CHECK_THROWS_AS(solve_sensitivities(s.model, eq), std::invalid_argument);
}
