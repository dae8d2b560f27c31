#include "bmfg/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bmfg {

GameModel::GameModel(TransitionKernel kernel, CostModel cost, Grid grid, Tolerances tol)
    : GameModel(std::make_shared<const Discretization>(std::move(kernel), grid), std::move(cost), tol)
{
    cost_.validate(grid);
}

GameModel GameModel::unchecked(TransitionKernel kernel, CostModel cost, Grid grid, Tolerances tol)
{
    return GameModel(std::make_shared<const Discretization>(std::move(kernel), grid), std::move(cost), tol);
}

GameModel GameModel::with_gamma(double gamma) const
{
    return GameModel(disc_, cost_.with_gamma(gamma), tol_);
}

GameModel GameModel::with_tolerances(Tolerances tol) const { return GameModel(disc_, cost_, tol); }

double gamma_existence_lower_bound(const GameModel& model)
{
    const Discretization& disc = model.discretization();
    const CostModel& cost = model.cost();
    const double mass = disc.integrate_against(0.0, [](double) { return 1.0; });
    const auto nodes = model.grid().nodes();
    double best = -std::numeric_limits<double>::infinity();
    if (cost.product_form()) {
        const double spread = disc.integrate_against(0.0, cost.r1.value) / mass - cost.r1(0.0);
        for (double z : nodes)
            best = std::max(best, spread * cost.r2(z));
    } else {
        for (double z : nodes) {
            const double e = disc.integrate_against(0.0, [&](double y) { return cost.cost(y, z); }) / mass;
            best = std::max(best, e - cost.cost(0.0, z));
        }
    }
    return cost.beta * best;
}

BestResponse best_response_map(const GameModel& model, double z, const GridFunction* warm)
{
    if (!(z >= 0.0 && z <= 1.0))
        throw std::invalid_argument("mean field must lie in [0,1]");
    const SolverOptions opts = model.tol().solver();
    ValueFunction vf = solve_value_function(model.cost(), model.discretization(), z, opts, warm);
    const Threshold theta = extract_threshold(vf, opts);
    double z_out = 0.0;
    switch (theta.kind()) {
    case Threshold::Kind::zero: z_out = 0.0; break;
    case Threshold::Kind::one:
    case Threshold::Kind::above_one: z_out = 1.0; break;
    case Threshold::Kind::interior: z_out = mean_field_of_theta(model.discretization(), theta); break;
    }
    return {theta, z_out, std::move(vf)};
}

namespace {

double bellman_residual(const GameModel& model, const ValueFunction& vf, const Threshold& theta)
{
    const auto& disc = model.discretization();
    const GridFunction tv = bellman_operator(vf.v, model.cost(), disc, vf.z);
    const GridFunction pv = policy_operator(vf.v, model.cost(), disc, vf.z, theta);
    return std::max(sup_distance(tv.values(), vf.v.values()), sup_distance(pv.values(), vf.v.values()));
}

EquilibriumSolution assemble(const GameModel& model, BestResponse br, double z, int steps)
{
    const double bound = gamma_existence_lower_bound(model);
    StationaryDistribution mu = stationary_distribution(model.discretization(), br.theta);
    const double residual_z = std::abs(mu.mean - z);
    const double residual_bellman = bellman_residual(model, br.vf, br.theta);
    return EquilibriumSolution{std::move(br.vf), br.theta,           std::move(mu),
                               z,                residual_z,         residual_bellman,
                               bound,            model.cost().gamma > bound, steps};
}

} // namespace

EquilibriumSolution solve_equilibrium(const GameModel& model, std::optional<std::pair<double, double>> bracket)
{
    if (!model.cost().product_form())
        throw std::invalid_argument("equilibrium solver needs a product-form cost");
    if (!(model.cost().gamma > 0.0))
        throw std::invalid_argument("gamma must be positive");
    const double tol = model.tol().fixed_point;
    double lo = bracket ? bracket->first : 0.0;
    double hi = bracket ? bracket->second : 1.0;
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi))
        throw std::invalid_argument("bracket must satisfy 0 <= lo < hi <= 1");

    BestResponse at_lo = best_response_map(model, lo);
    const double g_lo = at_lo.z_out - lo;
    if (g_lo < -tol)
        throw SolverError("no bracket: Gamma(" + std::to_string(lo) + ") - z = " + std::to_string(g_lo));
    if (g_lo <= 0.0)
        return assemble(model, std::move(at_lo), lo, 0);

    BestResponse at_hi = best_response_map(model, hi, &at_lo.vf.v);
    const double g_hi = at_hi.z_out - hi;
    if (g_hi > tol)
        throw SolverError("no bracket: Gamma(" + std::to_string(hi) + ") - z = " + std::to_string(g_hi));
    if (g_hi >= 0.0)
        return assemble(model, std::move(at_hi), hi, 0);

    GridFunction warm = at_lo.vf.v;
    int steps = 0;
    const double width = tol * 1e-2;
    while (hi - lo > width) {
        if (++steps > model.tol().max_bisection)
            throw SolverError("max bisection steps (" + std::to_string(model.tol().max_bisection) + ") reached");
        const double mid = 0.5 * (lo + hi);
        BestResponse br = best_response_map(model, mid, &warm);
        warm = br.vf.v;
        if (br.z_out - mid > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double z = 0.5 * (lo + hi);
    return assemble(model, best_response_map(model, z, &warm), z, steps);
}

EquilibriumReport verify_equilibrium(const GameModel& model, const EquilibriumSolution& sol)
{
    EquilibriumReport rep;
    try {
        rep.existence_condition_holds = sol.existence_condition_holds;
        rep.residual_bellman = bellman_residual(model, sol.v, sol.theta);
        const BestResponse br = best_response_map(model, sol.z, &sol.v.v);
        rep.residual_z = std::abs(br.z_out - sol.z);
        rep.threshold_consistent = br.theta.kind() == sol.theta.kind() &&
                                   std::abs(br.theta.value() - sol.theta.value()) <= 1e-6;
        rep.stationarity_defect = stationarity_defect(model.discretization(), sol.mu);

        const Tolerances& tol = model.tol();
        if (!(rep.residual_bellman <= tol.bellman))
            rep.failures.push_back("bellman residual " + std::to_string(rep.residual_bellman));
        if (!(rep.residual_z <= tol.fixed_point))
            rep.failures.push_back("mean field residual " + std::to_string(rep.residual_z));
        if (!rep.threshold_consistent)
            rep.failures.push_back("threshold differs from best response");
        if (!(rep.stationarity_defect <= 10.0 * model.grid().h()))
            rep.failures.push_back("stationarity defect " + std::to_string(rep.stationarity_defect));
    } catch (const std::exception& e) {
        rep.failures.push_back(std::string("verification aborted: ") + e.what());
    }
    rep.pass = rep.failures.empty();
    return rep;
}

} // namespace bmfg
