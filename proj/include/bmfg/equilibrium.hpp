#pragma once

#include "bmfg/kernels.hpp"
#include "bmfg/mdp.hpp"
#include "bmfg/stationary.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bmfg {

struct Tolerances {
    double bellman = 1e-8;
    double fixed_point = 1e-6;
    /// Band for D(1) = 0; non-positive means 10 * bellman.
    double threshold = -1.0;
    int max_bisection = 200;

    SolverOptions solver() const { return {bellman, 1'000'000, threshold}; }
};

/// Kernel, cost and grid of one game. The discretization is built once and
/// shared by copies.
class GameModel {
public:
    /// Validates the cost model on the grid (std::invalid_argument).
    GameModel(TransitionKernel kernel, CostModel cost, Grid grid, Tolerances tol = {});
    /// Skips cost validation; for diagnostics such as a decoupled R2.
    static GameModel unchecked(TransitionKernel kernel, CostModel cost, Grid grid, Tolerances tol = {});

    const TransitionKernel& kernel() const { return disc_->kernel(); }
    const CostModel& cost() const { return cost_; }
    const Grid& grid() const { return disc_->grid(); }
    const Tolerances& tol() const { return tol_; }
    const Discretization& discretization() const { return *disc_; }

    GameModel with_gamma(double gamma) const;
    GameModel with_tolerances(Tolerances tol) const;

private:
    GameModel(std::shared_ptr<const Discretization> disc, CostModel cost, Tolerances tol)
        : disc_(std::move(disc)), cost_(std::move(cost)), tol_(tol) {}

    std::shared_ptr<const Discretization> disc_;
    CostModel cost_;
    Tolerances tol_;
};

/// beta * max_z int [R(y,z) - R(0,z)] Q0(dy|0) over grid values of z.
/// Uniqueness is guaranteed when gamma exceeds it; it is sufficient only.
double gamma_existence_lower_bound(const GameModel& model);

struct BestResponse {
    Threshold theta;
    double z_out;
    ValueFunction vf;
};

/// Gamma(z): best-response threshold at z and the mean of its limiting law.
BestResponse best_response_map(const GameModel& model, double z, const GridFunction* warm = nullptr);

struct EquilibriumSolution {
    ValueFunction v;
    Threshold theta;
    StationaryDistribution mu;
    double z;
    double residual_z;
    double residual_bellman;
    double existence_bound;
    bool existence_condition_holds;
    int bisection_steps;
};

/// Bisection on g(z) = Gamma(z) - z over [0,1] or a caller-supplied
/// bracket with g(lo) >= 0 >= g(hi).
EquilibriumSolution solve_equilibrium(const GameModel& model,
                                      std::optional<std::pair<double, double>> bracket = std::nullopt);

struct EquilibriumReport {
    double residual_bellman = 0.0;
    double residual_z = 0.0;
    double stationarity_defect = 0.0;
    bool threshold_consistent = false;
    bool existence_condition_holds = false;
    bool pass = false;
    std::vector<std::string> failures;
};

/// Recomputes every residual of the equilibrium system. Never throws.
EquilibriumReport verify_equilibrium(const GameModel& model, const EquilibriumSolution& sol);

} // namespace bmfg
