#pragma once

#include "bmfg/equilibrium.hpp"
#include "bmfg/sensitivity.hpp"
#include "bmfg/simulate.hpp"

#include <json.hpp>

#include <filesystem>

namespace bmfg {

using Json = nlohmann::ordered_json;

Json to_json(const Threshold& t);
Json to_json(const Tolerances& t);
Json to_json(const EquilibriumSolution& sol, const GameModel& model);
Json to_json(const EquilibriumReport& rep);
Json to_json(const SensitivityResult& s);
Json to_json(const UniformEquilibrium& e);
Json to_json(const UniformSensitivity& s);
Json to_json(const FiniteDifferenceReport& r);
Json to_json(const StationaryDistribution& d);
Json to_json(const CycleStats& c);
Json to_json(const SimStats& s);
Json to_json(const CostCurve& c);

/// x, v, p on the grid nodes.
void write_solution_csv(const std::filesystem::path& path, const EquilibriumSolution& sol);
/// x, p with the threshold knot included.
void write_stationary_csv(const std::filesystem::path& path, const StationaryDistribution& d);
/// x, w, branch; theta appears once per branch.
void write_sensitivity_csv(const std::filesystem::path& path, const BranchFunction& w);
/// x, v, w, branch: the value and perturbation curves side by side.
void write_value_perturbation_csv(const std::filesystem::path& path, const EquilibriumSolution& sol,
                                  const BranchFunction& w);
/// t, x_bar
void write_trajectory_csv(const std::filesystem::path& path, const SimStats& s);
/// bin_left, bin_right, mass; the atom at zero is the row [0, 0].
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h);
void write_json(const std::filesystem::path& path, const Json& j);

} // namespace bmfg
