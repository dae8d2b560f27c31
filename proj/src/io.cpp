#include "bmfg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace bmfg {

namespace {

std::ofstream open(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

} // namespace

Json to_json(const Threshold& t)
{
    return {{"tag", t.tag()}, {"value", finite_or_null(t.numeric())}};
}

Json to_json(const Tolerances& t)
{
    return {{"bellman", t.bellman},
            {"fixed_point", t.fixed_point},
            {"threshold", t.threshold > 0.0 ? t.threshold : 10.0 * t.bellman},
            {"max_bisection", t.max_bisection}};
}

Json to_json(const EquilibriumSolution& sol, const GameModel& model)
{
    return {{"z", sol.z},
            {"theta", to_json(sol.theta)},
            {"v0", sol.v.v[0]},
            {"atom0", sol.mu.atom0},
            {"atom_at_one", sol.mu.atom_at_one},
            {"density_at_theta", sol.mu.density_at_theta},
            {"residuals", {{"z", sol.residual_z}, {"bellman", sol.residual_bellman}}},
            {"existence", {{"bound", sol.existence_bound}, {"holds", sol.existence_condition_holds}}},
            {"bisection_steps", sol.bisection_steps},
            {"n", model.grid().n()},
            {"tolerances", to_json(model.tol())}};
}

Json to_json(const EquilibriumReport& rep)
{
    return {{"pass", rep.pass},
            {"residual_bellman", rep.residual_bellman},
            {"residual_z", rep.residual_z},
            {"stationarity_defect", rep.stationarity_defect},
            {"threshold_consistent", rep.threshold_consistent},
            {"existence_condition_holds", rep.existence_condition_holds},
            {"failures", rep.failures}};
}

Json to_json(const SensitivityResult& s)
{
    return {{"method", to_string(s.method)},
            {"w0", s.w0},
            {"theta_gamma", s.theta_gamma},
            {"z_gamma", s.z_gamma},
            {"z_prime", s.z_prime},
            {"lambda", s.lambda},
            {"w_jump_at_theta", s.w.jump()},
            {"truncated", s.truncated}};
}

Json to_json(const UniformEquilibrium& e) { return {{"v0", e.v0}, {"theta", e.theta}, {"z", e.z}}; }

Json to_json(const UniformSensitivity& s)
{
    return {{"w0", s.w0}, {"theta_gamma", s.theta_gamma}, {"z_gamma", s.z_gamma}};
}

Json to_json(const FiniteDifferenceReport& r)
{
    Json probes = Json::array();
    for (const auto& p : r.w_probes)
        probes.push_back({{"x", p.x}, {"w_fd", p.w_fd}, {"w", p.w}, {"rel_error", p.rel_error}});
    return {{"eps", r.eps},
            {"theta_plus", r.theta_plus},
            {"theta_minus", r.theta_minus},
            {"z_plus", r.z_plus},
            {"z_minus", r.z_minus},
            {"theta_gamma_fd", r.theta_gamma_fd},
            {"z_gamma_fd", r.z_gamma_fd},
            {"theta_gamma", r.theta_gamma},
            {"z_gamma", r.z_gamma},
            {"theta_gamma_rel_error", r.theta_gamma_rel_error},
            {"z_gamma_rel_error", r.z_gamma_rel_error},
            {"w_probes", probes}};
}

Json to_json(const StationaryDistribution& d)
{
    return {{"theta", to_json(d.theta)},
            {"pi0", d.atom0},
            {"atom_at_one", d.atom_at_one},
            {"z", d.mean},
            {"density_at_theta", d.density_at_theta},
            {"n", d.density.grid().n()}};
}

Json to_json(const CycleStats& c)
{
    return {{"count", c.count},
            {"mean_tau", c.mean_tau},
            {"tau_std_error", c.tau_std_error},
            {"mean_length", c.mean_length},
            {"mean_cycle_sum", c.mean_cycle_sum},
            {"cycle_sum_std_error", c.cycle_sum_std_error},
            {"ratio", c.ratio},
            {"ratio_std_error", c.std_error}};
}

Json to_json(const SimStats& s)
{
    Json j = {{"pooled_time_average", {{"mean", s.pooled_time_average.mean},
                                        {"std_error", s.pooled_time_average.std_error}}},
              {"atom0_frequency", s.histogram.atom0},
              {"final_population_average", s.trajectory.empty() ? 0.0 : s.trajectory.back()},
              {"agents", s.agent_time_average.size()},
              {"steps", s.trajectory.size()}};
    if (s.cycles)
        j["cycles"] = to_json(*s.cycles);
    return j;
}

Json to_json(const CostCurve& c)
{
    Json pts = Json::array();
    for (const auto& p : c.points)
        pts.push_back({{"r", p.r}, {"theta", to_json(p.theta)}});
    return {{"r_lower", c.r_lower}, {"r_upper", c.r_upper}, {"points", pts}};
}

void write_solution_csv(const std::filesystem::path& path, const EquilibriumSolution& sol)
{
    auto out = open(path);
    out << "x,v,p\n";
    const Grid& g = sol.v.v.grid();
    for (int j = 0; j < g.size(); ++j)
        out << num(g.node(j)) << ',' << num(sol.v.v[j]) << ',' << num(sol.mu.density[j]) << '\n';
}

void write_stationary_csv(const std::filesystem::path& path, const StationaryDistribution& d)
{
    auto out = open(path);
    out << "x,p\n";
    const auto pl = d.density_knots();
    for (std::size_t i = 0; i < pl.x().size(); ++i)
        out << num(pl.x()[i]) << ',' << num(pl.y()[i]) << '\n';
}

void write_sensitivity_csv(const std::filesystem::path& path, const BranchFunction& w)
{
    auto out = open(path);
    out << "x,w,branch\n";
    for (std::size_t i = 0; i < w.lower().x().size(); ++i)
        out << num(w.lower().x()[i]) << ',' << num(w.lower().y()[i]) << ",lower\n";
    for (std::size_t i = 0; i < w.upper().x().size(); ++i)
        out << num(w.upper().x()[i]) << ',' << num(w.upper().y()[i]) << ",upper\n";
}

void write_value_perturbation_csv(const std::filesystem::path& path, const EquilibriumSolution& sol,
                                  const BranchFunction& w)
{
    auto out = open(path);
    out << "x,v,w,branch\n";
    for (std::size_t i = 0; i < w.lower().x().size(); ++i) {
        const double x = w.lower().x()[i];
        out << num(x) << ',' << num(sol.v.v(x)) << ',' << num(w.lower().y()[i]) << ",lower\n";
    }
    for (std::size_t i = 0; i < w.upper().x().size(); ++i) {
        const double x = w.upper().x()[i];
        out << num(x) << ',' << num(sol.v.v(x)) << ',' << num(w.upper().y()[i]) << ",upper\n";
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const SimStats& s)
{
    auto out = open(path);
    out << "t,x_bar\n";
    for (std::size_t t = 0; t < s.trajectory.size(); ++t)
        out << t << ',' << num(s.trajectory[t]) << '\n';
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h)
{
    auto out = open(path);
    out << "bin_left,bin_right,mass\n";
    out << "0,0," << num(h.atom0) << '\n';
    for (std::size_t k = 0; k < h.mass.size(); ++k)
        out << num(h.edges[k]) << ',' << num(h.edges[k + 1]) << ',' << num(h.mass[k]) << '\n';
}

void write_json(const std::filesystem::path& path, const Json& j)
{
    auto out = open(path);
    out << j.dump(2) << '\n';
}

} // namespace bmfg
