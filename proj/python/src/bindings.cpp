#include "bmfg/equilibrium.hpp"
#include "bmfg/sensitivity.hpp"
#include "bmfg/simulate.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace bmfg;

namespace {

TransitionKernel make_kernel(const std::string& name, double exponent)
{
    if (name == "uniform")
        return TransitionKernel::uniform();
    if (name == "gap")
        return TransitionKernel::multiplicative_gap(GapDensity::power(exponent));
    throw std::invalid_argument("kernel must be 'uniform' or 'gap'");
}

py::dict theta_dict(const Threshold& t)
{
    py::dict d;
    d["tag"] = t.tag();
    d["value"] = t.numeric();
    return d;
}

Threshold theta_from(const py::object& o)
{
    if (py::isinstance<py::str>(o))
        return Threshold::from_tag(o.cast<std::string>(), 0.5);
    return Threshold::from_value(o.cast<double>());
}

std::vector<double> values(const GridFunction& f) { return {f.values().begin(), f.values().end()}; }

py::dict distribution_dict(const StationaryDistribution& d)
{
    py::dict out;
    out["theta"] = theta_dict(d.theta);
    out["pi0"] = d.atom0;
    out["atom_at_one"] = d.atom_at_one;
    out["z"] = d.mean;
    out["x"] = d.density.grid().nodes();
    out["p"] = values(d.density);
    out["mass"] = d.mass();
    return out;
}

} // namespace

PYBIND11_MODULE(_bmfg, m)
{
    m.doc() = "Binary-action mean field game solver";

    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::class_<GameModel>(m, "GameModel")
        .def(py::init([](const std::string& kernel, double exponent, double c, double gamma, double beta, int n,
                         double bellman_tol, double fixed_point_tol) {
                 Tolerances tol;
                 tol.bellman = bellman_tol;
                 tol.fixed_point = fixed_point_tol;
                 return GameModel(make_kernel(kernel, exponent), CostModel::linear(c, gamma, beta), Grid(n), tol);
             }),
             py::arg("kernel") = "uniform", py::arg("exponent") = 1.0, py::arg("c") = 0.2, py::arg("gamma") = 0.5,
             py::arg("beta") = 0.9, py::arg("n") = 1000, py::arg("bellman_tol") = 1e-8,
             py::arg("fixed_point_tol") = 1e-6)
        .def_property_readonly("n", [](const GameModel& g) { return g.grid().n(); })
        .def_property_readonly("gamma", [](const GameModel& g) { return g.cost().gamma; })
        .def("with_gamma", &GameModel::with_gamma);

    m.def(
        "solve_equilibrium",
        [](const GameModel& model) {
            const EquilibriumSolution sol = [&] {
                py::gil_scoped_release release;
                return solve_equilibrium(model);
            }();
            py::dict d;
            d["z"] = sol.z;
            d["theta"] = theta_dict(sol.theta);
            d["v0"] = sol.v.v[0];
            d["x"] = model.grid().nodes();
            d["v"] = values(sol.v.v);
            d["stationary"] = distribution_dict(sol.mu);
            d["residual_z"] = sol.residual_z;
            d["residual_bellman"] = sol.residual_bellman;
            d["existence_bound"] = sol.existence_bound;
            d["existence_condition_holds"] = sol.existence_condition_holds;
            return d;
        },
        py::arg("model"));

    m.def(
        "solve_sensitivities",
        [](const GameModel& model) {
            const EquilibriumSolution sol = solve_equilibrium(model);
            const SensitivityResult s = solve_sensitivities(model, sol);
            py::dict d;
            d["w0"] = s.w0;
            d["theta_gamma"] = s.theta_gamma;
            d["z_gamma"] = s.z_gamma;
            d["z_prime"] = s.z_prime;
            d["w_jump"] = s.w.jump();
            d["method"] = to_string(s.method);
            return d;
        },
        py::arg("model"));

    m.def(
        "closed_form_equilibrium",
        [](double c, double gamma, double beta) {
            const auto e = solve_uniform_equilibrium_closed_form(c, gamma, beta);
            return py::dict(py::arg("v0") = e.v0, py::arg("theta") = e.theta, py::arg("z") = e.z);
        },
        py::arg("c") = 0.2, py::arg("gamma") = 0.5, py::arg("beta") = 0.9);

    m.def(
        "closed_form_sensitivity",
        [](double c, double gamma, double beta) {
            const auto e = solve_uniform_equilibrium_closed_form(c, gamma, beta);
            const auto s = solve_uniform_sensitivity_closed_form(e, gamma, beta, c);
            return py::dict(py::arg("w0") = s.w0, py::arg("theta_gamma") = s.theta_gamma,
                            py::arg("z_gamma") = s.z_gamma);
        },
        py::arg("c") = 0.2, py::arg("gamma") = 0.5, py::arg("beta") = 0.9);

    m.def(
        "stationary_distribution",
        [](const py::object& theta, const std::string& kernel, double exponent, int n) {
            const Discretization disc(make_kernel(kernel, exponent), Grid(n));
            return distribution_dict(stationary_distribution(disc, theta_from(theta)));
        },
        py::arg("theta"), py::arg("kernel") = "uniform", py::arg("exponent") = 1.0, py::arg("n") = 1000);

    m.def(
        "mean_field_of_theta",
        [](const py::object& theta, const std::string& kernel, double exponent, int n) {
            const Discretization disc(make_kernel(kernel, exponent), Grid(n));
            return mean_field_of_theta(disc, theta_from(theta));
        },
        py::arg("theta"), py::arg("kernel") = "uniform", py::arg("exponent") = 1.0, py::arg("n") = 1000);

    m.def(
        "expected_hitting_time",
        [](double theta, const std::string& kernel, double exponent, int n) {
            return expected_hitting_time(make_kernel(kernel, exponent), theta, Grid(n));
        },
        py::arg("theta"), py::arg("kernel") = "uniform", py::arg("exponent") = 1.0, py::arg("n") = 1000);

    m.def(
        "simulate_population",
        [](const GameModel& model, const py::object& theta, int agents, int horizon, int burn_in, std::uint64_t seed,
           int threads) {
            SimConfig cfg;
            cfg.agents = agents;
            cfg.horizon = horizon;
            cfg.burn_in = burn_in;
            cfg.seed = seed;
            cfg.threads = threads;
            cfg.policy = theta_from(theta);
            SimStats st;
            {
                py::gil_scoped_release release;
                st = simulate_population(model, cfg);
            }
            py::dict d;
            d["trajectory"] = st.trajectory;
            d["pooled_mean"] = st.pooled_time_average.mean;
            d["pooled_std_error"] = st.pooled_time_average.std_error;
            d["atom0_frequency"] = st.histogram.atom0;
            if (st.cycles) {
                d["cycle_ratio"] = st.cycles->ratio;
                d["cycle_count"] = st.cycles->count;
            }
            return d;
        },
        py::arg("model"), py::arg("theta"), py::arg("agents") = 1000, py::arg("horizon") = 500,
        py::arg("burn_in") = 100, py::arg("seed") = 1, py::arg("threads") = 1);

    m.def(
        "cycle_statistics",
        [](double theta, long replications, std::uint64_t seed, const std::string& kernel, double exponent) {
            const CycleStats c = cycle_statistics(make_kernel(kernel, exponent), theta, replications, seed);
            return py::dict(py::arg("mean_tau") = c.mean_tau, py::arg("tau_std_error") = c.tau_std_error,
                            py::arg("mean_cycle_sum") = c.mean_cycle_sum, py::arg("ratio") = c.ratio,
                            py::arg("std_error") = c.std_error);
        },
        py::arg("theta"), py::arg("replications") = 10000, py::arg("seed") = 1, py::arg("kernel") = "uniform",
        py::arg("exponent") = 1.0);
}
