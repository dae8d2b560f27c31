// bmfg: command-line front end for the mean field threshold game solver.
//
// Exit codes: 0 success, 1 configuration error, 2 solver failure,
// 3 example2 reproduction outside its tolerances.

#include "config.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace bmfg;
using bmfg::cli::ConfigError;
using bmfg::cli::RunConfig;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid_n;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
};

RunConfig resolve(const Overrides& o)
{
    RunConfig cfg = o.config.empty() ? cli::parse_config(Json::object()) : cli::load_config(o.config);
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.grid_n) {
        if (*o.grid_n < 2)
            throw ConfigError("--grid-n: must be >= 2");
        cfg.n = *o.grid_n;
    }
    if (o.threads) {
        if (*o.threads < 1)
            throw ConfigError("--threads: must be >= 1");
        cfg.threads = *o.threads;
    }
    if (o.out_dir)
        cfg.out_dir = *o.out_dir;
    return cfg;
}

void emit(const RunConfig& cfg, const std::string& name, const Json& j)
{
    write_json(cfg.out_dir / (name + ".json"), j);
    std::cout << j.dump(2) << '\n';
}

void warn_existence(const EquilibriumSolution& sol)
{
    if (!sol.existence_condition_holds)
        std::cerr << "warning: gamma does not exceed the uniqueness bound " << sol.existence_bound
                  << "; the solution is reported but may not be unique\n";
}

int cmd_solve(const RunConfig& cfg)
{
    const GameModel model = cfg.model();
    const EquilibriumSolution sol = solve_equilibrium(model);
    warn_existence(sol);
    if (cfg.write_csv) {
        write_solution_csv(cfg.out_dir / "solution.csv", sol);
        write_stationary_csv(cfg.out_dir / "stationary.csv", sol.mu);
    }
    emit(cfg, "solution", to_json(sol, model));
    return 0;
}

int cmd_sensitivity(const RunConfig& cfg)
{
    const GameModel model = cfg.model();
    const EquilibriumSolution sol = solve_equilibrium(model);
    warn_existence(sol);
    if (!sol.theta.is_interior())
        throw SolverError("sensitivities need an interior equilibrium threshold, got " + sol.theta.tag());
    const SensitivityResult sens = solve_sensitivities(model, sol, cfg.sensitivity.z_prime);
    Json j = {{"equilibrium", to_json(sol, model)}, {"analytic", to_json(sens)}};
    j["finite_difference"] = to_json(finite_difference_check(model, sol, cfg.sensitivity.eps, &sens));
    if (cfg.linear_c && model.kernel().is_uniform()) {
        const auto eq = solve_uniform_equilibrium_closed_form(*cfg.linear_c, model.cost().gamma, model.cost().beta);
        j["closed_form"] = {
            {"equilibrium", to_json(eq)},
            {"sensitivity", to_json(solve_uniform_sensitivity_closed_form(eq, model.cost().gamma, model.cost().beta,
                                                                          *cfg.linear_c))}};
    }
    if (cfg.write_csv) {
        write_sensitivity_csv(cfg.out_dir / "sensitivity.csv", sens.w);
        write_value_perturbation_csv(cfg.out_dir / "value_perturbation.csv", sol, sens.w);
    }
    emit(cfg, "sensitivity", j);
    return 0;
}

int cmd_curve(const RunConfig& cfg)
{
    const GameModel model = cfg.model();
    const auto& disc = model.discretization();
    const SolverOptions opts = model.tol().solver();
    const CostCurve bounds = threshold_cost_curve(model.cost().r1, disc, cfg.curve.rho, {}, opts);
    const CostCurve curve = threshold_cost_curve(model.cost().r1, disc, cfg.curve.rho,
                                                 cost_ladder(bounds.r_lower, bounds.r_upper, cfg.curve.points), opts);
    Json zs = Json::array();
    for (double th : cfg.curve.thetas)
        zs.push_back({{"theta", th}, {"z", mean_field_of_theta(disc, Threshold::interior(th))}});
    if (cfg.write_csv) {
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream a(cfg.out_dir / "threshold_curve.csv");
        a << "r,tag,theta\n";
        for (const auto& p : curve.points)
            a << p.r << ',' << p.theta.tag() << ',' << p.theta.value() << '\n';
        std::ofstream b(cfg.out_dir / "mean_field_curve.csv");
        b << "theta,z\n";
        for (const auto& e : zs)
            b << e["theta"].get<double>() << ',' << e["z"].get<double>() << '\n';
    }
    emit(cfg, "curve", {{"rho", cfg.curve.rho}, {"threshold_curve", to_json(curve)}, {"mean_field_curve", zs}});
    return 0;
}

int cmd_simulate(const RunConfig& cfg)
{
    const GameModel model = cfg.model();
    const EquilibriumSolution sol = solve_equilibrium(model);
    const auto& o = cfg.simulate;
    const Threshold policy = o.policy.value_or(sol.theta);
    const StationaryDistribution law = stationary_distribution(model.discretization(), policy);

    SimConfig sc;
    sc.agents = o.agents;
    sc.horizon = o.horizon;
    sc.burn_in = o.burn_in;
    sc.seed = cfg.seed;
    sc.policy = policy;
    sc.histogram_bins = o.histogram_bins;
    sc.threads = cfg.threads;
    sc.initial_law = o.initial_law;
    if (o.initial_law == InitialLaw::custom)
        sc.custom_law = law;
    const SimStats st = simulate_population(model, sc);

    Json j = {{"policy", to_json(policy)}, {"stationary", to_json(law)}, {"statistics", to_json(st)}};
    if (model.grid().n() % o.histogram_bins == 0) {
        const Distances d = empirical_vs_stationary(st, law);
        j["distance"] = {{"tv", d.tv}, {"w1", d.w1}};
    } else {
        std::cerr << "note: histogram bins do not divide n; distances skipped\n";
    }
    if (policy.is_interior() && o.cycles > 0) {
        j["regeneration"] = to_json(cycle_statistics(model.kernel(), policy.value(), o.cycles, cfg.seed, cfg.threads));
        j["expected_hitting_time"] = expected_hitting_time(model.kernel(), policy.value(), model.grid());
    }
    if (o.cost_replications > 0) {
        const int horizon = required_horizon(model, sol.z);
        const Estimate e =
            evaluate_policy_cost(model, sol.z, policy, 0.0, o.cost_replications, horizon, cfg.seed, cfg.threads);
        j["policy_cost"] = {{"z", sol.z}, {"x0", 0.0}, {"horizon", horizon}, {"mean", e.mean},
                            {"std_error", e.std_error}, {"v0", sol.v.v[0]}};
    }
    if (cfg.write_csv) {
        write_trajectory_csv(cfg.out_dir / "trajectory.csv", st);
        write_histogram_csv(cfg.out_dir / "histogram.csv", st.histogram);
    }
    emit(cfg, "simulation", j);
    return 0;
}

std::vector<double> read_column(const std::filesystem::path& p, const std::string& name)
{
    std::ifstream in(p);
    if (!in)
        throw ConfigError(p.string() + ": cannot open");
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            header.push_back(cell);
    }
    const auto col = std::find(header.begin(), header.end(), name) - header.begin();
    if (col >= static_cast<long>(header.size()))
        throw ConfigError(p.string() + ": no column '" + name + "'");
    std::vector<double> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::stringstream ss(line);
        std::string cell;
        for (long c = 0; c <= col; ++c)
            if (!std::getline(ss, cell, ','))
                throw ConfigError(p.string() + ":" + std::to_string(lineno) + ": missing column");
        out.push_back(std::stod(cell));
    }
    return out;
}

int cmd_verify(const RunConfig& cfg, const std::string& dir_arg)
{
    const std::filesystem::path dir = dir_arg.empty() ? cfg.out_dir : std::filesystem::path(dir_arg);
    std::ifstream in(dir / "solution.json");
    if (!in)
        throw ConfigError((dir / "solution.json").string() + ": cannot open (run solve first)");
    Json s;
    try {
        s = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError((dir / "solution.json").string() + ": " + e.what());
    }
    const GameModel model = cfg.model();
    const auto values = read_column(dir / "solution.csv", "v");
    if (static_cast<int>(values.size()) != model.grid().size())
        throw ConfigError("solution.csv: grid size differs from the configured n");
    if (s.value("n", -1) != model.grid().n())
        throw ConfigError("solution.json: n differs from the configured grid");

    const auto& t = s.at("theta");
    const Threshold theta = Threshold::from_tag(t.at("tag").get<std::string>(),
                                                t.at("value").is_null() ? 1.0 : t.at("value").get<double>());
    const double z = s.at("z").get<double>();
    GridFunction v(model.grid(), values);
    GridFunction G = model.discretization().expect(v);
    ValueFunction vf{std::move(v), std::move(G), z, model.cost().gamma, model.cost().beta, 0, 0.0};
    StationaryDistribution mu = stationary_distribution(model.discretization(), theta);
    const double bound = gamma_existence_lower_bound(model);
    EquilibriumSolution sol{std::move(vf), theta, std::move(mu), z, 0.0, 0.0, bound, model.cost().gamma > bound, 0};
    const EquilibriumReport rep = verify_equilibrium(model, sol);
    emit(cfg, "verify", to_json(rep));
    if (!rep.pass) {
        for (const auto& f : rep.failures)
            std::cerr << "verify: " << f << '\n';
        return 2;
    }
    return 0;
}

// Reference example: R = x (0.2 + z), gamma = 0.5, beta = 0.9,
// uniform kernel. The sensitivity tolerance is 1e-3 because the printed reference
// sensitivities are not an exact solution of their own linear system.
int cmd_example2(const RunConfig& cfg)
{
    constexpr double c = 0.2, gamma = 0.5, beta = 0.9;
    constexpr double tol_eq = 1e-5, tol_sens = 1e-3, tol_grid = 2e-3;
    const UniformEquilibrium eq = solve_uniform_equilibrium_closed_form(c, gamma, beta);
    const UniformSensitivity cs = solve_uniform_sensitivity_closed_form(eq, gamma, beta, c);

    const GameModel model(TransitionKernel::uniform(), CostModel::linear(c, gamma, beta), Grid(cfg.n), cfg.tol);
    const EquilibriumSolution sol = solve_equilibrium(model);
    if (!sol.theta.is_interior())
        throw SolverError("reference grid solve left the interior regime");
    const SensitivityResult sens = solve_sensitivities(model, sol);

    bool ok = true;
    Json checks = Json::array();
    auto check = [&](const char* name, double value, double target, double tol) {
        const bool pass = std::abs(value - target) <= tol;
        ok = ok && pass;
        checks.push_back({{"name", name}, {"value", value}, {"target", target}, {"abs_error", std::abs(value - target)},
                          {"tolerance", tol}, {"pass", pass}});
    };
    check("v0", eq.v0, 3.497854, tol_eq);
    check("theta", eq.theta, 0.485162, tol_eq);
    check("z", eq.z, 0.345854, tol_eq);
    check("w0", cs.w0, 4.563055, tol_sens);
    check("theta_gamma", cs.theta_gamma, 1.162861, tol_sens);
    check("z_gamma", cs.z_gamma, 0.336380, tol_sens);
    check("grid_v0", sol.v.v[0], eq.v0, tol_grid);
    check("grid_theta", sol.theta.value(), eq.theta, tol_grid);
    check("grid_z", sol.z, eq.z, tol_grid);

    Json j = {{"v0", eq.v0},
              {"theta", eq.theta},
              {"z", eq.z},
              {"w0", cs.w0},
              {"theta_gamma", cs.theta_gamma},
              {"z_gamma", cs.z_gamma},
              {"grid", {{"n", cfg.n}, {"equilibrium", to_json(sol, model)}, {"sensitivity", to_json(sens)}}},
              {"checks", checks},
              {"pass", ok}};
    write_value_perturbation_csv(cfg.out_dir / "example2_v_w.csv", sol, sens.w);
    emit(cfg, "example2", j);
    if (!ok)
        std::cerr << "example2: values outside the documented tolerances\n";
    return ok ? 0 : 3;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Binary-action mean field game solver"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--grid-n", o.grid_n, "Grid intervals");
    app.add_option("--threads", o.threads, "Worker threads");
    app.add_option("--out-dir", o.out_dir, "Output directory");

    auto* solve = app.add_subcommand("solve", "Stationary equilibrium");
    auto* sens = app.add_subcommand("sensitivity", "Derivatives in the effort cost, analytic and finite-difference");
    auto* curve = app.add_subcommand("curve", "Threshold against effort cost, and mean field against threshold");
    auto* sim = app.add_subcommand("simulate", "Population Monte Carlo");
    auto* verify = app.add_subcommand("verify", "Residual report for a solve output directory");
    auto* ex2 = app.add_subcommand("example2", "Reproduce the reference example");
    std::string verify_dir;
    verify->add_option("--solution-dir", verify_dir, "Directory holding solution.json and solution.csv");
    for (auto* sc : {solve, sens, curve, sim, verify, ex2})
        sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const RunConfig cfg = resolve(o);
        if (*solve)
            return cmd_solve(cfg);
        if (*sens)
            return cmd_sensitivity(cfg);
        if (*curve)
            return cmd_curve(cfg);
        if (*sim)
            return cmd_simulate(cfg);
        if (*verify)
            return cmd_verify(cfg, verify_dir);
        if (*ex2)
            return cmd_example2(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
