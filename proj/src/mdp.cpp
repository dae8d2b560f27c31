#include "bmfg/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bmfg {

CostComponent CostComponent::linear(double slope, double offset)
{
    return {"linear", [=](double t) { return offset + slope * t; }, [=](double) { return slope; }};
}

CostComponent CostComponent::power(double k, double offset)
{
    if (!(k > 0.0))
        throw std::invalid_argument("power cost exponent must be positive");
    return {"power(" + std::to_string(k) + ")", [=](double t) { return offset + std::pow(t, k); },
            [=](double t) { return t == 0.0 && k < 1.0 ? std::numeric_limits<double>::infinity()
                                                       : k * std::pow(t, k - 1.0); }};
}

CostComponent CostComponent::tabulated(std::vector<double> t, std::vector<double> v, double offset)
{
    if (t.size() != v.size() || t.size() < 2)
        throw std::invalid_argument("tabulated cost needs at least two (t, value) pairs");
    auto pl = std::make_shared<PiecewiseLinear>(std::move(t), std::move(v));
    auto slope = [pl](double s) {
        const auto x = pl->x();
        const auto y = pl->y();
        auto it = std::upper_bound(x.begin(), x.end(), s);
        std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
        i = std::min(i, x.size() - 2);
        return (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    };
    return {"tabulated", [pl, offset](double s) { return offset + (*pl)(s); }, slope};
}

CostComponent CostComponent::constant(double c)
{
    return {"constant", [c](double) { return c; }, [](double) { return 0.0; }};
}

CostModel CostModel::product(CostComponent r1, CostComponent r2, double gamma, double beta)
{
    CostModel m;
    m.r1 = std::move(r1);
    m.r2 = std::move(r2);
    m.gamma = gamma;
    m.beta = beta;
    return m;
}

CostModel CostModel::general(std::function<double(double, double)> r, double gamma, double beta)
{
    CostModel m;
    m.general_r = std::move(r);
    m.gamma = gamma;
    m.beta = beta;
    return m;
}

CostModel CostModel::linear(double c, double gamma, double beta)
{
    return product(CostComponent::linear(), CostComponent::linear(1.0, c), gamma, beta);
}

CostModel CostModel::with_gamma(double g) const
{
    CostModel m = *this;
    m.gamma = g;
    return m;
}

void CostModel::validate(const Grid& grid) const
{
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("beta must lie in (0,1)");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("gamma must be positive");
    const auto x = grid.nodes();
    if (product_form()) {
        for (std::size_t j = 0; j + 1 < x.size(); ++j) {
            if (!(r1(x[j + 1]) > r1(x[j])))
                throw std::invalid_argument("R1 must be strictly increasing");
            if (!(r2(x[j + 1]) > r2(x[j])))
                throw std::invalid_argument("R2 must be strictly increasing");
        }
        for (double t : x)
            if (!(r2(t) > 0.0) || r1(t) < 0.0)
                throw std::invalid_argument("R1 must be nonnegative and R2 positive");
        return;
    }
    const std::vector<double> zs{0.0, 0.25, 0.5, 0.75, 1.0};
    for (double z : zs)
        for (std::size_t j = 0; j + 1 < x.size(); ++j)
            if (!(cost(x[j + 1], z) > cost(x[j], z)))
                throw std::invalid_argument("R(., z) must be strictly increasing");
    for (double t : x)
        for (std::size_t i = 0; i + 1 < zs.size(); ++i)
            if (cost(t, zs[i + 1]) < cost(t, zs[i]))
                throw std::invalid_argument("R(x, .) must be increasing");
}

Threshold Threshold::interior(double x)
{
    if (!(x > 0.0 && x < 1.0))
        throw std::invalid_argument("interior threshold must lie in (0,1)");
    return Threshold(Kind::interior, x);
}

Threshold Threshold::from_value(double x)
{
    if (x <= 0.0)
        return zero();
    if (x == 1.0)
        return one();
    if (x > 1.0)
        return above_one();
    return interior(x);
}

double Threshold::numeric() const
{
    return kind_ == Kind::above_one ? std::numeric_limits<double>::infinity() : value_;
}

bool Threshold::acts_at(double x) const
{
    switch (kind_) {
    case Kind::zero: return true;
    case Kind::interior: return x >= value_;
    case Kind::one: return x >= 1.0;
    case Kind::above_one: return false;
    }
    return false;
}

std::string Threshold::tag() const
{
    switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::interior: return "interior";
    case Kind::one: return "one";
    case Kind::above_one: return "above_one";
    }
    return "?";
}

Threshold Threshold::from_tag(const std::string& tag, double value)
{
    if (tag == "zero")
        return zero();
    if (tag == "interior")
        return interior(value);
    if (tag == "one")
        return one();
    if (tag == "above_one")
        return above_one();
    throw std::invalid_argument("unknown threshold tag '" + tag + "'");
}

GridFunction bellman_operator(const GridFunction& g, const CostModel& model, const Discretization& disc,
                              double z)
{
    const Grid& grid = disc.grid();
    const auto e = disc.expect(g.values());
    std::vector<double> out(grid.size());
    const double reset = model.beta * g[0] + model.gamma;
    for (int j = 0; j < grid.size(); ++j) {
        const double r = model.cost(grid.node(j), z);
        out[j] = r + std::min(model.beta * e[j], reset);
    }
    return GridFunction(grid, std::move(out));
}

GridFunction policy_operator(const GridFunction& g, const CostModel& model, const Discretization& disc,
                             double z, const Threshold& policy)
{
    const Grid& grid = disc.grid();
    const auto e = disc.expect(g.values());
    std::vector<double> out(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
        const double x = grid.node(j);
        const double r = model.cost(x, z);
        out[j] = r + (policy.acts_at(x) ? model.beta * g[0] + model.gamma : model.beta * e[j]);
    }
    return GridFunction(grid, std::move(out));
}

namespace {

template <class Step>
std::pair<GridFunction, int> iterate_to_tolerance(GridFunction v, double beta, const SolverOptions& opts,
                                                  Step&& step)
{
    if (!(opts.tol > 0.0))
        throw std::invalid_argument("tolerance must be positive");
    const double stop = opts.tol * (1.0 - beta) / (2.0 * beta);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        GridFunction next = step(v);
        const double d = sup_distance(next.values(), v.values());
        v = std::move(next);
        if (d <= stop)
            return {std::move(v), it};
    }
    throw SolverError("iteration cap exceeded (" + std::to_string(opts.max_iterations) + ")");
}

} // namespace

ValueFunction solve_value_function(const CostModel& model, const Discretization& disc, double z,
                                   const SolverOptions& opts, const GridFunction* start)
{
    const Grid& grid = disc.grid();
    GridFunction v0 = start ? *start : GridFunction(grid, std::vector<double>(grid.size(), 0.0));
    auto [v, iterations] = iterate_to_tolerance(std::move(v0), model.beta, opts, [&](const GridFunction& g) {
        return bellman_operator(g, model, disc, z);
    });
    const GridFunction tv = bellman_operator(v, model, disc, z);
    const double residual = sup_distance(tv.values(), v.values());
    GridFunction G = disc.expect(v);
    return ValueFunction{std::move(v), std::move(G), z, model.gamma, model.beta, iterations, residual};
}

Threshold extract_threshold(const ValueFunction& vf, const SolverOptions& opts)
{
    const Grid& grid = vf.v.grid();
    const int n = grid.n();
    auto D = [&](int j) { return vf.beta * vf.G[j] - vf.beta * vf.v[0] - vf.gamma; };
    const double tol_d = opts.tol_d();

    const double d1 = D(n);
    if (!std::isfinite(d1))
        throw SolverError("no sign change: non-finite decision margin");
    if (d1 < -tol_d)
        return Threshold::above_one();
    if (std::abs(d1) <= tol_d)
        return Threshold::one();
    if (D(0) >= 0.0)
        return Threshold::zero();
    for (int j = 1; j <= n; ++j) {
        const double dj = D(j);
        if (dj >= 0.0) {
            const double dp = D(j - 1);
            const double x0 = grid.node(j - 1), x1 = grid.node(j);
            const double x = x0 + (x1 - x0) * (-dp) / (dj - dp);
            if (x <= 0.0)
                return Threshold::zero();
            if (x >= 1.0)
                return Threshold::one();
            return Threshold::interior(x);
        }
    }
    throw SolverError("no sign change in decision margin (check tolerances)");
}

GridFunction solve_uncontrolled_value(const CostModel& model, const Discretization& disc, double z,
                                      const SolverOptions& opts)
{
    const Grid& grid = disc.grid();
    const GridFunction r = GridFunction::sample(grid, [&](double x) { return model.cost(x, z); });
    auto [v, iterations] = iterate_to_tolerance(
        GridFunction(grid, std::vector<double>(grid.size(), 0.0)), model.beta, opts, [&](const GridFunction& g) {
            auto e = disc.expect(g.values());
            for (int j = 0; j < grid.size(); ++j)
                e[j] = model.beta * e[j] + r[j];
            return GridFunction(grid, std::move(e));
        });
    (void)iterations;
    return v;
}

GammaBounds gamma_bounds(const CostModel& model, const Discretization& disc, double z, const SolverOptions& opts)
{
    const Grid& grid = disc.grid();
    const GridFunction r = GridFunction::sample(grid, [&](double x) { return model.cost(x, z); });
    const double mean_r0 = disc.expect(r.values())[0];
    const GridFunction V = solve_uncontrolled_value(model, disc, z, opts);
    return {model.beta * (mean_r0 - r[0]), model.beta * (V[grid.n()] - V[0])};
}

namespace {

struct MarginProbe {
    const CostModel& base;
    const Discretization& disc;
    const SolverOptions& opts;
    std::optional<GridFunction> warm;

    // beta G(x) - beta v(0) - r at node index j for effort cost r
    double operator()(double r, int j)
    {
        const CostModel m = base.with_gamma(r);
        ValueFunction vf = solve_value_function(m, disc, 0.0, opts, warm ? &*warm : nullptr);
        warm = vf.v;
        return m.beta * vf.G[j] - m.beta * vf.v[0] - r;
    }
};

double bisect_margin(MarginProbe& probe, double lo, double hi, int node)
{
    // margin is positive at lo, negative at hi
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid, node) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

CostCurve threshold_cost_curve(const CostComponent& r1, const Discretization& disc, double rho,
                               const std::vector<double>& r_values, const SolverOptions& opts)
{
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("rho must lie in (0,1)");
    for (std::size_t i = 0; i < r_values.size(); ++i) {
        if (!(r_values[i] > 0.0))
            throw std::invalid_argument("cost values must be positive");
        if (i > 0 && r_values[i] < r_values[i - 1])
            throw std::invalid_argument("cost values must be sorted");
    }
    const Grid& grid = disc.grid();
    const CostModel base = CostModel::product(r1, CostComponent::constant(1.0), 1.0, rho);

    CostCurve curve;
    {
        MarginProbe probe{base, disc, opts, std::nullopt};
        const GridFunction rv = GridFunction::sample(grid, [&](double x) { return r1(x); });
        const double c_r1 = disc.expect(rv.values())[0] - rv[0];
        const double lo = 0.5 * rho * (1.0 - rho) * c_r1;
        const double hi = 1.01 * rho * r1(1.0) / (1.0 - rho) + 1e-12;
        curve.r_lower = bisect_margin(probe, lo, hi, 0);
        probe.warm.reset();
        curve.r_upper = bisect_margin(probe, lo, hi, grid.n());
    }

    std::optional<GridFunction> warm;
    for (double r : r_values) {
        const CostModel m = base.with_gamma(r);
        ValueFunction vf = solve_value_function(m, disc, 0.0, opts, warm ? &*warm : nullptr);
        curve.points.push_back({r, extract_threshold(vf, opts)});
        warm = std::move(vf.v);
    }
    return curve;
}

std::vector<double> cost_ladder(double r_lower, double r_upper, int points)
{
    if (points < 2)
        throw std::invalid_argument("cost ladder needs at least two points");
    std::vector<double> r(points);
    for (int i = 0; i < points; ++i)
        r[i] = r_lower + (r_upper - r_lower) * i / (points - 1);
    r.back() = r_upper;
    return r;
}

} // namespace bmfg
