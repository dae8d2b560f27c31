#include "bmfg/stationary.hpp"

#include <algorithm>
#include <cmath>

namespace bmfg {

PiecewiseLinear StationaryDistribution::density_knots() const
{
    auto pl = PiecewiseLinear::from(density);
    if (theta.is_interior())
        pl = pl.with_knot(theta.value(), density_at_theta, density_at_theta);
    return pl;
}

double StationaryDistribution::mass() const
{
    return atom0 + density_knots().integrate(0.0, 1.0) + (atom_at_one ? 1.0 : 0.0);
}

double StationaryDistribution::cdf(double x) const
{
    if (x < 0.0)
        return 0.0;
    const double cont = density_knots().integrate(0.0, std::min(x, 1.0));
    return atom0 + cont + (atom_at_one && x >= 1.0 ? 1.0 : 0.0);
}

double StationaryDistribution::probability(double a, double b) const { return cdf(b) - cdf(a); }

namespace {

StationaryDistribution degenerate(const Grid& grid, const Threshold& theta, bool at_one)
{
    return StationaryDistribution{theta, at_one ? 0.0 : 1.0, at_one,
                                  GridFunction(grid, std::vector<double>(grid.size(), 0.0)), 0.0,
                                  at_one ? 1.0 : 0.0};
}

} // namespace

StationaryDistribution stationary_distribution(const Discretization& disc, const Threshold& theta)
{
    const Grid& grid = disc.grid();
    switch (theta.kind()) {
    case Threshold::Kind::zero: return degenerate(grid, theta, false);
    case Threshold::Kind::one:
    case Threshold::Kind::above_one: return degenerate(grid, theta, true);
    case Threshold::Kind::interior: break;
    }

    const TransitionKernel& k = disc.kernel();
    const double th = theta.value();
    // trial atom = 1; p depends linearly on the atom, so one solve suffices
    const GridFunction forcing = GridFunction::sample(grid, [&](double x) { return k.density(x, 0.0); });
    const auto sol = solve_volterra([&](double x, double y) { return k.density(x, y); }, forcing,
                                    Direction::forward, th);

    auto knots = PiecewiseLinear::from(sol.u).with_knot(th, sol.at_limit, sol.at_limit);
    const double scale = 1.0 / (1.0 + knots.integrate(0.0, 1.0));

    std::vector<double> p(sol.u.values().begin(), sol.u.values().end());
    for (double& v : p)
        v *= scale;
    StationaryDistribution dist{theta, scale, false, GridFunction(grid, std::move(p)), sol.at_limit * scale, 0.0};

    const auto pk = dist.density_knots();
    std::vector<double> xp(pk.x().size());
    for (std::size_t i = 0; i < xp.size(); ++i)
        xp[i] = pk.x()[i] * pk.y()[i];
    dist.mean = PiecewiseLinear(std::vector<double>(pk.x().begin(), pk.x().end()), std::move(xp)).integrate(0.0, 1.0);

    const double defect = std::abs(dist.atom0 - pk.integrate(th, 1.0));
    if (defect > 10.0 * grid.h())
        throw SolverError("mass defect: atom " + std::to_string(dist.atom0) + " vs upper mass " +
                          std::to_string(pk.integrate(th, 1.0)));
    return dist;
}

double mean_field_of_theta(const Discretization& disc, const Threshold& theta)
{
    return stationary_distribution(disc, theta).mean;
}

double stationarity_defect(const Discretization& disc, const StationaryDistribution& dist)
{
    const Grid& grid = disc.grid();
    if (!dist.theta.is_interior()) {
        double d = 0.0;
        for (double v : dist.density.values())
            d = std::max(d, std::abs(v));
        const bool at_one = dist.theta.kind() != Threshold::Kind::zero;
        d = std::max(d, std::abs(dist.atom0 - (at_one ? 0.0 : 1.0)));
        if (dist.atom_at_one != at_one)
            d = std::max(d, 1.0);
        return d;
    }
    const TransitionKernel& k = disc.kernel();
    const double th = dist.theta.value();
    const auto pk = dist.density_knots();
    const auto xs = pk.x();
    const auto ys = pk.y();

    auto push = [&](double x) {
        const double upper = std::min(x, th);
        std::vector<double> pts, vals;
        for (std::size_t i = 0; i < xs.size() && xs[i] < upper; ++i) {
            pts.push_back(xs[i]);
            vals.push_back(ys[i]);
        }
        pts.push_back(upper);
        vals.push_back(pk(upper));
        const auto w = trapezoid_weights(pts);
        double s = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            s += w[i] * k.density(x, pts[i]) * vals[i];
        return s + dist.atom0 * k.density(x, 0.0);
    };

    double d = std::abs(pk.integrate(th, 1.0) - dist.atom0);
    for (int j = 0; j < grid.size(); ++j)
        d = std::max(d, std::abs(push(grid.node(j)) - dist.density[j]));
    d = std::max(d, std::abs(push(th) - dist.density_at_theta));
    return d;
}

double UniformStationary::density(double x) const
{
    return x < theta ? pi0 / (1.0 - x) : pi0 / (1.0 - theta);
}

double UniformStationary::mean_derivative() const
{
    const double l = std::log(1.0 - theta);
    return (l - 3.0 + 4.0 / (1.0 - theta)) / (2.0 * (2.0 - l) * (2.0 - l));
}

UniformStationary closed_form_uniform_stationary(double theta)
{
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("closed-form stationary law needs theta in (0,1)");
    const double l = std::log(1.0 - theta);
    const double pi0 = 1.0 / (2.0 - l);
    return {theta, pi0, pi0 * ((1.0 - theta) / 2.0 - l)};
}

} // namespace bmfg
