#include "bmfg/sensitivity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>

namespace bmfg {

BranchFunction::BranchFunction(double theta, PiecewiseLinear lower, PiecewiseLinear upper)
    : theta_(theta), lower_(std::move(lower)), upper_(std::move(upper))
{
    if (lower_.x().empty() || upper_.x().empty())
        throw std::invalid_argument("branch function needs knots on both branches");
}

double BranchFunction::operator()(double x) const { return x <= theta_ ? lower_(x) : upper_(x); }
double BranchFunction::left_limit() const { return lower_.y().back(); }
double BranchFunction::right_limit() const { return upper_.y().front(); }

std::string to_string(SensitivityMethod m)
{
    switch (m) {
    case SensitivityMethod::general_kernel: return "general-kernel";
    case SensitivityMethod::uniform_closed_form: return "uniform-closed-form";
    case SensitivityMethod::finite_difference: return "finite-difference";
    }
    return "?";
}

namespace {

// {a, grid nodes strictly inside (a, b), b}
std::vector<double> knots(const Grid& grid, double a, double b)
{
    std::vector<double> pts{a};
    for (int j = grid.floor_index(a) + 1; j <= grid.n() && grid.node(j) < b; ++j)
        if (grid.node(j) > a)
            pts.push_back(grid.node(j));
    pts.push_back(b);
    return pts;
}

template <class F>
double integrate_q(const TransitionKernel& k, const Grid& grid, double x, double a, double b, F&& f)
{
    if (b <= a)
        return 0.0;
    const auto pts = knots(grid, a, b);
    const auto w = trapezoid_weights(pts);
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        s += w[i] * f(pts[i]) * k.density(pts[i], x);
    return s;
}

void require_interior(const EquilibriumSolution& eq)
{
    if (!eq.theta.is_interior())
        throw std::invalid_argument("sensitivities need an interior equilibrium threshold, got " + eq.theta.tag());
}

} // namespace

WSolution solve_w_equation(const GameModel& model, double theta, double z, double c0, double kappa)
{
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("w equation needs theta in (0,1)");
    const Grid& grid = model.grid();
    const TransitionKernel& k = model.kernel();
    const CostModel& cost = model.cost();
    if (!cost.product_form())
        throw std::invalid_argument("w equation needs a product-form cost");
    const double beta = cost.beta;
    const double s = cost.r2.derivative(z);

    // lower knots: nodes below theta, then theta itself
    std::vector<double> xs;
    for (int j = 0; j <= grid.n() && grid.node(j) < theta; ++j)
        xs.push_back(grid.node(j));
    xs.push_back(theta);
    const std::size_t L = xs.size();

    // row i holds weights for knots i..L-1, scaled to the exact mass of [x_i, theta]
    std::vector<std::size_t> offset(L + 1, 0);
    for (std::size_t i = 0; i < L; ++i)
        offset[i + 1] = offset[i] + (L - i);
    std::vector<double> weights(offset[L], 0.0);
    std::vector<double> upper_mass(L), upper_r1(L), forcing(L);
    for (std::size_t i = 0; i < L; ++i) {
        const double x = xs[i];
        const double low_mass = k.cdf(theta, x);
        if (i + 1 < L) {
            const auto w = trapezoid_weights(std::span<const double>(xs).subspan(i));
            double raw = 0.0;
            for (std::size_t m = 0; m < w.size(); ++m) {
                weights[offset[i] + m] = w[m] * k.density(xs[i + m], x);
                raw += weights[offset[i] + m];
            }
            if (raw > 0.0)
                for (std::size_t m = 0; m < w.size(); ++m)
                    weights[offset[i] + m] *= low_mass / raw;
        }
        upper_mass[i] = 1.0 - low_mass;
        upper_r1[i] = integrate_q(k, grid, x, theta, 1.0, cost.r1.value);
        forcing[i] = cost.r1(x) * s * c0;
    }

    const double stop = model.tol().bellman * (1.0 - beta) / (2.0 * beta);
    std::vector<double> W(L, 0.0), next(L);
    std::vector<double> history;
    const int cap = 1'000'000;
    int it = 0;
    for (;;) {
        if (++it > cap)
            throw SolverError("iteration cap exceeded in w equation");
        const double up_const = beta * W[0] + kappa;
        double change = 0.0;
        for (std::size_t i = 0; i < L; ++i) {
            double e = 0.0;
            const double* row = weights.data() + offset[i];
            for (std::size_t m = 0; i + m < L; ++m)
                e += row[m] * W[i + m];
            e += up_const * upper_mass[i] + s * c0 * upper_r1[i];
            next[i] = beta * e + forcing[i];
            change = std::max(change, std::abs(next[i] - W[i]));
        }
        W.swap(next);
        history.push_back(change);
        if (change <= stop)
            break;
    }

    std::vector<double> ux{theta}, uy;
    for (int j = grid.floor_index(theta) + 1; j <= grid.n(); ++j)
        if (grid.node(j) > theta)
            ux.push_back(grid.node(j));
    for (double x : ux)
        uy.push_back(beta * W[0] + cost.r1(x) * s * c0 + kappa);
    if (ux.size() == 1) {
        ux.push_back(1.0);
        uy.push_back(uy.front());
    }
    BranchFunction w(theta, PiecewiseLinear(std::move(xs), std::move(W)), PiecewiseLinear(std::move(ux), std::move(uy)));
    return {std::move(w), it, std::move(history)};
}

WBasis solve_w_basis(const GameModel& model, const EquilibriumSolution& eq)
{
    require_interior(eq);
    const double th = eq.theta.value();
    return {solve_w_equation(model, th, eq.z, 0.0, 1.0), solve_w_equation(model, th, eq.z, 1.0, 0.0)};
}

SensitivityResult solve_sensitivities(const GameModel& model, const EquilibriumSolution& eq, MeanDerivative route)
{
    require_interior(eq);
    const CostModel& cost = model.cost();
    if (!cost.product_form())
        throw std::invalid_argument("sensitivities need a product-form cost");
    const TransitionKernel& k = model.kernel();
    const Grid& grid = model.grid();
    const double beta = cost.beta;
    const double th = eq.theta.value();
    const double zb = eq.z;
    const double s = cost.r2.derivative(zb);

    // Threshold coefficient. On [theta, 1] the value is beta v(0) + R + gamma,
    // and int dq/dx over [x,1] equals q(x|x), so only R(y) - R(theta) remains.
    double upper = 1.0;
    bool truncated = false;
    if (!std::isfinite(k.density_dx(1.0, th))) {
        upper = 1.0 - grid.h();
        truncated = true;
    }
    const double r_th = cost.cost(th, zb);
    double lambda = 0.0;
    {
        const auto pts = knots(grid, th, upper);
        const auto w = trapezoid_weights(pts);
        for (std::size_t i = 0; i < pts.size(); ++i)
            lambda += w[i] * (cost.cost(pts[i], zb) - r_th) * k.density_dx(pts[i], th);
        lambda *= beta;
    }

    const WBasis basis = solve_w_basis(model, eq);
    const double a0 = basis.a.w.lower().y().front();
    const double b0 = basis.b.w.lower().y().front();
    const double n_th = integrate_q(k, grid, th, th, 1.0, cost.r1.value);

    double z_prime = 0.0;
    const bool closed = route == MeanDerivative::closed_form ||
                        (route == MeanDerivative::automatic && k.is_uniform());
    if (closed) {
        if (!k.is_uniform())
            throw std::invalid_argument("closed-form dz/dtheta needs the uniform kernel");
        z_prime = closed_form_uniform_stationary(th).mean_derivative();
    } else {
        const double d = 1e-3;
        if (!(th - d > 0.0 && th + d < 1.0))
            throw SolverError("threshold too close to the boundary for a finite-difference dz/dtheta");
        const auto& disc = model.discretization();
        z_prime = (mean_field_of_theta(disc, Threshold::interior(th + d)) -
                   mean_field_of_theta(disc, Threshold::interior(th - d))) /
                  (2.0 * d);
    }

    // lambda * theta_gamma = alpha0 + alpha1 * z_gamma, z_gamma = z' theta_gamma
    const double alpha0 = (1.0 - beta) * (1.0 + beta * a0);
    const double alpha1 = (1.0 - beta) * beta * b0 - beta * s * n_th;
    const double denom = lambda - alpha1 * z_prime;
    if (std::abs(denom) <= 1e-12 * std::max(1.0, std::abs(lambda)))
        throw SolverError("singular coupling in threshold sensitivity");
    const double theta_gamma = alpha0 / denom;
    const double z_gamma = z_prime * theta_gamma;

    auto combine = [z_gamma](const PiecewiseLinear& a, const PiecewiseLinear& b) {
        std::vector<double> x(a.x().begin(), a.x().end()), y(a.y().size());
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] = a.y()[i] + z_gamma * b.y()[i];
        return PiecewiseLinear(std::move(x), std::move(y));
    };
    BranchFunction w(th, combine(basis.a.w.lower(), basis.b.w.lower()), combine(basis.a.w.upper(), basis.b.w.upper()));
    const auto method = closed ? SensitivityMethod::uniform_closed_form
                        : route == MeanDerivative::finite_difference ? SensitivityMethod::finite_difference
                                                                     : SensitivityMethod::general_kernel;
    return {std::move(w), a0 + z_gamma * b0, theta_gamma, z_gamma, z_prime, method, lambda, truncated};
}

namespace {

UniformEquilibrium closed_form_at(double theta, double c, double gamma, double beta)
{
    const double z = closed_form_uniform_stationary(theta).z;
    const double a = std::pow(1.0 - theta, beta - 1.0);
    const double v0 = (beta * (c + z) * (a - 1.0) / ((1.0 - beta) * (2.0 - beta)) -
                       beta * (c + z) * theta / (2.0 - beta) + gamma) /
                      (a - beta);
    return {v0, theta, z};
}

double closed_form_residual(double theta, double c, double gamma, double beta)
{
    const auto e = closed_form_at(theta, c, gamma, beta);
    return theta - (2.0 * (1.0 - beta) * (beta * e.v0 + gamma) / (beta * (c + e.z)) - 1.0);
}

} // namespace

UniformEquilibrium solve_uniform_equilibrium_closed_form(double c, double gamma, double beta)
{
    if (!(beta > 0.0 && beta < 1.0) || !(gamma > 0.0) || !(c > 0.0))
        throw std::invalid_argument("closed form needs c > 0, gamma > 0, beta in (0,1)");
    double lo = 1e-9, hi = 1.0 - 1e-9;
    double f_lo = closed_form_residual(lo, c, gamma, beta);
    const double f_hi = closed_form_residual(hi, c, gamma, beta);
    if (!std::isfinite(f_lo) || !std::isfinite(f_hi) || (f_lo > 0.0) == (f_hi > 0.0))
        throw SolverError("no interior root of the closed-form equilibrium system");
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f = closed_form_residual(mid, c, gamma, beta);
        if ((f > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    return closed_form_at(0.5 * (lo + hi), c, gamma, beta);
}

UniformSensitivity solve_uniform_sensitivity_closed_form(const UniformEquilibrium& eq, double gamma, double beta,
                                                         double c)
{
    const double th = eq.theta, z = eq.z, v0 = eq.v0;
    const double a = std::pow(1.0 - th, beta - 1.0);
    const double A = ((1.0 - beta) * (beta * v0 + gamma) - beta * th * (z + c)) / (1.0 - th);
    const double B = (1.0 + th) / 2.0 + a / ((1.0 - beta) * (2.0 - beta)) + (1.0 - th) / (2.0 - beta) -
                     1.0 / (1.0 - beta);
    const double C = closed_form_uniform_stationary(th).mean_derivative();

    // unknowns (w0, theta_gamma, z_gamma)
    const std::array<std::array<double, 3>, 3> M{{{-beta * (1.0 - beta), A, beta * (1.0 + th) / 2.0},
                                                  {a / beta - beta, 0.0, -B},
                                                  {0.0, -C, 1.0}}};
    const std::array<double, 3> rhs{1.0 - beta, 1.0, 0.0};
    auto det = [](const std::array<std::array<double, 3>, 3>& m) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double d = det(M);
    if (!(std::abs(d) >= 1e-12))
        throw SolverError("singular system in closed-form sensitivities");
    std::array<double, 3> sol{};
    for (int col = 0; col < 3; ++col) {
        auto m = M;
        for (int row = 0; row < 3; ++row)
            m[row][col] = rhs[row];
        sol[col] = det(m) / d;
    }
    return {sol[0], sol[1], sol[2]};
}

FiniteDifferenceReport finite_difference_check(const GameModel& model, const EquilibriumSolution& eq, double eps,
                                               const SensitivityResult* analytic)
{
    require_interior(eq);
    if (!(eps > 0.0))
        throw std::invalid_argument("eps must be positive");
    const double g = model.cost().gamma;
    const GameModel plus = model.with_gamma(g + eps);
    const GameModel minus = model.with_gamma(g - eps);
    auto fut = std::async(std::launch::async, [&] { return solve_equilibrium(plus); });
    const EquilibriumSolution em = solve_equilibrium(minus);
    const EquilibriumSolution ep = fut.get();
    if (!ep.theta.is_interior() || !em.theta.is_interior())
        throw SolverError("non-interior perturbation at eps = " + std::to_string(eps));

    std::optional<SensitivityResult> own;
    if (!analytic) {
        own.emplace(solve_sensitivities(model, eq));
        analytic = &*own;
    }
    auto rel = [](double est, double ref) { return std::abs(est - ref) / std::max(std::abs(ref), 1e-300); };

    FiniteDifferenceReport r{};
    r.eps = eps;
    r.theta_plus = ep.theta.value();
    r.theta_minus = em.theta.value();
    r.z_plus = ep.z;
    r.z_minus = em.z;
    r.theta_gamma_fd = (r.theta_plus - r.theta_minus) / (2.0 * eps);
    r.z_gamma_fd = (r.z_plus - r.z_minus) / (2.0 * eps);
    r.theta_gamma = analytic->theta_gamma;
    r.z_gamma = analytic->z_gamma;
    r.theta_gamma_rel_error = rel(r.theta_gamma_fd, r.theta_gamma);
    r.z_gamma_rel_error = rel(r.z_gamma_fd, r.z_gamma);
    for (double x : {0.2, 0.8}) {
        const double fd = (ep.v.v(x) - em.v.v(x)) / (2.0 * eps);
        const double w = analytic->w(x);
        r.w_probes.push_back({x, fd, w, rel(fd, w)});
    }
    return r;
}

} // namespace bmfg
