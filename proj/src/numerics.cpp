#include "bmfg/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bmfg {

Grid::Grid(int n) : n_(n), h_(0.0)
{
    if (n < 2)
        throw std::invalid_argument("grid needs at least 2 intervals, got " + std::to_string(n));
    h_ = 1.0 / n;
}

std::vector<double> Grid::nodes() const
{
    std::vector<double> x(size());
    for (int j = 0; j < size(); ++j)
        x[j] = node(j);
    return x;
}

int Grid::floor_index(double x) const
{
    if (x <= 0.0)
        return 0;
    if (x >= 1.0)
        return n_;
    int j = static_cast<int>(std::floor(x * n_));
    // guard against rounding in x*n
    while (j < n_ && node(j + 1) <= x)
        ++j;
    while (j > 0 && node(j) > x)
        --j;
    return j;
}

int Grid::cell(double x) const { return std::min(floor_index(x), n_ - 1); }

Grid make_grid(int n) { return Grid(n); }

GridFunction::GridFunction(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values))
{
    if (static_cast<int>(values_.size()) != grid_.size())
        throw std::invalid_argument("GridFunction: expected " + std::to_string(grid_.size()) +
                                    " values, got " + std::to_string(values_.size()));
    for (double v : values_)
        if (!std::isfinite(v))
            throw std::invalid_argument("GridFunction: non-finite value");
}

double GridFunction::operator()(double x) const
{
    x = std::clamp(x, 0.0, 1.0);
    const int j = grid_.cell(x);
    const double x0 = grid_.node(j), x1 = grid_.node(j + 1);
    const double t = (x - x0) / (x1 - x0);
    return values_[j] + t * (values_[j + 1] - values_[j]);
}

PiecewiseLinear::PiecewiseLinear(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y))
{
    if (x_.size() != y_.size() || x_.empty())
        throw std::invalid_argument("PiecewiseLinear: mismatched or empty knots");
    if (!std::is_sorted(x_.begin(), x_.end()))
        throw std::invalid_argument("PiecewiseLinear: abscissae must be sorted");
}

PiecewiseLinear PiecewiseLinear::from(const GridFunction& f)
{
    return PiecewiseLinear(f.grid().nodes(), std::vector<double>(f.values().begin(), f.values().end()));
}

PiecewiseLinear PiecewiseLinear::with_knot(double b, double left, double right) const
{
    std::vector<double> x, y;
    x.reserve(x_.size() + 2);
    y.reserve(y_.size() + 2);
    bool placed = false;
    auto place = [&] {
        x.push_back(b);
        y.push_back(left);
        if (right != left) {
            x.push_back(b);
            y.push_back(right);
        }
        placed = true;
    };
    for (std::size_t i = 0; i < x_.size(); ++i) {
        if (x_[i] == b)
            continue;
        if (!placed && x_[i] > b)
            place();
        x.push_back(x_[i]);
        y.push_back(y_[i]);
    }
    if (!placed)
        place();
    return PiecewiseLinear(std::move(x), std::move(y));
}

double PiecewiseLinear::operator()(double t) const
{
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    if (it == x_.begin())
        return y_.front();
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    if (i + 1 >= x_.size())
        return y_.back();
    const double w = x_[i + 1] - x_[i];
    if (w <= 0.0)
        return y_[i + 1];
    return y_[i] + (t - x_[i]) / w * (y_[i + 1] - y_[i]);
}

double PiecewiseLinear::integrate(double a, double b) const
{
    if (a > b)
        throw std::invalid_argument("integrate: a > b");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
        const double x0 = x_[i], x1 = x_[i + 1];
        if (x1 <= x0 || x1 <= a || x0 >= b)
            continue;
        const double lo = std::max(a, x0), hi = std::min(b, x1);
        const double slope = (y_[i + 1] - y_[i]) / (x1 - x0);
        const double flo = y_[i] + slope * (lo - x0);
        const double fhi = y_[i] + slope * (hi - x0);
        s += 0.5 * (hi - lo) * (flo + fhi);
    }
    return s;
}

double integrate(const GridFunction& f, double a, double b)
{
    if (a > b)
        throw std::invalid_argument("integrate: a > b");
    if (a < 0.0 || b > 1.0)
        throw std::invalid_argument("integrate: limits outside [0,1]");
    if (a == b)
        return 0.0;
    const Grid& g = f.grid();
    const int j0 = g.cell(a), j1 = g.cell(b);
    double s = 0.0;
    for (int j = j0; j <= j1; ++j) {
        const double x0 = g.node(j), x1 = g.node(j + 1);
        const double lo = std::max(a, x0), hi = std::min(b, x1);
        if (hi <= lo)
            continue;
        if (lo == x0 && hi == x1) {
            s += 0.5 * (x1 - x0) * (f[j] + f[j + 1]);
        } else {
            const double slope = (f[j + 1] - f[j]) / (x1 - x0);
            s += 0.5 * (hi - lo) * (2.0 * f[j] + slope * (lo - x0 + hi - x0));
        }
    }
    return s;
}

std::vector<double> trapezoid_weights(std::span<const double> pts)
{
    std::vector<double> w(pts.size(), 0.0);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double d = 0.5 * (pts[i + 1] - pts[i]);
        w[i] += d;
        w[i + 1] += d;
    }
    return w;
}

namespace {

void check_diagonal(double factor, double x)
{
    if (!(factor > 0.0))
        throw SolverError("diagonal degeneracy in Volterra marching at x=" + std::to_string(x) +
                          " (refine grid)");
}

VolterraSolution march_forward(const Kernel2& K, const GridFunction& g, double L)
{
    const Grid& grid = g.grid();
    const int n = grid.n();
    const double h = grid.h();
    std::vector<double> u(grid.size(), 0.0);

    const int k = grid.floor_index(L);
    u[0] = g[0];
    for (int j = 1; j <= k; ++j) {
        const double xj = grid.node(j);
        double s = 0.5 * K(xj, 0.0) * u[0];
        for (int i = 1; i < j; ++i)
            s += K(xj, grid.node(i)) * u[i];
        s *= h;
        const double diag = 1.0 - 0.5 * h * K(xj, xj);
        check_diagonal(diag, xj);
        u[j] = (s + g[j]) / diag;
    }

    // quadrature points {x_0..x_k, L}
    const double delta = L - grid.node(k);
    const bool partial = delta > 1e-14 && k < n;
    std::vector<double> pts;
    pts.reserve(k + 2);
    for (int i = 0; i <= k; ++i)
        pts.push_back(grid.node(i));
    if (partial)
        pts.push_back(L);
    const std::vector<double> w = trapezoid_weights(pts);

    double uL = u[k];
    if (partial) {
        double s = 0.0;
        for (int i = 0; i <= k; ++i)
            s += w[i] * K(L, pts[i]) * u[i];
        const double diag = 1.0 - w.back() * K(L, L);
        check_diagonal(diag, L);
        uL = (s + g(L)) / diag;
    }

    for (int j = k + 1; j <= n; ++j) {
        const double xj = grid.node(j);
        double s = 0.0;
        for (int i = 0; i <= k; ++i)
            s += w[i] * K(xj, pts[i]) * u[i];
        if (partial)
            s += w.back() * K(xj, L) * uL;
        u[j] = s + g[j];
    }
    return {GridFunction(grid, std::move(u)), uL};
}

VolterraSolution march_backward(const Kernel2& K, const GridFunction& g, double L)
{
    const Grid& grid = g.grid();
    const double h = grid.h();
    std::vector<double> u(g.values().begin(), g.values().end());
    const double uL = g(L);

    // largest k with x_k < L
    int k = grid.floor_index(L);
    if (grid.node(k) >= L)
        --k;
    if (k < 0)
        return {GridFunction(grid, std::move(u)), uL};

    const double delta = L - grid.node(k);
    for (int j = k; j >= 0; --j) {
        const double xj = grid.node(j);
        double wj, s;
        if (j == k) {
            wj = 0.5 * delta;
            s = 0.5 * delta * K(xj, L) * uL;
        } else {
            wj = 0.5 * h;
            s = 0.0;
            for (int i = j + 1; i < k; ++i)
                s += h * K(xj, grid.node(i)) * u[i];
            s += 0.5 * (h + delta) * K(xj, grid.node(k)) * u[k];
            s += 0.5 * delta * K(xj, L) * uL;
        }
        const double diag = 1.0 - wj * K(xj, xj);
        check_diagonal(diag, xj);
        u[j] = (s + g[j]) / diag;
    }
    return {GridFunction(grid, std::move(u)), uL};
}

} // namespace

VolterraSolution solve_volterra(const Kernel2& kernel, const GridFunction& forcing,
                                Direction direction, double upper_limit)
{
    if (!(upper_limit >= 0.0 && upper_limit <= 1.0))
        throw std::invalid_argument("solve_volterra: upper limit outside [0,1]");
    return direction == Direction::forward ? march_forward(kernel, forcing, upper_limit)
                                           : march_backward(kernel, forcing, upper_limit);
}

double sup_distance(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("sup_distance: size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace bmfg
