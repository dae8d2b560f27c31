#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmfg {

/// Raised when a numerical routine cannot produce a trustworthy answer
/// (degenerate discretization, missing bracket, iteration cap...).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform mesh of [0,1] with n intervals.
class Grid {
public:
    explicit Grid(int n);

    int n() const { return n_; }
    int size() const { return n_ + 1; }
    double h() const { return h_; }

    /// Node x_j = j/n, correctly rounded.
    double node(int j) const { return static_cast<double>(j) / n_; }
    std::vector<double> nodes() const;

    /// Index j of the cell [x_j, x_{j+1}] containing x, clamped to [0, n-1].
    int cell(double x) const;

    /// Largest j with x_j <= x.
    int floor_index(double x) const;

    bool operator==(const Grid& other) const { return n_ == other.n_; }

private:
    int n_;
    double h_;
};

Grid make_grid(int n);

/// Node samples on a Grid, read as the piecewise-linear interpolant.
class GridFunction {
public:
    GridFunction(Grid grid, std::vector<double> values);

    template <class F>
    static GridFunction sample(const Grid& grid, F&& f)
    {
        std::vector<double> v(grid.size());
        for (int j = 0; j < grid.size(); ++j)
            v[j] = f(grid.node(j));
        return GridFunction(grid, std::move(v));
    }

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](int j) const { return values_[j]; }
    double operator()(double x) const;

private:
    Grid grid_;
    std::vector<double> values_;
};

/// Piecewise-linear function on sorted, possibly repeated abscissae.
/// A repeated abscissa carries a jump: the first entry is the left limit,
/// the last one the right limit.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> x, std::vector<double> y);

    static PiecewiseLinear from(const GridFunction& f);

    /// Same function with a knot inserted at b. The value (or the two
    /// one-sided limits, when they differ) is supplied by the caller.
    PiecewiseLinear with_knot(double b, double left, double right) const;

    std::span<const double> x() const { return x_; }
    std::span<const double> y() const { return y_; }

    /// Right-continuous evaluation.
    double operator()(double t) const;

    /// Trapezoid integral over [a,b]; exact for the interpolant.
    double integrate(double a, double b) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

/// Composite trapezoid of f over [a,b]; partial end cells use the linear
/// interpolant, so the result is exact whenever f is linear.
double integrate(const GridFunction& f, double a, double b);

/// Trapezoid weights for the sorted points pts over [pts.front(), pts.back()].
std::vector<double> trapezoid_weights(std::span<const double> pts);

enum class Direction { forward, backward };

struct VolterraSolution {
    GridFunction u;
    /// u at the (possibly off-grid) integration limit. For backward marching
    /// this is the left limit forcing(L), i.e. the start of the march.
    double at_limit;
};

using Kernel2 = std::function<double(double x, double y)>;

/// Second-kind Volterra equation by trapezoidal marching.
///
/// forward:  u(x) = int_0^{min(x,L)} K(x,y) u(y) dy + g(x)
/// backward: u(x) = int_x^{L}        K(x,y) u(y) dy + g(x)   for x < L,
///           u(x) = g(x)                                       for x >= L.
///
/// The diagonal trapezoid weight is moved to the left-hand side; a
/// non-positive factor 1 - w K(x,x) raises SolverError ("diagonal degeneracy").
VolterraSolution solve_volterra(const Kernel2& kernel, const GridFunction& forcing,
                                Direction direction, double upper_limit);

/// Sup-norm distance between two equally sized vectors.
double sup_distance(std::span<const double> a, std::span<const double> b);

} // namespace bmfg
