#pragma once

#include "bmfg/numerics.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bmfg {

/// Random stream handed explicitly to every sampling routine.
using Rng = std::mt19937_64;

/// Stream for (seed, index); distinct indices give independent streams.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

/// Density of the gap factor xi on (0,1) for the multiplicative-gap kernel.
struct GapDensity {
    std::string label;
    std::function<double(double)> pdf;
    std::function<double(double)> pdf_derivative;
    std::function<double(double)> cdf;
    std::function<double(double)> inverse_cdf;

    static GapDensity uniform();
    /// f(xi) = a xi^(a-1), a >= 1.
    static GapDensity power(double a);
};

/// Density table on a uniform (m+1)x(m+1) node lattice of [0,1]^2:
/// rows are x nodes, columns y nodes.
struct DensityTable {
    int m = 0;
    std::vector<double> density;                   // row-major, (m+1)^2
    std::optional<std::vector<double>> derivative; // d/dx, same layout

    static DensityTable load_csv(const std::filesystem::path& density_csv,
                                 const std::optional<std::filesystem::path>& derivative_csv = {});
};

/// Inaction transition law Q0(.|x) on [x,1]. State 1 is absorbing.
class TransitionKernel {
public:
    struct Uniform {};
    struct MultiplicativeGap {
        GapDensity xi;
    };
    struct Tabulated {
        std::shared_ptr<const DensityTable> table;
    };

    static TransitionKernel uniform();
    static TransitionKernel multiplicative_gap(GapDensity xi = GapDensity::uniform());
    static TransitionKernel tabulated(DensityTable table);

    /// q(y|x); zero for y < x. Requires 0 <= x < 1.
    double density(double y, double x) const;
    /// dq(y|x)/dx.
    double density_dx(double y, double x) const;
    /// Q0([x, y] | x).
    double cdf(double y, double x) const;
    double sample(double x, Rng& rng) const;

    /// q(y|x) does not depend on y on its support (uniform kernel).
    bool flat_in_y() const { return std::holds_alternative<Uniform>(impl_); }
    bool is_uniform() const { return flat_in_y(); }
    bool has_derivative() const;
    std::string name() const;

private:
    using Impl = std::variant<Uniform, MultiplicativeGap, Tabulated>;
    explicit TransitionKernel(Impl impl) : impl_(std::move(impl)) {}
    Impl impl_;
};

/// Kernel expectations on a grid: (Pf)(x_j) = int f(y) Q0(dy|x_j) by the
/// trapezoid rule on the nodes of [x_j, 1], with each row normalized to unit
/// mass. At x = 1 the state is absorbing and (Pf)(1) = f(1).
class Discretization {
public:
    Discretization(TransitionKernel kernel, Grid grid);

    const TransitionKernel& kernel() const { return kernel_; }
    const Grid& grid() const { return grid_; }

    std::vector<double> expect(std::span<const double> f) const;
    GridFunction expect(const GridFunction& f) const;

    /// int_x^upper f(y) q(y|x) dy on the knots {x, nodes in (x, upper), upper}.
    /// Not normalized.
    double integrate_against(double x, const std::function<double(double)>& f,
                             double upper = 1.0) const;
    /// Same with dq/dx in place of q.
    double integrate_against_dx(double x, const std::function<double(double)>& f,
                                double upper = 1.0) const;

private:
    TransitionKernel kernel_;
    Grid grid_;
    // packed upper triangle of normalized weights (row j holds columns j..n),
    // empty for flat kernels
    std::shared_ptr<const std::vector<double>> weights_;
    std::vector<std::size_t> row_offset_;
};

enum class Verdict { strict, monotone, violated };
std::string to_string(Verdict v);

struct FunctionVerdict {
    std::string test_function;
    Verdict verdict = Verdict::strict;
    // first offending node pair (x_j, x_{j+1}), when not strict
    std::optional<std::pair<double, double>> at;
};

struct MonotonicityReport {
    std::vector<FunctionVerdict> functions;
    Verdict cdf_dominance = Verdict::strict;
    Verdict overall = Verdict::strict;
};

/// Probes strict stochastic monotonicity with psi_m(y) = y^m, m in {1,2,3,5},
/// plus pointwise CDF dominance between neighbouring nodes.
MonotonicityReport check_stochastic_monotonicity(const TransitionKernel& kernel, const Grid& grid);

/// E[tau | Y_0 = 0] for tau = inf{t : Y_t >= theta} under the inaction chain.
double expected_hitting_time(const TransitionKernel& kernel, double theta, const Grid& grid);

} // namespace bmfg
