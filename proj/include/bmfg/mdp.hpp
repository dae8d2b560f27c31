#pragma once

#include "bmfg/kernels.hpp"
#include "bmfg/numerics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bmfg {

/// Scalar cost ingredient on [0,1] together with its derivative.
struct CostComponent {
    std::string label;
    std::function<double(double)> value;
    std::function<double(double)> derivative;

    double operator()(double t) const { return value(t); }

    /// offset + slope * t
    static CostComponent linear(double slope = 1.0, double offset = 0.0);
    /// offset + t^k
    static CostComponent power(double k, double offset = 0.0);
    /// offset + piecewise-linear interpolation of (t_i, v_i)
    static CostComponent tabulated(std::vector<double> t, std::vector<double> v, double offset = 0.0);
    static CostComponent constant(double c);
};

/// One-stage cost R(x,z) + gamma * 1{act}, discounted by beta.
///
/// The product form R(x,z) = R1(x) R2(z) is the one the equilibrium and
/// sensitivity modules rely on; a general joint R may override it for the
/// single-agent problem.
struct CostModel {
    CostComponent r1;
    CostComponent r2;
    std::function<double(double, double)> general_r;
    double gamma = 0.0;
    double beta = 0.0;

    static CostModel product(CostComponent r1, CostComponent r2, double gamma, double beta);
    static CostModel general(std::function<double(double, double)> r, double gamma, double beta);
    /// R1(x) = x, R2(z) = c + z.
    static CostModel linear(double c, double gamma, double beta);

    bool product_form() const { return !general_r; }
    double cost(double x, double z) const { return general_r ? general_r(x, z) : r1(x) * r2(z); }
    CostModel with_gamma(double g) const;

    /// Checks discount and effort-cost ranges plus monotonicity of R on the
    /// grid nodes; throws std::invalid_argument naming the failed condition.
    void validate(const Grid& grid) const;
};

/// Best-response threshold: act exactly when x >= theta. AboveOne never acts.
class Threshold {
public:
    enum class Kind { zero, interior, one, above_one };

    static Threshold zero() { return Threshold(Kind::zero, 0.0); }
    static Threshold interior(double x);
    static Threshold one() { return Threshold(Kind::one, 1.0); }
    static Threshold above_one() { return Threshold(Kind::above_one, 1.0); }
    /// zero/one/above_one for exact 0, 1 and values > 1; interior otherwise.
    static Threshold from_value(double x);

    Kind kind() const { return kind_; }
    bool is_interior() const { return kind_ == Kind::interior; }
    /// 0, x*, 1, or +inf for above_one.
    double numeric() const;
    double value() const { return value_; }
    bool acts_at(double x) const;
    std::string tag() const;
    static Threshold from_tag(const std::string& tag, double value);

    bool operator==(const Threshold&) const = default;

private:
    Threshold(Kind k, double v) : kind_(k), value_(v) {}
    Kind kind_;
    double value_;
};

struct ValueFunction {
    GridFunction v;
    GridFunction G; // G(x) = int v(y) Q0(dy|x)
    double z = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

struct SolverOptions {
    double tol = 1e-8;
    int max_iterations = 1'000'000;
    /// Classification band for D(1) = 0; non-positive means 10 * tol.
    double threshold_tol = -1.0;

    double tol_d() const { return threshold_tol > 0.0 ? threshold_tol : 10.0 * tol; }
};

/// (L g)(x) = min{ beta E_x g + R(x,z), beta g(0) + R(x,z) + gamma } at every node.
GridFunction bellman_operator(const GridFunction& g, const CostModel& model,
                              const Discretization& disc, double z);

/// Same operator with the action fixed by a threshold policy.
GridFunction policy_operator(const GridFunction& g, const CostModel& model,
                             const Discretization& disc, double z, const Threshold& policy);

/// Value iteration from v0 = 0 (or from `start`) until the sup-norm update
/// drops below tol (1-beta) / (2 beta).
ValueFunction solve_value_function(const CostModel& model, const Discretization& disc, double z,
                                   const SolverOptions& opts = {},
                                   const GridFunction* start = nullptr);

/// Reads the optimal policy off D(x) = beta G(x) - beta v(0) - gamma.
Threshold extract_threshold(const ValueFunction& vf, const SolverOptions& opts = {});

/// V solving V = beta E V + R(., z): the never-act value.
GridFunction solve_uncontrolled_value(const CostModel& model, const Discretization& disc, double z,
                                      const SolverOptions& opts = {});

struct GammaBounds {
    double gamma_zero;      // gamma <= this  <=>  threshold zero
    double gamma_above_one; // gamma >  this  <=>  never act
};

GammaBounds gamma_bounds(const CostModel& model, const Discretization& disc, double z,
                         const SolverOptions& opts = {});

struct CurvePoint {
    double r;
    Threshold theta;
};

struct CostCurve {
    std::vector<CurvePoint> points;
    double r_lower = 0.0; // sup of costs giving threshold zero
    double r_upper = 0.0; // inf of costs giving never-act
};

/// Threshold as a function of the effort cost r for the single-agent
/// problem with running cost R1(x) and discount rho.
CostCurve threshold_cost_curve(const CostComponent& r1, const Discretization& disc, double rho,
                               const std::vector<double>& r_values, const SolverOptions& opts = {});

/// Evenly spaced costs on [r_lower, r_upper], both included.
std::vector<double> cost_ladder(double r_lower, double r_upper, int points);

} // namespace bmfg
