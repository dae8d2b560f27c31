#pragma once

#include "bmfg/equilibrium.hpp"

#include <string>
#include <vector>

namespace bmfg {

/// Function on [0,1] with a break at theta: one piecewise-linear branch on
/// [0, theta] (left limit at theta included) and one on (theta, 1].
class BranchFunction {
public:
    BranchFunction(double theta, PiecewiseLinear lower, PiecewiseLinear upper);

    double theta() const { return theta_; }
    double operator()(double x) const;
    double left_limit() const;
    double right_limit() const;
    double jump() const { return right_limit() - left_limit(); }

    const PiecewiseLinear& lower() const { return lower_; }
    const PiecewiseLinear& upper() const { return upper_; }

private:
    double theta_;
    PiecewiseLinear lower_;
    PiecewiseLinear upper_;
};

/// Solution of
///   W(x) = beta int W dQ0(.|x) + R1(x) R2'(z) c0            for x <= theta,
///   W(x) = beta W(0) + R1(x) R2'(z) c0 + kappa              for x >  theta.
/// The upper branch is closed form; the lower one is iterated to a fixed point.
struct WSolution {
    BranchFunction w;
    int iterations;
    /// Sup-norm change of each sweep.
    std::vector<double> update_norms;
};

WSolution solve_w_equation(const GameModel& model, double theta, double z, double c0, double kappa);

struct WBasis {
    WSolution a; // c0 = 0, kappa = 1
    WSolution b; // c0 = 1, kappa = 0
};

WBasis solve_w_basis(const GameModel& model, const EquilibriumSolution& eq);

/// Route used for dz/dtheta: closed form, explicit central difference, or the
/// automatic central difference for a non-uniform kernel.
enum class SensitivityMethod { general_kernel, uniform_closed_form, finite_difference };
std::string to_string(SensitivityMethod m);

enum class MeanDerivative { automatic, closed_form, finite_difference };

struct SensitivityResult {
    BranchFunction w;
    double w0;
    double theta_gamma;
    double z_gamma;
    /// dz/dtheta at the equilibrium threshold.
    double z_prime;
    SensitivityMethod method;
    /// Coefficient of theta_gamma in the threshold equation.
    double lambda;
    /// dq/dx was integrated only up to 1 - h because it is unbounded at 1.
    bool truncated;
};

/// theta_gamma, z_gamma and w for a general kernel. z'(theta) comes from the
/// uniform closed form when the kernel is uniform (automatic), otherwise from
/// a central difference of z(theta) with step 1e-3.
SensitivityResult solve_sensitivities(const GameModel& model, const EquilibriumSolution& eq,
                                      MeanDerivative route = MeanDerivative::automatic);

struct UniformEquilibrium {
    double v0;
    double theta;
    double z;
};

/// Root of the closed-form system for R = x (c + z) and the uniform kernel.
UniformEquilibrium solve_uniform_equilibrium_closed_form(double c, double gamma, double beta);

struct UniformSensitivity {
    double w0;
    double theta_gamma;
    double z_gamma;
};

/// 3x3 linear system for (w(0), theta_gamma, z_gamma) of the same model.
UniformSensitivity solve_uniform_sensitivity_closed_form(const UniformEquilibrium& eq, double gamma,
                                                         double beta, double c);

struct FiniteDifferenceReport {
    double eps;
    double theta_plus, theta_minus;
    double z_plus, z_minus;
    double theta_gamma_fd, z_gamma_fd;
    double theta_gamma, z_gamma;
    double theta_gamma_rel_error, z_gamma_rel_error;
    struct Probe {
        double x;
        double w_fd;
        double w;
        double rel_error;
    };
    std::vector<Probe> w_probes; // x = 0.2 and 0.8
};

/// Central differences of the full equilibrium at gamma +- eps against the
/// analytic sensitivities.
FiniteDifferenceReport finite_difference_check(const GameModel& model, const EquilibriumSolution& eq, double eps,
                                               const SensitivityResult* analytic = nullptr);

} // namespace bmfg
