#pragma once

#include "bmfg/kernels.hpp"
#include "bmfg/mdp.hpp"
#include "bmfg/numerics.hpp"

namespace bmfg {

/// Limiting law under a threshold policy: an atom at 0, a density on (0,1],
/// and for the never-act regimes an atom at 1 instead.
struct StationaryDistribution {
    Threshold theta = Threshold::zero();
    double atom0 = 1.0;
    bool atom_at_one = false;
    GridFunction density;
    /// p at the threshold; the density has a kink there that the grid
    /// does not resolve.
    double density_at_theta = 0.0;
    double mean = 0.0;

    /// Density knots with the threshold inserted.
    PiecewiseLinear density_knots() const;
    double mass() const;
    /// P(X <= x).
    double cdf(double x) const;
    /// Probability of (a, b], atoms included.
    double probability(double a, double b) const;
};

StationaryDistribution stationary_distribution(const Discretization& disc, const Threshold& theta);

double mean_field_of_theta(const Discretization& disc, const Threshold& theta);

/// Sup-norm change of (atom0, p) after one pass of the threshold dynamics.
double stationarity_defect(const Discretization& disc, const StationaryDistribution& dist);

/// Exact stationary law of the uniform kernel.
struct UniformStationary {
    double theta;
    double pi0;
    double z;
    double density(double x) const;
    /// dz/dtheta.
    double mean_derivative() const;
};

UniformStationary closed_form_uniform_stationary(double theta);

} // namespace bmfg
