#pragma once

#include "bmfg/equilibrium.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bmfg {

enum class InitialLaw { all_zero, uniform, custom };

struct SimConfig {
    int agents = 1000;
    int horizon = 1000; // T
    std::uint64_t seed = 1;
    InitialLaw initial_law = InitialLaw::all_zero;
    /// Used when initial_law is custom.
    std::optional<StationaryDistribution> custom_law;
    Threshold policy = Threshold::above_one();
    int burn_in = 0;
    /// Number of equal histogram bins on (0,1]; exact zeros are counted apart.
    int histogram_bins = 100;
    int threads = 1;

    void validate() const;
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

struct CycleStats {
    long count = 0;
    double mean_tau = 0.0;
    double tau_std_error = 0.0;
    double mean_length = 0.0; // 1 + tau
    double mean_cycle_sum = 0.0;
    double cycle_sum_std_error = 0.0;
    double ratio = 0.0;
    double std_error = 0.0; // delta method, for the ratio
};

/// Occupation law over the window [burn_in, T): an atom at exactly 0 and
/// bins [k/m, (k+1)/m) for the remaining states (1 falls in the last bin).
struct Histogram {
    double atom0 = 0.0;
    std::vector<double> edges;
    std::vector<double> mass;
};

struct SimStats {
    std::vector<double> trajectory; // population average at t = 0..T-1
    std::vector<double> agent_time_average;
    Estimate pooled_time_average;
    Histogram histogram;
    /// Sorted states of all agents at the last step.
    std::vector<double> terminal_states;
    /// Completed regeneration cycles after burn-in (interior policies only).
    std::optional<CycleStats> cycles;
};

/// N independent chains under a common threshold policy. Deterministic in
/// the seed for any thread count.
SimStats simulate_population(const GameModel& model, const SimConfig& cfg);

/// Regeneration cycles from 0 up to and including the first state >= theta.
CycleStats cycle_statistics(const TransitionKernel& kernel, double theta, long replications, std::uint64_t seed,
                            int threads = 1);

struct Distances {
    double tv;
    double w1;
};

/// Total variation between the binned empirical and analytic laws, and W1
/// between terminal states and analytic quantiles. Throws std::invalid_argument
/// ("bin mismatch") when histogram edges are not grid nodes.
Distances empirical_vs_stationary(const SimStats& stats, const StationaryDistribution& dist);

/// Smallest H with beta^H * max one-stage cost / (1 - beta) < 1e-4.
int required_horizon(const GameModel& model, double z);

/// Discounted cost of the theta-threshold policy from x0 with frozen z.
/// Replication r uses stream (seed, r), so different policies share noise.
Estimate evaluate_policy_cost(const GameModel& model, double z, const Threshold& theta, double x0, long replications,
                              int horizon, std::uint64_t seed, int threads = 1);

} // namespace bmfg
