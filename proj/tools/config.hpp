#pragma once

#include "bmfg/io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmfg::cli {

/// Bad configuration; the message starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SensitivityOptions {
    double eps = 1e-3;
    MeanDerivative z_prime = MeanDerivative::automatic;
};

struct CurveOptions {
    double rho = 0.9;
    int points = 50;
    std::vector<double> thetas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

struct SimulateOptions {
    int agents = 10000;
    int horizon = 2000;
    int burn_in = 500;
    InitialLaw initial_law = InitialLaw::all_zero;
    /// Threshold to simulate; empty means the solved equilibrium threshold.
    std::optional<Threshold> policy;
    int histogram_bins = 100;
    long cycles = 100000;
    long cost_replications = 0;
};

struct RunConfig {
    TransitionKernel kernel = TransitionKernel::uniform();
    CostModel cost = CostModel::linear(0.2, 0.5, 0.9);
    int n = 4000;
    Tolerances tol;
    SensitivityOptions sensitivity;
    CurveOptions curve;
    SimulateOptions simulate;
    std::filesystem::path out_dir = "bmfg-out";
    bool write_csv = true;
    std::uint64_t seed = 1;
    int threads = 1;
    /// Set when R = x (c + z); enables the uniform closed forms.
    std::optional<double> linear_c = 0.2;

    GameModel model() const;
};

/// Parses a JSON run configuration. Unknown keys are rejected; relative
/// paths resolve against base_dir.
RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

} // namespace bmfg::cli
