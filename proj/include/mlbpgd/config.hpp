#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlbpgd/hierarchy.hpp"
#include "mlbpgd/solver.hpp"

namespace mlbpgd {

enum class ExperimentKind { Deconv, Tomo, DDesign, Selftest };

const char* experiment_name(ExperimentKind k);
ExperimentKind parse_experiment(const std::string& name);

// Flat experiment description. Grid sides are always 2^j - 1, derived from
// the exponent, so the transfer operators never truncate.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Selftest;
    int grid_exponent = 6;
    int levels = 3;
    std::vector<int> smoothing;  // finest level first
    TriggerParams trigger;
    ArmijoParams armijo;
    int psf_dim = 9;
    double psf_sigma = 1.5;
    double noise_lambda = 1000.0;
    std::vector<int> angles;     // per level (projector experiments)
    std::vector<int> detectors;  // per level
    int iters = 200;
    int ls_iters = 300;          // least-squares reconstruction budget
    std::uint64_t seed = 42;
    std::string input_image;     // empty -> synthetic phantom
    std::string out_dir = "out";

    int fine_side() const { return (1 << grid_exponent) - 1; }
    int side_at(int level) const { return (1 << (grid_exponent - level)) - 1; }

    // Cross-field consistency; throws ConfigError.
    void validate() const;

    // Re-derives per-level lists after a --levels override: smoothing and
    // angle counts repeat their last entry, detector counts follow the grid
    // sides. Lists already the right length are left alone.
    void reconcile();
};

// Paper-derived defaults at desk scale.
ExperimentConfig default_config(ExperimentKind kind);

// Defaults for `kind` overlaid with the key = value entries of `path`
// (empty path skips the file). Unknown keys and malformed values throw
// ConfigError. The result is not yet validated; CLI overrides come first.
ExperimentConfig load_config(ExperimentKind kind, const std::string& path);

} // namespace mlbpgd
