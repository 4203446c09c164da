#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "mlbpgd/config.hpp"
#include "mlbpgd/solver.hpp"

namespace mlbpgd {

// Numeric side channel of one experiment run, next to the two solver results.
struct RunLog {
    double f_ref = 0.0;          // best objective value across both runs
    int noise_floored = 0;       // zero Poisson outcomes lifted to the floor
    int input_lifted = 0;        // user image pixels raised to a positive floor
    std::vector<int> rows_dropped;  // dead projector rays per level

    // design experiment only
    double top_k_residual = std::numeric_limits<double>::quiet_NaN();
    double equidistant_residual = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> top_angles;
    std::vector<int> equidistant_angles;
};

struct ExperimentResult {
    SolveResult sl;
    SolveResult ml;
    RunLog log;
    std::vector<std::string> files;  // artifacts written under cfg.out_dir
};

ExperimentResult run_deconv(const ExperimentConfig& cfg);
ExperimentResult run_tomo(const ExperimentConfig& cfg);
ExperimentResult run_ddesign(const ExperimentConfig& cfg);

// Dispatches on cfg.experiment (never Selftest).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Cross-module smoke suite: transfer identities, update oracles, sampler
// determinism, gradient checks, bound feasibility, a small multilevel run,
// and artifact roundtrips. Prints one line per check; returns the number of
// failures.
int selftest(std::ostream& out);

} // namespace mlbpgd
