#pragma once

#include <string>
#include <vector>

#include "mlbpgd/solver.hpp"

namespace mlbpgd {

// One parsed row of a convergence CSV.
struct TraceRow {
    int iter = 0;
    double fval = 0.0;
    double normalized_fval = 0.0;
    double cpu_seconds = 0.0;
    int deepest_level = 0;
    int triggered = 0;
    double alpha_finest = 1.0;
};

inline constexpr const char* kTraceHeader =
    "iter,fval,normalized_fval,cpu_seconds,deepest_level,triggered,alpha_finest";

// Serializes a solver trace. normalized_fval = (f - f_ref) / (f0 - f_ref),
// clamped into [0,1]; f_ref is the best value across the runs being
// compared. Floats are written with 17 significant digits so a parse gives
// back the exact doubles.
void write_trace_csv(const SolverTrace& trace, double f_ref, const std::string& path);

std::vector<TraceRow> read_trace_csv(const std::string& path);

// Two-series file for plotting single-level against multilevel progress on
// their own cpu-time axes; rows beyond the shorter trace leave that series'
// cells empty.
void emit_plot_data(const SolverTrace& sl, const SolverTrace& ml, double f_ref,
                    const std::string& path);

} // namespace mlbpgd
