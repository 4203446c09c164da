#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "mlbpgd/geometry.hpp"
#include "mlbpgd/grid_vector.hpp"
#include "mlbpgd/hierarchy.hpp"
#include "mlbpgd/objectives.hpp"

namespace mlbpgd {

struct ArmijoParams {
    double sigma = 1e-4;
    double beta = 0.5;
    double alpha_bar = 1.0;

    void validate() const;  // sigma, beta in (0,1); alpha_bar in (0,1]
};

// One row per outer iteration; row 0 is the starting point. Coarse work is
// summarized (deepest level, per-level flags), never recorded as extra rows.
struct IterRecord {
    int iter = 0;
    double fval = 0.0;
    double seconds = 0.0;  // wall clock since the run started, monotonic
    int deepest_level = 0;
    std::vector<unsigned char> triggered;  // [l]: descent from level l fired
    std::vector<double> alpha;             // [l]: applied line-search step
    double step_divergence = 0.0;          // D_phi(previous iterate, this one)

    bool any_triggered() const {
        for (unsigned char t : triggered)
            if (t) return true;
        return false;
    }
    double alpha_finest() const {
        return alpha.empty() ? std::numeric_limits<double>::quiet_NaN() : alpha[0];
    }
};

struct SolverTrace {
    std::vector<IterRecord> records;
};

// Runtime checks of the properties the convergence theory promises. All are
// recorded unconditionally; the counters should stay zero on healthy runs.
struct InvariantReport {
    // Sufficient descent f(x+) <= f(x) - D_phi(x, x+)/tau at every update.
    double worst_descent_excess = -std::numeric_limits<double>::infinity();
    int descent_violations = 0;  // excess beyond 1e-10 * |f(x)|
    // First-order coherence of each coarse model, relative to the target.
    double worst_coherence_residual = 0.0;
    int corrections_applied = 0;
    int corrections_skipped = 0;     // zero coarse movement or non-descent d
    int descent_sign_failures = 0;   // nonzero d with <grad, d> >= 0
    int line_search_failures = 0;    // Armijo exhausted; correction skipped
    int feasibility_failures = 0;    // recorded iterate not strictly interior
    int truncated_visits = 0;        // coarse smoothing cut short by a RootError
    int post_smooth_fallbacks = 0;   // post-smoothing RootError, kept the z point
    int bound_nudges = 0;            // adapted bounds pushed off an anchor
};

struct SolveResult {
    GridVector x;
    SolverTrace trace;
    InvariantReport report;
};

struct ArmijoResult {
    double alpha;
    GridVector x;
};

// Backtracking line search: largest alpha_bar * beta^m, m <= 60, whose point
// is strictly interior to both the region and the geometry's domain and
// satisfies value(x + alpha d) <= value(x) + sigma * alpha * <grad, d>.
// at_x must be the model's evaluation at x.
ArmijoResult armijo(const ModelView& model, const GridVector& x, const ObjEval& at_x,
                    const GridVector& d, const FeasibleRegion& region,
                    const GeometrySpec& geom, const ArmijoParams& p);

// Fixed-step mirror descent: iters Bregman proximal gradient updates.
SolveResult bpgd_run(const ModelView& model, const GeometrySpec& geom,
                     const FeasibleRegion& region, const GridVector& x0, double tau,
                     int iters);

// V-cycle multilevel descent. Each outer iteration descends while the
// coarse-correction trigger fires (restricting the iterate, adapting the
// region, shifting the coarse objective for first-order coherence, then
// running that level's smoother), and ascends by prolonging the coarse
// movement, line searching, and taking one post-smoothing update per level.
// With no trigger the iteration is a single fine update.
SolveResult ml_bpgd_run(const std::vector<LevelSpec>& levels, const TriggerParams& tp,
                        const ArmijoParams& ap, const GridVector& x0, int iters);

} // namespace mlbpgd
