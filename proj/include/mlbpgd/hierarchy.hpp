#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mlbpgd/geometry.hpp"
#include "mlbpgd/grid_vector.hpp"
#include "mlbpgd/linops.hpp"
#include "mlbpgd/objectives.hpp"

namespace mlbpgd {

// Maps a feasible region to the reference function the smoother uses on it.
// Each experiment fixes one factory per level (barriers for boxes, the log
// barrier for simplices).
using GeometryFactory = std::function<GeometrySpec(const FeasibleRegion&)>;

// One level of the solver hierarchy. Level 0 is the finest; its region is
// the actual constraint set. Coarser regions are templates whose bounds cap
// the recursively adapted regions built at each coarse visit.
struct LevelSpec {
    int index;
    Objective objective;
    GeometryFactory geometry;
    FeasibleRegion region;
    double step;
    int smoothing;
    std::optional<TransferPair> transfer;  // to the next-coarser level
};

// Checks a finest-to-coarsest stack: positive steps within the smoothness
// bound, strictly decreasing dimensions, transfers sized to adjacent levels,
// and region/geometry pairings that actually validate.
void validate_levels(const std::vector<LevelSpec>& levels);

struct TriggerParams {
    double kappa = 0.49;
    double epsilon = 1e-3;
    double epsilon_x = 1e-2;

    void validate() const;  // kappa, epsilon in (0,1); epsilon_x > 0
};

// Coarse-correction test: the restricted gradient must carry a kappa share
// of the parent gradient, the parent gradient must not already be small,
// and the iterate must have moved since the last trigger. Callers pass
// +infinity for the distance on a level's first visit.
bool trigger(const GridVector& grad_parent, const GridVector& grad_coarse_at_anchor,
             double breg_dist_to_last_trigger, const TriggerParams& p);

struct AdaptedBounds {
    GridVector lower, upper;
    int nudged = 0;  // bounds pushed off the anchor after rounding collapse
};

// Coarse box guaranteeing that prolonged corrections stay inside the parent
// box: per coarse index j,
//   l_j = xc_j + (1/||P||_inf) * max_{t in supp P(.,j)} (l_prev - x_prev)_t
// and symmetrically with min for the upper bound. Infinite parent bounds
// propagate unchanged.
AdaptedBounds adapt_box_bounds(const GridVector& lower_prev, const GridVector& upper_prev,
                               const GridVector& x_prev, const GridVector& x_coarse,
                               const TransferPair& t);

// Simplex analogue: lower bounds from the same recursion, mass fixed by the
// restricted anchor, S = <1, x_coarse>.
FeasibleRegion adapt_simplex(const GridVector& lower_prev, const GridVector& x_prev,
                             const GridVector& x_coarse, const TransferPair& t);

// Clips an adapted region against the level's template so coarse iterates
// also satisfy the natural constraints of the coarse objective (for a
// simplex template only the floor participates; the mass comes from the
// adapted region).
FeasibleRegion intersect_with_template(const FeasibleRegion& adapted,
                                       const FeasibleRegion& tmpl);

} // namespace mlbpgd
