#pragma once

#include "mlbpgd/grid_vector.hpp"

namespace mlbpgd {

// Separable reference functions phi generating the Bregman divergences.
// Each kind fixes a domain; bounded kinds carry per-component bounds.
enum class GeometryKind {
    Quadratic,        // 1/2 x^2               on R
    LogBarrier,       // -ln x                 on x > 0
    ShiftedLogBarrier,// -ln(x - l)            on x > l
    UpperLogBarrier,  // -ln(u - x)            on x < u
    DoubleLogBarrier, // -ln(x-l) - ln(u-x)    on l < x < u
    NegEntropy,       // x ln x - x            on x >= 0 (0 ln 0 = 0)
    FermiDirac,       // (x-l)ln(x-l) + (u-x)ln(u-x)  on l <= x <= u
};

class GeometrySpec {
public:
    static GeometrySpec quadratic(std::size_t n);
    static GeometrySpec log_barrier(std::size_t n);
    static GeometrySpec shifted_log_barrier(GridVector lower);
    static GeometrySpec upper_log_barrier(GridVector upper);
    static GeometrySpec double_log_barrier(GridVector lower, GridVector upper);
    static GeometrySpec neg_entropy(std::size_t n);
    static GeometrySpec fermi_dirac(GridVector lower, GridVector upper);

    GeometryKind kind() const { return kind_; }
    std::size_t dim() const { return lower_.size(); }
    const GridVector& lower() const { return lower_; }
    const GridVector& upper() const { return upper_; }

    // Strict interior of dom phi.
    bool interior(const GridVector& x) const;

private:
    GeometrySpec(GeometryKind k, GridVector l, GridVector u)
        : kind_(k), lower_(std::move(l)), upper_(std::move(u)) {}
    GeometryKind kind_;
    GridVector lower_, upper_;
};

struct RefEval {
    double value;
    GridVector grad;
};

// phi and grad phi at a strictly interior point.
RefEval ref_eval(const GeometrySpec& geom, const GridVector& x);

// Bregman divergence D_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>.
// x may touch the boundary where phi extends continuously (entropy kinds);
// y must be strictly interior.
double divergence(const GeometrySpec& geom, const GridVector& x, const GridVector& y);

// Feasible set of one level: a box with possibly infinite bounds, or a
// translated simplex { x : x >= l, <1, x> = S }.
class FeasibleRegion {
public:
    static FeasibleRegion box(GridVector lower, GridVector upper);
    static FeasibleRegion translated_simplex(GridVector lower, double total);

    bool is_box() const { return is_box_; }
    std::size_t dim() const { return lower_.size(); }
    const GridVector& lower() const { return lower_; }
    const GridVector& upper() const;  // box only
    double total() const;             // simplex only

    bool strictly_interior(const GridVector& x) const;

private:
    FeasibleRegion(bool b, GridVector l, GridVector u, double s)
        : is_box_(b), lower_(std::move(l)), upper_(std::move(u)), total_(s) {}
    bool is_box_;
    GridVector lower_, upper_;
    double total_ = 0.0;
};

// Throws ArgError unless the geometry's domain matches the region the way
// the updates below assume (equal bounds for the box kinds, log barrier for
// the simplex, free box for the quadratic).
void validate_pairing(const GeometrySpec& geom, const FeasibleRegion& region);

// Root xi of d(xi) = sum_i 1/(c_i + xi) - S on the interval where all
// denominators are positive. d is strictly decreasing there, so the root is
// unique; bracketing plus safeguarded Newton.
double simplex_dual_root(const GridVector& c, const GridVector& lower, double total);

// One Bregman proximal gradient step from interior x with gradient g:
//   argmin_{u in region} tau <g, u - x> + D_phi(u, x).
// Closed per-component forms for the box pairings, dual root-finding for the
// simplex pairing. The result is strictly interior.
GridVector bpgd_update(const GeometrySpec& geom, const FeasibleRegion& region,
                       const GridVector& x, const GridVector& g, double tau);

} // namespace mlbpgd
