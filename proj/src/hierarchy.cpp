#include "mlbpgd/hierarchy.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mlbpgd/errors.hpp"

namespace mlbpgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_adapt_shapes(const GridVector& lower_prev, const GridVector& upper_prev,
                        const GridVector& x_prev, const GridVector& x_coarse,
                        const TransferPair& t) {
    if (lower_prev.size() != t.fine_size() || upper_prev.size() != t.fine_size() ||
        x_prev.size() != t.fine_size())
        throw ShapeError("adapt bounds: fine vectors must match the transfer pair");
    if (x_coarse.size() != t.coarse_size())
        throw ShapeError("adapt bounds: coarse anchor must match the transfer pair");
}

} // namespace

void validate_levels(const std::vector<LevelSpec>& levels) {
    if (levels.empty()) throw ArgError("level stack is empty");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const LevelSpec& lv = levels[i];
        const std::string tag = "level " + std::to_string(i);
        if (lv.index != static_cast<int>(i))
            throw ArgError(tag + ": index does not match stack position");
        if (!lv.geometry) throw ArgError(tag + ": missing geometry factory");
        if (lv.region.dim() != lv.objective.dim())
            throw ArgError(tag + ": region and objective dimensions differ");
        validate_pairing(lv.geometry(lv.region), lv.region);

        const double big = lv.objective.smoothness_constant();
        if (!(lv.step > 0.0) || lv.step > 1.0 / big)
            throw ArgError(tag + ": step must lie in (0, 1/L]");
        if (lv.smoothing < 1)
            throw ArgError(tag + ": at least one smoothing iteration per visit");

        const bool coarsest = (i + 1 == levels.size());
        if (coarsest != !lv.transfer.has_value())
            throw ArgError(tag + ": transfer pair present exactly below the coarsest level");
        if (!coarsest) {
            if (lv.transfer->fine_size() != lv.objective.dim())
                throw ArgError(tag + ": transfer fine size does not match this level");
            if (lv.transfer->coarse_size() != levels[i + 1].objective.dim())
                throw ArgError(tag + ": transfer coarse size does not match the next level");
            if (levels[i + 1].objective.dim() >= lv.objective.dim())
                throw ArgError(tag + ": dimensions must strictly decrease");
        }
    }
}

void TriggerParams::validate() const {
    if (!(kappa > 0.0) || !(kappa < 1.0))
        throw ArgError("trigger: kappa must lie in (0,1)");
    if (!(epsilon > 0.0) || !(epsilon < 1.0))
        throw ArgError("trigger: epsilon must lie in (0,1)");
    if (!(epsilon_x > 0.0))
        throw ArgError("trigger: epsilon_x must be positive");
}

bool trigger(const GridVector& grad_parent, const GridVector& grad_coarse_at_anchor,
             double breg_dist_to_last_trigger, const TriggerParams& p) {
    const double parent = norm_l2(grad_parent);
    const double coarse = norm_l2(grad_coarse_at_anchor);
    return coarse >= p.kappa * parent && parent >= p.epsilon &&
           breg_dist_to_last_trigger >= p.epsilon_x;
}

AdaptedBounds adapt_box_bounds(const GridVector& lower_prev, const GridVector& upper_prev,
                               const GridVector& x_prev, const GridVector& x_coarse,
                               const TransferPair& t) {
    check_adapt_shapes(lower_prev, upper_prev, x_prev, x_coarse, t);
    for (std::size_t i = 0; i < x_prev.size(); ++i)
        if (!(lower_prev[i] < x_prev[i]) || !(x_prev[i] < upper_prev[i]))
            throw DomainError("adapt bounds: parent iterate must be strictly interior");

    const double inv_norm = 1.0 / t.prolongation_inf_norm();
    AdaptedBounds out;
    out.lower = GridVector(t.coarse_size());
    out.upper = GridVector(t.coarse_size());

    std::vector<std::size_t> supp;
    for (std::size_t j = 0; j < t.coarse_size(); ++j) {
        t.column_support(j, supp);
        double worst_low = -kInf, worst_high = kInf;
        for (std::size_t s : supp) {
            worst_low = std::max(worst_low, lower_prev[s] - x_prev[s]);
            worst_high = std::min(worst_high, upper_prev[s] - x_prev[s]);
        }
        double lo = x_coarse[j] + inv_norm * worst_low;
        double hi = x_coarse[j] + inv_norm * worst_high;
        // The recursion keeps the anchor strictly inside in exact arithmetic;
        // if rounding collapsed a bound onto it, push the bound back off.
        const double margin = 1e-12 * std::max(1.0, std::fabs(x_coarse[j]));
        if (lo >= x_coarse[j]) {
            lo = x_coarse[j] - margin;
            ++out.nudged;
        }
        if (hi <= x_coarse[j]) {
            hi = x_coarse[j] + margin;
            ++out.nudged;
        }
        out.lower[j] = lo;
        out.upper[j] = hi;
    }
    return out;
}

FeasibleRegion adapt_simplex(const GridVector& lower_prev, const GridVector& x_prev,
                             const GridVector& x_coarse, const TransferPair& t) {
    GridVector free_top(lower_prev.size(), kInf);
    AdaptedBounds b = adapt_box_bounds(lower_prev, free_top, x_prev, x_coarse, t);
    const double total = sum(x_coarse);
    if (!(sum(b.lower) < total))
        throw InfeasibleError("adapt simplex: no relative interior left");
    return FeasibleRegion::translated_simplex(std::move(b.lower), total);
}

FeasibleRegion intersect_with_template(const FeasibleRegion& adapted,
                                       const FeasibleRegion& tmpl) {
    if (adapted.dim() != tmpl.dim())
        throw ShapeError("intersect: dimension mismatch");
    if (adapted.is_box() != tmpl.is_box())
        throw ArgError("intersect: regions must be of the same kind");

    GridVector lo(adapted.dim());
    for (std::size_t i = 0; i < lo.size(); ++i)
        lo[i] = std::max(adapted.lower()[i], tmpl.lower()[i]);

    if (adapted.is_box()) {
        GridVector hi(adapted.dim());
        for (std::size_t i = 0; i < hi.size(); ++i) {
            hi[i] = std::min(adapted.upper()[i], tmpl.upper()[i]);
            if (!(lo[i] < hi[i]))
                throw InfeasibleError("intersect: empty box");
        }
        return FeasibleRegion::box(std::move(lo), std::move(hi));
    }
    if (!(sum(lo) < adapted.total()))
        throw InfeasibleError("intersect: empty simplex");
    return FeasibleRegion::translated_simplex(std::move(lo), adapted.total());
}

} // namespace mlbpgd
