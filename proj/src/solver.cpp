#include "mlbpgd/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <utility>

#include "mlbpgd/errors.hpp"

namespace mlbpgd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Every update must obey f(x+) <= f(x) - D_phi(x, x+)/tau up to rounding.
void note_descent(InvariantReport& rep, double f_old, double f_new, double div,
                  double tau) {
    const double excess = f_new - f_old + div / tau;
    rep.worst_descent_excess = std::max(
        rep.worst_descent_excess, excess / std::max(1.0, std::fabs(f_old)));
    if (excess > 1e-10 * std::fabs(f_old)) ++rep.descent_violations;
}

void note_feasible(InvariantReport& rep, const FeasibleRegion& region,
                   const GridVector& x) {
    if (!region.strictly_interior(x)) ++rep.feasibility_failures;
}

} // namespace

void ArmijoParams::validate() const {
    if (!(sigma > 0.0) || !(sigma < 1.0))
        throw ArgError("armijo: sigma must lie in (0,1)");
    if (!(beta > 0.0) || !(beta < 1.0))
        throw ArgError("armijo: beta must lie in (0,1)");
    if (!(alpha_bar > 0.0) || alpha_bar > 1.0)
        throw ArgError("armijo: alpha_bar must lie in (0,1]");
}

ArmijoResult armijo(const ModelView& model, const GridVector& x, const ObjEval& at_x,
                    const GridVector& d, const FeasibleRegion& region,
                    const GeometrySpec& geom, const ArmijoParams& p) {
    check_same_size(x, d, "armijo");
    const double slope = dot(at_x.grad, d);
    if (!(slope < 0.0)) throw DescentError("armijo: not a descent direction");

    double alpha = p.alpha_bar;
    for (int m = 0; m <= 60; ++m, alpha *= p.beta) {
        GridVector cand = add_scaled(x, alpha, d);
        // Interiority is a backtracking reason alongside the decrease test:
        // feasibility consistency puts x + d in the closed region only.
        if (!region.strictly_interior(cand) || !geom.interior(cand)) continue;
        double v;
        try {
            v = model.value(cand);
        } catch (const DomainError&) {
            continue;
        }
        if (v <= at_x.value + p.sigma * alpha * slope) return {alpha, std::move(cand)};
    }
    throw LineSearchError("armijo: exhausted 60 backtracks");
}

SolveResult bpgd_run(const ModelView& model, const GeometrySpec& geom,
                     const FeasibleRegion& region, const GridVector& x0, double tau,
                     int iters) {
    if (iters < 0) throw ArgError("bpgd_run: negative iteration count");
    validate_pairing(geom, region);
    if (!region.strictly_interior(x0) || !geom.interior(x0))
        throw DomainError("bpgd_run: start point must be strictly interior");

    const auto t0 = Clock::now();
    SolveResult out;
    out.x = x0;
    ObjEval e = model.eval_grad(out.x);
    out.trace.records.push_back({0, e.value, seconds_since(t0), 0, {}, {}, 0.0});

    for (int k = 1; k <= iters; ++k) {
        GridVector next = bpgd_update(geom, region, out.x, e.grad, tau);
        ObjEval ne = model.eval_grad(next);
        const double div = divergence(geom, out.x, next);
        note_descent(out.report, e.value, ne.value, div, tau);
        note_feasible(out.report, region, next);
        out.x = std::move(next);
        e = std::move(ne);
        out.trace.records.push_back({k, e.value, seconds_since(t0), 0, {}, {}, div});
    }
    return out;
}

SolveResult ml_bpgd_run(const std::vector<LevelSpec>& levels, const TriggerParams& tp,
                        const ArmijoParams& ap, const GridVector& x0, int iters) {
    validate_levels(levels);
    tp.validate();
    ap.validate();
    if (iters < 0) throw ArgError("ml_bpgd_run: negative iteration count");

    const std::size_t depth = levels.size();
    const GeometrySpec fine_geom = levels[0].geometry(levels[0].region);
    if (!levels[0].region.strictly_interior(x0) || !fine_geom.interior(x0))
        throw DomainError("ml_bpgd_run: start point must be strictly interior");

    const auto t0 = Clock::now();
    SolveResult out;
    out.x = x0;
    ObjEval fine_eval = ModelView(levels[0].objective).eval_grad(out.x);
    out.trace.records.push_back({0, fine_eval.value, seconds_since(t0), 0,
                                 std::vector<unsigned char>(depth, 0),
                                 std::vector<double>(depth, kNaN), 0.0});

    // Last point on each level that sent the solver down, across iterations.
    std::vector<std::optional<GridVector>> last_trigger(depth);

    // Within-iteration state of the active levels.
    std::vector<GridVector> anchor(depth), current(depth);
    std::vector<ObjEval> cur_eval(depth);
    std::vector<std::optional<CoarseModel>> model(depth);
    std::vector<std::optional<FeasibleRegion>> region(depth);
    std::vector<std::optional<GeometrySpec>> geom(depth);

    for (int k = 1; k <= iters; ++k) {
        const GridVector prev = out.x;
        std::vector<unsigned char> trig(depth, 0);
        std::vector<double> alphas(depth, kNaN);

        current[0] = out.x;
        cur_eval[0] = fine_eval;
        region[0] = levels[0].region;
        geom[0] = fine_geom;

        std::size_t deepest = 0;
        for (std::size_t l = 0; l + 1 < depth; ++l) {
            const TransferPair& tr = *levels[l].transfer;
            GridVector rg = tr.restrict_fine(cur_eval[l].grad);
            double dist = kInf;  // first visit passes the movement clause
            if (last_trigger[l]) {
                try {
                    dist = divergence(*geom[l], current[l], *last_trigger[l]);
                } catch (const DomainError&) {
                    dist = kInf;  // old trigger point left this visit's domain
                }
            }
            if (!trigger(cur_eval[l].grad, rg, dist, tp)) break;

            trig[l] = 1;
            last_trigger[l] = current[l];

            GridVector down = tr.restrict_fine(current[l]);
            FeasibleRegion child_raw = [&]() -> FeasibleRegion {
                if (region[l]->is_box()) {
                    AdaptedBounds b = adapt_box_bounds(region[l]->lower(), region[l]->upper(),
                                                       current[l], down, tr);
                    out.report.bound_nudges += b.nudged;
                    return FeasibleRegion::box(std::move(b.lower), std::move(b.upper));
                }
                return adapt_simplex(region[l]->lower(), current[l], down, tr);
            }();
            region[l + 1] = intersect_with_template(child_raw, levels[l + 1].region);
            geom[l + 1] = levels[l + 1].geometry(*region[l + 1]);

            // Shifted coarse objective; the anchor is evaluated once and its
            // shifted gradient seeds the smoother.
            ObjEval base = ModelView(levels[l + 1].objective).eval_grad(down);
            GridVector v = sub(rg, base.grad);
            GridVector psi_grad = add_scaled(base.grad, 1.0, v);
            out.report.worst_coherence_residual =
                std::max(out.report.worst_coherence_residual,
                         max_abs_diff(psi_grad, rg) / std::max(1.0, norm_linf(rg)));
            model[l + 1] = CoarseModel(levels[l + 1].objective, std::move(v), down);

            anchor[l + 1] = down;
            current[l + 1] = std::move(down);
            cur_eval[l + 1] = {base.value, std::move(psi_grad)};

            ModelView child_view(*model[l + 1]);
            for (int i = 0; i < levels[l + 1].smoothing; ++i) {
                GridVector nx;
                try {
                    nx = bpgd_update(*geom[l + 1], *region[l + 1], current[l + 1],
                                     cur_eval[l + 1].grad, levels[l + 1].step);
                } catch (const RootError&) {
                    ++out.report.truncated_visits;
                    break;
                }
                ObjEval ne = child_view.eval_grad(nx);
                note_descent(out.report, cur_eval[l + 1].value, ne.value,
                             divergence(*geom[l + 1], current[l + 1], nx),
                             levels[l + 1].step);
                current[l + 1] = std::move(nx);
                cur_eval[l + 1] = std::move(ne);
            }
            deepest = l + 1;
        }

        if (deepest == 0) {
            GridVector next =
                bpgd_update(fine_geom, levels[0].region, out.x, fine_eval.grad,
                            levels[0].step);
            ObjEval ne = ModelView(levels[0].objective).eval_grad(next);
            note_descent(out.report, fine_eval.value, ne.value,
                         divergence(fine_geom, out.x, next), levels[0].step);
            out.x = std::move(next);
            fine_eval = std::move(ne);
        } else {
            for (std::size_t l = deepest; l-- > 0;) {
                ModelView view =
                    (l == 0) ? ModelView(levels[0].objective) : ModelView(*model[l]);
                GridVector d = levels[l].transfer->prolong(
                    sub(current[l + 1], anchor[l + 1]));
                const double slope = dot(cur_eval[l].grad, d);
                GridVector z = current[l];
                ObjEval ze = cur_eval[l];
                if (norm_linf(d) == 0.0) {
                    ++out.report.corrections_skipped;
                } else if (slope >= 0.0) {
                    ++out.report.corrections_skipped;
                    ++out.report.descent_sign_failures;
                } else {
                    try {
                        ArmijoResult ar =
                            armijo(view, current[l], cur_eval[l], d, *region[l],
                                   *geom[l], ap);
                        alphas[l] = ar.alpha;
                        z = std::move(ar.x);
                        ze = view.eval_grad(z);
                        ++out.report.corrections_applied;
                    } catch (const LineSearchError&) {
                        ++out.report.line_search_failures;
                        ++out.report.corrections_skipped;
                    }
                }

                bool stepped = true;
                GridVector next;
                try {
                    next = bpgd_update(*geom[l], *region[l], z, ze.grad, levels[l].step);
                } catch (const RootError&) {
                    ++out.report.post_smooth_fallbacks;
                    next = std::move(z);
                    stepped = false;
                }

                if (l == 0) {
                    ObjEval ne = ModelView(levels[0].objective).eval_grad(next);
                    if (stepped)
                        note_descent(out.report, ze.value, ne.value,
                                     divergence(fine_geom, z, next), levels[0].step);
                    out.x = std::move(next);
                    fine_eval = std::move(ne);
                } else {
                    if (stepped)
                        note_descent(out.report, ze.value, view.value(next),
                                     divergence(*geom[l], z, next), levels[l].step);
                    current[l] = std::move(next);
                }
            }
        }

        note_feasible(out.report, levels[0].region, out.x);
        out.trace.records.push_back({k, fine_eval.value, seconds_since(t0),
                                     static_cast<int>(deepest), std::move(trig),
                                     std::move(alphas),
                                     divergence(fine_geom, prev, out.x)});
    }
    return out;
}

} // namespace mlbpgd
