#include "mlbpgd/geometry.hpp"

#include <cmath>
#include <limits>

namespace mlbpgd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GridVector const_vec(std::size_t n, double v) {
    GridVector r(n, v);
    return r;
}

void check_bounds_order(const GridVector& l, const GridVector& u, bool need_finite) {
    check_same_size(l, u, "geometry bounds");
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (std::isnan(l[i]) || std::isnan(u[i]))
            throw ArgError("bounds must not be NaN");
        if (!(l[i] < u[i]))
            throw ArgError("lower bound must be strictly below upper bound");
        if (need_finite && (!std::isfinite(l[i]) || !std::isfinite(u[i])))
            throw ArgError("bounds must be finite for this geometry");
    }
}

} // namespace

GeometrySpec GeometrySpec::quadratic(std::size_t n) {
    return {GeometryKind::Quadratic, const_vec(n, -kInf), const_vec(n, kInf)};
}

GeometrySpec GeometrySpec::log_barrier(std::size_t n) {
    return {GeometryKind::LogBarrier, const_vec(n, 0.0), const_vec(n, kInf)};
}

GeometrySpec GeometrySpec::shifted_log_barrier(GridVector lower) {
    GridVector u = const_vec(lower.size(), kInf);
    check_bounds_order(lower, u, false);
    for (double v : lower.data)
        if (!std::isfinite(v)) throw ArgError("shift must be finite");
    return {GeometryKind::ShiftedLogBarrier, std::move(lower), std::move(u)};
}

GeometrySpec GeometrySpec::upper_log_barrier(GridVector upper) {
    GridVector l = const_vec(upper.size(), -kInf);
    for (double v : upper.data)
        if (!std::isfinite(v)) throw ArgError("upper bound must be finite");
    return {GeometryKind::UpperLogBarrier, std::move(l), std::move(upper)};
}

GeometrySpec GeometrySpec::double_log_barrier(GridVector lower, GridVector upper) {
    check_bounds_order(lower, upper, true);
    return {GeometryKind::DoubleLogBarrier, std::move(lower), std::move(upper)};
}

GeometrySpec GeometrySpec::neg_entropy(std::size_t n) {
    return {GeometryKind::NegEntropy, const_vec(n, 0.0), const_vec(n, kInf)};
}

GeometrySpec GeometrySpec::fermi_dirac(GridVector lower, GridVector upper) {
    check_bounds_order(lower, upper, true);
    return {GeometryKind::FermiDirac, std::move(lower), std::move(upper)};
}

bool GeometrySpec::interior(const GridVector& x) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) return false;
        if (!(x[i] > lower_[i] && x[i] < upper_[i])) return false;
    }
    return true;
}

RefEval ref_eval(const GeometrySpec& geom, const GridVector& x) {
    if (x.size() != geom.dim()) throw ShapeError("ref_eval: dimension mismatch");
    if (!geom.interior(x)) throw DomainError("ref_eval: point not strictly interior");
    RefEval r{0.0, GridVector(x.size())};
    r.grad.side = x.side;
    const GridVector& l = geom.lower();
    const GridVector& u = geom.upper();
    switch (geom.kind()) {
    case GeometryKind::Quadratic:
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.value += 0.5 * x[i] * x[i];
            r.grad[i] = x[i];
        }
        break;
    case GeometryKind::LogBarrier:
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.value -= std::log(x[i]);
            r.grad[i] = -1.0 / x[i];
        }
        break;
    case GeometryKind::ShiftedLogBarrier:
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.value -= std::log(x[i] - l[i]);
            r.grad[i] = -1.0 / (x[i] - l[i]);
        }
        break;
    case GeometryKind::UpperLogBarrier:
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.value -= std::log(u[i] - x[i]);
            r.grad[i] = 1.0 / (u[i] - x[i]);
        }
        break;
    case GeometryKind::DoubleLogBarrier:
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.value -= std::log(x[i] - l[i]) + std::log(u[i] - x[i]);
            r.grad[i] = -1.0 / (x[i] - l[i]) + 1.0 / (u[i] - x[i]);
        }
        break;
    case GeometryKind::NegEntropy:
        for (std::size_t i = 0; i < x.size(); ++i) {
            r.value += x[i] * std::log(x[i]) - x[i];
            r.grad[i] = std::log(x[i]);
        }
        break;
    case GeometryKind::FermiDirac:
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double a = x[i] - l[i], b = u[i] - x[i];
            r.value += a * std::log(a) + b * std::log(b);
            r.grad[i] = std::log(a) - std::log(b);
        }
        break;
    }
    return r;
}

namespace {

// phi(x) on the closure of its domain, using t ln t -> 0 as t -> 0 for the
// entropy kinds. Barrier kinds blow up at the boundary, so there the point
// must still be strictly interior.
double closure_value(const GeometrySpec& geom, const GridVector& x) {
    if (x.size() != geom.dim()) throw ShapeError("divergence: dimension mismatch");
    const GridVector& l = geom.lower();
    const GridVector& u = geom.upper();
    auto xlogx = [](double t) { return t > 0.0 ? t * std::log(t) : 0.0; };
    double v = 0.0;
    switch (geom.kind()) {
    case GeometryKind::Quadratic:
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i])) throw DomainError("divergence: non-finite point");
            v += 0.5 * x[i] * x[i];
        }
        return v;
    case GeometryKind::NegEntropy:
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(x[i] >= 0.0)) throw DomainError("divergence: point outside domain");
            v += xlogx(x[i]) - x[i];
        }
        return v;
    case GeometryKind::FermiDirac:
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(x[i] >= l[i] && x[i] <= u[i]))
                throw DomainError("divergence: point outside domain");
            v += xlogx(x[i] - l[i]) + xlogx(u[i] - x[i]);
        }
        return v;
    default:
        // Open-domain kinds: phi is finite only strictly inside.
        return ref_eval(geom, x).value;
    }
}

} // namespace

double divergence(const GeometrySpec& geom, const GridVector& x, const GridVector& y) {
    check_same_size(x, y, "divergence");
    const double phix = closure_value(geom, x);
    const RefEval ey = ref_eval(geom, y);
    double v = phix - ey.value;
    for (std::size_t i = 0; i < x.size(); ++i) v -= ey.grad[i] * (x[i] - y[i]);
    return v;
}

FeasibleRegion FeasibleRegion::box(GridVector lower, GridVector upper) {
    check_bounds_order(lower, upper, false);
    return {true, std::move(lower), std::move(upper), 0.0};
}

FeasibleRegion FeasibleRegion::translated_simplex(GridVector lower, double total) {
    if (lower.size() == 0) throw ArgError("simplex needs at least one component");
    double ls = 0.0;
    for (double v : lower.data) {
        if (!std::isfinite(v)) throw ArgError("simplex lower bounds must be finite");
        ls += v;
    }
    if (!(total > ls))
        throw ArgError("simplex total must exceed the sum of lower bounds");
    return {false, std::move(lower), GridVector(), total};
}

const GridVector& FeasibleRegion::upper() const {
    if (!is_box_) throw ArgError("upper(): region is a simplex");
    return upper_;
}

double FeasibleRegion::total() const {
    if (is_box_) throw ArgError("total(): region is a box");
    return total_;
}

bool FeasibleRegion::strictly_interior(const GridVector& x) const {
    if (x.size() != dim()) return false;
    for (double v : x.data)
        if (!std::isfinite(v)) return false;
    if (is_box_) {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!(x[i] > lower_[i] && x[i] < upper_[i])) return false;
        return true;
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > lower_[i])) return false;
    // The affine constraint can only hold up to rounding; the tolerance is
    // wider than the dual root stopping criterion so solver iterates pass.
    return std::fabs(sum(x) - total_) <= 1e-9 * std::max(1.0, std::fabs(total_));
}

void validate_pairing(const GeometrySpec& geom, const FeasibleRegion& region) {
    if (geom.dim() != region.dim())
        throw ArgError("pairing: geometry and region dimensions differ");
    const bool box = region.is_box();
    auto bounds_equal = [&](bool check_lower, bool check_upper) {
        for (std::size_t i = 0; i < geom.dim(); ++i) {
            if (check_lower && geom.lower()[i] != region.lower()[i]) return false;
            if (check_upper && geom.upper()[i] != region.upper()[i]) return false;
        }
        return true;
    };
    switch (geom.kind()) {
    case GeometryKind::Quadratic:
        if (box && bounds_equal(true, true)) return;  // free box only
        break;
    case GeometryKind::LogBarrier:
        if (!box) return;
        break;
    case GeometryKind::NegEntropy:
    case GeometryKind::ShiftedLogBarrier:
    case GeometryKind::UpperLogBarrier:
    case GeometryKind::DoubleLogBarrier:
    case GeometryKind::FermiDirac:
        if (box && bounds_equal(true, true)) return;
        break;
    }
    throw ArgError("pairing: geometry domain does not match region");
}

double simplex_dual_root(const GridVector& c, const GridVector& lower, double total) {
    check_same_size(c, lower, "simplex_dual_root");
    const std::size_t n = c.size();
    if (n == 0) throw ArgError("simplex_dual_root: empty input");
    double ls = 0.0;
    for (double v : lower.data) ls += v;
    if (!(total > ls)) throw ArgError("simplex_dual_root: empty relative interior");

    double cmin = c[0];
    for (double v : c.data) cmin = std::min(cmin, v);
    const double a = -cmin;
    const double scale = std::max(1.0, std::fabs(a));

    auto d = [&](double xi) {
        double s = -total;
        for (std::size_t i = 0; i < n; ++i) s += 1.0 / (c[i] + xi);
        return s;
    };
    auto dprime = [&](double xi) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = c[i] + xi;
            s -= 1.0 / (t * t);
        }
        return s;
    };

    double lo = a + 1e-12 * scale;
    if (!(d(lo) > 0.0))
        throw RootError("simplex_dual_root: no root above the pole");
    double hi = lo + std::max(1.0, static_cast<double>(n) / total);
    int expand = 0;
    while (d(hi) >= 0.0) {
        hi = a + 2.0 * (hi - a);
        if (++expand > 200 || !std::isfinite(hi))
            throw RootError("simplex_dual_root: bracket expansion failed");
    }

    const double tol = 1e-10 * std::max(1.0, total);
    double xi = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double dv = d(xi);
        if (std::fabs(dv) <= tol) return xi;
        if (dv > 0.0) lo = xi; else hi = xi;
        const double dp = dprime(xi);
        double next = xi - dv / dp;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        xi = next;
    }
    throw RootError("simplex_dual_root: did not converge");
}

namespace {

// Nudges a computed update back strictly inside (l, u) when the exact value
// is interior but rounds onto a bound.
inline double into_open_interval(double t, double l, double u) {
    const double w = u - l;
    if (t <= l) t = l + 1e-16 * w;
    if (t >= u) t = u - 1e-16 * w;
    return t;
}

// Root in (0, W) of s w^2 + (2 - sW) w - W = 0, the optimality condition of
// the double-log-barrier subproblem written in w = t - l. The '+' root is
// always the interior one; this form avoids cancellation for small s.
inline double double_barrier_root(double s, double W) {
    const double q = s * W;
    const double disc = std::sqrt(4.0 + q * q);
    return 0.5 * W + (s * W * W) / (2.0 * (disc + 2.0) );
}

inline double double_barrier_bisect(double s, double l, double u) {
    const double W = u - l;
    const double eps = 1e-14 * W;
    double lo = eps, hi = W - eps;
    auto h = [&](double w) { return -1.0 / w + 1.0 / (W - w) - s; };
    double hlo = h(lo), hhi = h(hi);
    if (!(hlo < 0.0 && hhi > 0.0))
        throw RootError("double-log-barrier update: root outside the inset interval");
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * W; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (h(mid) < 0.0) lo = mid; else hi = mid;
    }
    return l + 0.5 * (lo + hi);
}

} // namespace

GridVector bpgd_update(const GeometrySpec& geom, const FeasibleRegion& region,
                       const GridVector& x, const GridVector& g, double tau) {
    if (!(tau > 0.0)) throw StepError("bpgd_update: step size must be positive");
    check_same_size(x, g, "bpgd_update");
    validate_pairing(geom, region);
    if (!geom.interior(x) || !region.strictly_interior(x))
        throw DomainError("bpgd_update: point not strictly interior");

    const std::size_t n = x.size();
    const GridVector& l = geom.lower();
    const GridVector& u = geom.upper();
    GridVector r(n);
    r.side = x.side;

    switch (geom.kind()) {
    case GeometryKind::Quadratic:
        for (std::size_t i = 0; i < n; ++i) r[i] = x[i] - tau * g[i];
        break;

    case GeometryKind::NegEntropy:
        for (std::size_t i = 0; i < n; ++i) {
            const double v = x[i] * std::exp(-tau * g[i]);
            if (!(v > 0.0) || !std::isfinite(v))
                throw RootError("multiplicative update left the domain");
            r[i] = v;
        }
        break;

    case GeometryKind::ShiftedLogBarrier:
        for (std::size_t i = 0; i < n; ++i) {
            const double den = 1.0 / (x[i] - l[i]) + tau * g[i];
            if (!(den > 0.0))
                throw RootError("shifted-log-barrier subproblem has no minimizer");
            r[i] = l[i] + 1.0 / den;
        }
        break;

    case GeometryKind::UpperLogBarrier:
        for (std::size_t i = 0; i < n; ++i) {
            const double den = 1.0 / (u[i] - x[i]) - tau * g[i];
            if (!(den > 0.0))
                throw RootError("upper-log-barrier subproblem has no minimizer");
            r[i] = u[i] - 1.0 / den;
        }
        break;

    case GeometryKind::DoubleLogBarrier:
        for (std::size_t i = 0; i < n; ++i) {
            const double W = u[i] - l[i];
            const double s = -1.0 / (x[i] - l[i]) + 1.0 / (u[i] - x[i]) - tau * g[i];
            double t;
            if (std::fabs(s) < 1e150 / std::max(1.0, W)) {
                t = l[i] + double_barrier_root(s, W);
                if (!(t > l[i] && t < u[i])) t = double_barrier_bisect(s, l[i], u[i]);
            } else {
                t = double_barrier_bisect(s, l[i], u[i]);
            }
            r[i] = into_open_interval(t, l[i], u[i]);
        }
        break;

    case GeometryKind::FermiDirac:
        for (std::size_t i = 0; i < n; ++i) {
            // Mirror form of r = ((x-l)/(u-x)) exp(-tau g), x+ = (l + u r)/(1 + r),
            // evaluated through the logistic of t = ln r for stability.
            const double t = std::log(x[i] - l[i]) - std::log(u[i] - x[i]) - tau * g[i];
            double v;
            if (t >= 0.0) {
                const double e = std::exp(-t);
                v = u[i] - (u[i] - l[i]) * (e / (1.0 + e));
            } else {
                const double e = std::exp(t);
                v = l[i] + (u[i] - l[i]) * (e / (1.0 + e));
            }
            r[i] = into_open_interval(v, l[i], u[i]);
        }
        break;

    case GeometryKind::LogBarrier: {
        GridVector c(n);
        for (std::size_t i = 0; i < n; ++i) c[i] = tau * g[i] + 1.0 / x[i];
        const double xi = simplex_dual_root(c, region.lower(), region.total());
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = 1.0 / (c[i] + xi);
            if (!(r[i] > region.lower()[i]))
                throw RootError("simplex update violates a lower bound");
        }
        break;
    }
    }

    if (!region.strictly_interior(r) || !geom.interior(r))
        throw RootError("bpgd_update: result not strictly interior");
    return r;
}

} // namespace mlbpgd
