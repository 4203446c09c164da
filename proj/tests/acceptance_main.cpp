// Acceptance gate. Each check prints one [PASS]/[FAIL] line; the process
// exits nonzero when a gating check fails. The speedup comparison is
// reported but never gates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mlbpgd/config.hpp"
#include "mlbpgd/experiments.hpp"
#include "mlbpgd/geometry.hpp"
#include "mlbpgd/grid_vector.hpp"
#include "mlbpgd/hierarchy.hpp"
#include "mlbpgd/linops.hpp"
#include "mlbpgd/objectives.hpp"
#include "mlbpgd/phantoms.hpp"
#include "mlbpgd/poisson.hpp"
#include "mlbpgd/solver.hpp"
#include "support/grid_search.hpp"

using namespace mlbpgd;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

struct Gate {
    int gating_failures = 0;

    void line(int id, const char* label, bool pass, const std::string& detail,
              bool gating = true) {
        if (!pass && gating) ++gating_failures;
        std::printf("[%s] %2d %-44s %s%s\n", pass ? "PASS" : "FAIL", id, label,
                    detail.c_str(), gating ? "" : "  [soft, not gating]");
        std::fflush(stdout);
    }
};

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> angle_grid(int count) {
    std::vector<double> a(count);
    for (int j = 0; j < count; ++j)
        a[j] = M_PI * static_cast<double>(j) / static_cast<double>(count);
    return a;
}

LinearOperatorHandle transpose_dense(const LinearOperatorHandle& a) {
    const int rows = a.rows(), cols = a.cols();
    std::vector<double> fwd = a.dense_entries();
    std::vector<double> t(fwd.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            t[static_cast<std::size_t>(c) * rows + r] =
                fwd[static_cast<std::size_t>(r) * cols + c];
    return LinearOperatorHandle::dense(cols, rows, std::move(t));
}

GridVector random_simplex_point(std::size_t n, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    GridVector x(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) { x[i] = e(rng) + 1e-6; s += x[i]; }
    for (std::size_t i = 0; i < n; ++i) x[i] /= s;
    return x;
}

// ---- the seven geometry/region pairings the solver accepts ----

struct Pairing {
    GeometrySpec geom;
    FeasibleRegion region;
};

Pairing make_pairing(GeometryKind kind, std::size_t n) {
    GridVector l(n), u(n);
    for (std::size_t i = 0; i < n; ++i) { l[i] = 0.1 * (i + 1); u[i] = 2.0 + 0.5 * i; }
    switch (kind) {
    case GeometryKind::Quadratic: {
        GridVector fl(n, -kInf), fu(n, kInf);
        return {GeometrySpec::quadratic(n), FeasibleRegion::box(fl, fu)};
    }
    case GeometryKind::NegEntropy: {
        GridVector zl(n, 0.0), iu(n, kInf);
        return {GeometrySpec::neg_entropy(n), FeasibleRegion::box(zl, iu)};
    }
    case GeometryKind::ShiftedLogBarrier: {
        GridVector iu(n, kInf);
        return {GeometrySpec::shifted_log_barrier(l), FeasibleRegion::box(l, iu)};
    }
    case GeometryKind::UpperLogBarrier: {
        GridVector il(n, -kInf);
        return {GeometrySpec::upper_log_barrier(u), FeasibleRegion::box(il, u)};
    }
    case GeometryKind::DoubleLogBarrier:
        return {GeometrySpec::double_log_barrier(l, u), FeasibleRegion::box(l, u)};
    case GeometryKind::FermiDirac:
        return {GeometrySpec::fermi_dirac(l, u), FeasibleRegion::box(l, u)};
    case GeometryKind::LogBarrier:
        return {GeometrySpec::log_barrier(n),
                FeasibleRegion::translated_simplex(GridVector(n, -0.1), 1.0)};
    }
    throw std::logic_error("unreachable");
}

GridVector random_interior(const Pairing& p, std::mt19937_64& rng) {
    const std::size_t n = p.geom.dim();
    GridVector x(n);
    std::uniform_real_distribution<double> u01(0.15, 0.85);
    if (!p.region.is_box()) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) { x[i] = u01(rng); s += x[i]; }
        for (std::size_t i = 0; i < n; ++i) x[i] *= p.region.total() / s;
        return x;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double l = p.geom.lower()[i], u = p.geom.upper()[i];
        if (std::isfinite(l) && std::isfinite(u)) x[i] = l + (u - l) * u01(rng);
        else if (std::isfinite(l)) x[i] = l + 0.1 + 1.9 * u01(rng);
        else if (std::isfinite(u)) x[i] = u - 0.1 - 1.9 * u01(rng);
        else x[i] = -2.0 + 4.0 * u01(rng);
    }
    return x;
}

// ---- small level-stack builders mirroring the experiment drivers ----

GeometryFactory barrier_factory() {
    return [](const FeasibleRegion& r) {
        return GeometrySpec::shifted_log_barrier(r.lower());
    };
}

GeometryFactory box_entropy_factory() {
    return [](const FeasibleRegion& r) {
        return GeometrySpec::fermi_dirac(r.lower(), r.upper());
    };
}

GeometryFactory simplex_factory() {
    return [](const FeasibleRegion& r) { return GeometrySpec::log_barrier(r.dim()); };
}

std::vector<LevelSpec> blur_stack(const std::vector<int>& sides,
                                  const std::vector<int>& smoothing,
                                  const std::vector<double>& kernel, int kdim,
                                  const GridVector& b_fine) {
    const int count = static_cast<int>(sides.size());
    std::vector<TransferPair> tr;
    std::vector<GridVector> data;
    data.push_back(b_fine);
    for (int l = 0; l + 1 < count; ++l) {
        tr.push_back(TransferPair::two_d(sides[l]));
        data.push_back(tr[l].restrict_fine(data[l]));
    }
    std::vector<LevelSpec> levels;
    for (int l = 0; l < count; ++l) {
        Objective f = Objective::kl_b_ax(
            LinearOperatorHandle::conv2d(kernel, kdim, sides[l]), data[l]);
        const std::size_t n = f.dim();
        FeasibleRegion region =
            FeasibleRegion::box(GridVector(n, 0.0), GridVector(n, kInf));
        const double step = 1.0 / f.smoothness_constant();
        levels.push_back({l, std::move(f), barrier_factory(), std::move(region), step,
                          smoothing[l],
                          l + 1 < count ? std::optional<TransferPair>(tr[l])
                                        : std::nullopt});
    }
    validate_levels(levels);
    return levels;
}

std::vector<LevelSpec> beam_stack(const std::vector<int>& sides,
                                  const std::vector<int>& smoothing,
                                  const std::vector<int>& angles,
                                  const GridVector& fine_image) {
    const int count = static_cast<int>(sides.size());
    std::vector<TransferPair> tr;
    std::vector<GridVector> image;
    image.push_back(fine_image);
    for (int l = 0; l + 1 < count; ++l) {
        tr.push_back(TransferPair::two_d(sides[l]));
        image.push_back(tr[l].restrict_fine(image[l]));
    }
    std::vector<LevelSpec> levels;
    for (int l = 0; l < count; ++l) {
        FilteredOperator filt =
            drop_zero_rows(parallel_beam(sides[l], angle_grid(angles[l]), sides[l]));
        GridVector b = filt.op.apply(image[l]);
        Objective f = Objective::kl_ax_b(filt.op, std::move(b));
        const std::size_t n = f.dim();
        FeasibleRegion region =
            FeasibleRegion::box(GridVector(n, 0.0), GridVector(n, 1.0));
        const double step = 1.0 / f.smoothness_constant();
        levels.push_back({l, std::move(f), box_entropy_factory(), std::move(region),
                          step, smoothing[l],
                          l + 1 < count ? std::optional<TransferPair>(tr[l])
                                        : std::nullopt});
    }
    validate_levels(levels);
    return levels;
}

std::vector<LevelSpec> design_stack(const std::vector<int>& sides,
                                    const std::vector<int>& smoothing, int n_ang) {
    const int count = static_cast<int>(sides.size());
    const std::vector<double> angles = angle_grid(n_ang);
    std::vector<LevelSpec> levels;
    for (int l = 0; l < count; ++l) {
        Objective f =
            Objective::d_design(transpose_dense(parallel_beam(sides[l], angles, sides[l])));
        const std::size_t n = f.dim();
        FeasibleRegion region =
            FeasibleRegion::translated_simplex(GridVector(n, 0.0), 1.0);
        levels.push_back({l, std::move(f), simplex_factory(), std::move(region), 1.0,
                          smoothing[l],
                          l + 1 < count
                              ? std::optional<TransferPair>(TransferPair::one_d(sides[l], n_ang))
                              : std::nullopt});
    }
    validate_levels(levels);
    return levels;
}

// ---- check 1: mirror updates against a dense grid search ----

void check_update_oracle(Gate& gate) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(104729);
    std::uniform_real_distribution<double> gdist(-2.0, 2.0);
    std::uniform_real_distribution<double> taudist(0.05, 1.0);
    double worst = 0.0;
    long instances = 0;

    for (GeometryKind kind : {GeometryKind::Quadratic, GeometryKind::NegEntropy,
                              GeometryKind::ShiftedLogBarrier, GeometryKind::UpperLogBarrier,
                              GeometryKind::DoubleLogBarrier, GeometryKind::FermiDirac,
                              GeometryKind::LogBarrier}) {
        for (std::size_t n : {std::size_t(1), std::size_t(2)}) {
            if (kind == GeometryKind::LogBarrier && n == 1) {
                // One-component simplex: the constraint pins the update at S.
                auto p1 = make_pairing(kind, 1);
                for (int t = 0; t < 200; ++t) {
                    GridVector x(1, p1.region.total());
                    auto r = bpgd_update(p1.geom, p1.region, x,
                                         GridVector(1, gdist(rng)), taudist(rng));
                    worst = std::max(worst, std::fabs(r[0] - p1.region.total()));
                    ++instances;
                }
                continue;
            }
            auto p = make_pairing(kind, n);
            int accepted = 0;
            while (accepted < 200) {
                GridVector x = random_interior(p, rng);
                GridVector g(n);
                for (std::size_t i = 0; i < n; ++i) g[i] = gdist(rng);
                const double tau = taudist(rng);

                // One-sided barriers need a solvable subproblem with margin.
                bool usable = true;
                for (std::size_t i = 0; i < n && usable; ++i) {
                    if (kind == GeometryKind::ShiftedLogBarrier)
                        usable = 1.0 / (x[i] - p.geom.lower()[i]) + tau * g[i] > 0.05;
                    if (kind == GeometryKind::UpperLogBarrier)
                        usable = 1.0 / (p.geom.upper()[i] - x[i]) - tau * g[i] > 0.05;
                }
                if (!usable) continue;
                ++accepted;
                ++instances;

                auto got = bpgd_update(p.geom, p.region, x, g, tau);
                std::vector<double> want;
                if (p.region.is_box())
                    want = oracle::box_subproblem(p.geom, x.data, g.data, tau);
                else
                    want = oracle::simplex2_subproblem(p.region.lower().data,
                                                       p.region.total(), x.data,
                                                       g.data, tau);
                for (std::size_t i = 0; i < n; ++i)
                    worst = std::max(worst, std::fabs(got[i] - want[i]));
            }
        }
    }
    const double secs = elapsed(t0);
    gate.line(1, "updates match dense grid search", worst <= 1e-3 && secs < 30.0,
              fmt("max coord err %.2e over %ld instances, %.1fs", worst, instances, secs));
}

// ---- check 2: exact critical points do not move ----

void check_fixed_points(Gate& gate) {
    double worst = 0.0;

    {
        const std::vector<int> sides = {31, 15, 7};
        const GridVector xhat = crater_field(31);
        const auto kernel = gaussian_psf(7, 1.2);
        const GridVector b =
            LinearOperatorHandle::conv2d(kernel, 7, 31).apply(xhat);
        auto levels = blur_stack(sides, {1, 10, 10}, kernel, 7, b);
        auto sl = bpgd_run(levels[0].objective, levels[0].geometry(levels[0].region),
                           levels[0].region, xhat, levels[0].step, 5);
        worst = std::max(worst, max_abs_diff(sl.x, xhat));
        auto ml = ml_bpgd_run(levels, TriggerParams{}, ArmijoParams{}, xhat, 5);
        worst = std::max(worst, max_abs_diff(ml.x, xhat));
    }
    {
        const std::vector<int> sides = {15, 7};
        const GridVector xhat = nested_discs(15);
        auto levels = beam_stack(sides, {1, 5}, {12, 8}, xhat);
        auto sl = bpgd_run(levels[0].objective, levels[0].geometry(levels[0].region),
                           levels[0].region, xhat, levels[0].step, 5);
        worst = std::max(worst, max_abs_diff(sl.x, xhat));
        auto ml = ml_bpgd_run(levels, TriggerParams{}, ArmijoParams{}, xhat, 5);
        worst = std::max(worst, max_abs_diff(ml.x, xhat));
    }
    gate.line(2, "fixed points move <= 1e-8 over 5 iters", worst <= 1e-8,
              fmt("sup move %.2e across 4 runs", worst));
}

// ---- desk-scale experiment runs shared by several checks ----

struct DeskRuns {
    ExperimentResult deconv, tomo, ddesign;
};

DeskRuns run_desk(const std::string& root) {
    DeskRuns d;
    auto one = [&](ExperimentKind k) {
        ExperimentConfig cfg = default_config(k);
        cfg.out_dir = root + "/" + experiment_name(k);
        return run_experiment(cfg);
    };
    d.deconv = one(ExperimentKind::Deconv);
    d.tomo = one(ExperimentKind::Tomo);
    d.ddesign = one(ExperimentKind::DDesign);
    return d;
}

void for_each_run(const DeskRuns& d, const std::function<void(const SolveResult&)>& fn) {
    for (const ExperimentResult* r : {&d.deconv, &d.tomo, &d.ddesign}) {
        fn(r->sl);
        fn(r->ml);
    }
}

void check_sufficient_descent(Gate& gate, const DeskRuns& d) {
    int violations = 0;
    double worst = -kInf;
    for_each_run(d, [&](const SolveResult& s) {
        violations += s.report.descent_violations;
        worst = std::max(worst, s.report.worst_descent_excess);
    });
    gate.line(3, "sufficient descent at every update", violations == 0,
              fmt("%d violations, worst excess %.2e", violations, worst));
}

void check_coherence(Gate& gate, const DeskRuns* d) {
    double in_run = 0.0;
    if (d)
        for_each_run(*d, [&](const SolveResult& s) {
            in_run = std::max(in_run, s.report.worst_coherence_residual);
        });

    // Direct form at random interior points: the shifted coarse objective's
    // gradient at the restricted iterate must equal the restricted gradient.
    std::mt19937_64 rng(5381);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double direct = 0.0;
    int builds = 0;
    auto probe = [&](const LevelSpec& fine, const LevelSpec& coarse, const GridVector& x) {
        const ObjEval at = fine.objective.eval_grad(x);
        const GridVector rg = fine.transfer->restrict_fine(at.grad);
        const GridVector anchor = fine.transfer->restrict_fine(x);
        CoarseModel psi = build_coarse_model(coarse.objective, rg, anchor);
        const ObjEval pat = psi.eval_grad(anchor);
        direct = std::max(direct, max_abs_diff(pat.grad, rg) /
                                      std::max(1e-300, norm_linf(at.grad)));
        ++builds;
    };

    {
        const GridVector clean = crater_field(31);
        const auto kernel = gaussian_psf(5, 1.0);
        const GridVector b = LinearOperatorHandle::conv2d(kernel, 5, 31).apply(clean);
        auto levels = blur_stack({31, 15}, {1, 10}, kernel, 5, b);
        for (int t = 0; t < 25; ++t) {
            GridVector x = GridVector::grid(31);
            for (auto& v : x.data) v = 0.1 + 2.4 * u01(rng);
            probe(levels[0], levels[1], x);
        }
    }
    {
        auto levels = beam_stack({15, 7}, {1, 5}, {12, 8}, nested_discs(15));
        for (int t = 0; t < 25; ++t) {
            GridVector x = GridVector::grid(15);
            for (auto& v : x.data) v = 0.05 + 0.9 * u01(rng);
            probe(levels[0], levels[1], x);
        }
    }
    {
        auto levels = design_stack({7, 3}, {1, 3}, 12);
        for (int t = 0; t < 25; ++t)
            probe(levels[0], levels[1],
                  random_simplex_point(levels[0].objective.dim(), rng));
    }

    const bool pass = d && in_run <= 1e-10 && direct <= 1e-10;
    gate.line(4, "coarse gradients match restricted gradients", pass,
              fmt("in-run max %.2e, direct max %.2e over %d builds", in_run, direct,
                  builds));
}

void check_descent_sign(Gate& gate, const DeskRuns& d) {
    int failures = 0, applied = 0;
    for_each_run(d, [&](const SolveResult& s) {
        failures += s.report.descent_sign_failures;
        applied += s.report.corrections_applied;
    });
    gate.line(5, "applied corrections are descent directions", failures == 0,
              fmt("%d corrections applied, %d sign failures", applied, failures));
}

// ---- check 6: prolonged points from adapted coarse regions stay feasible ----

struct FeasStats {
    double min_slack = kInf;
    double worst_mass = 0.0;
    long points = 0;
};

void mc_box_pair(FeasStats& st, int fine_side, double tmpl_lo, double tmpl_hi,
                 double lo, double hi, int count, std::mt19937_64& rng) {
    const TransferPair t = TransferPair::two_d(fine_side);
    const std::size_t nf = t.fine_size(), nc = t.coarse_size();
    const FeasibleRegion parent =
        FeasibleRegion::box(GridVector(nf, tmpl_lo), GridVector(nf, tmpl_hi));
    const FeasibleRegion coarse_tmpl =
        FeasibleRegion::box(GridVector(nc, tmpl_lo), GridVector(nc, tmpl_hi));
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    for (int s = 0; s < count; ++s) {
        GridVector x = GridVector::grid(t.fine_side());
        for (auto& v : x.data) v = lo + (hi - lo) * u01(rng);
        const GridVector xc = t.restrict_fine(x);
        AdaptedBounds ab = adapt_box_bounds(parent.lower(), parent.upper(), x, xc, t);
        const FeasibleRegion region = intersect_with_template(
            FeasibleRegion::box(std::move(ab.lower), std::move(ab.upper)), coarse_tmpl);

        GridVector w(nc);
        for (std::size_t j = 0; j < nc; ++j) {
            const double l = region.lower()[j], u = region.upper()[j];
            if (std::isfinite(l) && std::isfinite(u)) w[j] = l + (u - l) * u01(rng);
            else if (std::isfinite(l)) w[j] = l + 2.0 * u01(rng);
            else if (std::isfinite(u)) w[j] = u - 2.0 * u01(rng);
            else w[j] = 4.0 * u01(rng) - 2.0;
        }
        const GridVector fine = add_scaled(x, 1.0, t.prolong(sub(w, xc)));
        for (std::size_t i = 0; i < nf; ++i) {
            if (std::isfinite(tmpl_lo))
                st.min_slack = std::min(st.min_slack, fine[i] - tmpl_lo);
            if (std::isfinite(tmpl_hi))
                st.min_slack = std::min(st.min_slack, tmpl_hi - fine[i]);
        }
        ++st.points;
    }
}

void mc_simplex_pair(FeasStats& st, int detectors, int batch, int count,
                     std::mt19937_64& rng) {
    const TransferPair t = TransferPair::one_d(detectors, batch);
    const std::size_t nf = t.fine_size(), nc = t.coarse_size();
    const GridVector parent_lower(nf, 0.0);
    const FeasibleRegion coarse_tmpl =
        FeasibleRegion::translated_simplex(GridVector(nc, 0.0), 1.0);
    std::exponential_distribution<double> e(1.0);

    for (int s = 0; s < count; ++s) {
        const GridVector x = random_simplex_point(nf, rng);
        const GridVector xc = t.restrict_fine(x);
        const FeasibleRegion region = intersect_with_template(
            adapt_simplex(parent_lower, x, xc, t), coarse_tmpl);

        GridVector w = region.lower();
        const double free_mass = region.total() - sum(region.lower());
        GridVector q(nc);
        double qs = 0.0;
        for (std::size_t j = 0; j < nc; ++j) { q[j] = e(rng) + 1e-9; qs += q[j]; }
        for (std::size_t j = 0; j < nc; ++j) w[j] += free_mass * q[j] / qs;

        const GridVector fine = add_scaled(x, 1.0, t.prolong(sub(w, xc)));
        for (std::size_t i = 0; i < nf; ++i)
            st.min_slack = std::min(st.min_slack, fine[i]);
        st.worst_mass = std::max(st.worst_mass, std::fabs(sum(fine) - sum(x)));
        ++st.points;
    }
}

void check_feasibility(Gate& gate) {
    std::mt19937_64 rng(2971215073u);
    FeasStats st;
    mc_box_pair(st, 63, 0.0, kInf, 0.02, 2.5, 1000, rng);  // deconv levels 0->1
    mc_box_pair(st, 31, 0.0, kInf, 0.02, 2.5, 1000, rng);  //               1->2
    mc_box_pair(st, 63, 0.0, 1.0, 0.02, 0.98, 1000, rng);  // tomo   levels 0->1
    mc_box_pair(st, 31, 0.0, 1.0, 0.02, 0.98, 1000, rng);  //               1->2
    mc_simplex_pair(st, 15, 60, 1000, rng);                // design levels 0->1
    const bool pass = st.min_slack >= -1e-12 && st.worst_mass <= 1e-10;
    gate.line(6, "prolonged coarse points stay feasible", pass,
              fmt("min slack %.2e, mass err %.2e over %ld points", st.min_slack,
                  st.worst_mass, st.points));
}

void check_monotone_traces(Gate& gate, const DeskRuns& d) {
    double worst = -kInf;
    for_each_run(d, [&](const SolveResult& s) {
        const auto& rec = s.trace.records;
        for (std::size_t k = 1; k < rec.size(); ++k)
            worst = std::max(worst, (rec[k].fval - rec[k - 1].fval) /
                                        std::max(1.0, std::fabs(rec[k - 1].fval)));
    });
    gate.line(7, "objective traces are non-increasing", worst <= 1e-10,
              fmt("worst relative uptick %.2e", worst));
}

// ---- check 8: gradients, relative smoothness, trace identity ----

double fd_gradient_error(const Objective& f, GridVector x, int coords,
                         std::mt19937_64& rng) {
    const ObjEval at = f.eval_grad(x);
    const double scale = std::max(1.0, norm_linf(at.grad));
    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
    double worst = 0.0;
    for (int c = 0; c < coords; ++c) {
        const std::size_t i = pick(rng);
        const double h = 1e-6 * std::max(1.0, std::fabs(x[i]));
        const double keep = x[i];
        x[i] = keep + h;
        const double fp = f.value(x);
        x[i] = keep - h;
        const double fm = f.value(x);
        x[i] = keep;
        worst = std::max(worst, std::fabs((fp - fm) / (2.0 * h) - at.grad[i]) / scale);
    }
    return worst;
}

struct SmoothStats {
    int violations = 0;
    double worst_ratio = 0.0;
    long pairs = 0;
};

template <class SampleFn>
void smoothness_pairs(SmoothStats& st, const Objective& f, const GeometrySpec& phi,
                      SampleFn sample, int npts, int npairs, std::mt19937_64& rng) {
    const double L = f.smoothness_constant();
    std::vector<GridVector> pts;
    std::vector<ObjEval> ev;
    pts.reserve(npts);
    ev.reserve(npts);
    for (int i = 0; i < npts; ++i) {
        pts.push_back(sample(rng));
        ev.push_back(f.eval_grad(pts.back()));
    }
    std::uniform_int_distribution<int> pick(0, npts - 1);
    for (int s = 0; s < npairs; ++s) {
        const int i = pick(rng);
        int j = pick(rng);
        while (j == i) j = pick(rng);
        const double df =
            ev[i].value - ev[j].value - dot(ev[j].grad, sub(pts[i], pts[j]));
        const double bound = L * divergence(phi, pts[i], pts[j]);
        if (df > bound + 1e-9 * std::max(1.0, std::fabs(bound))) ++st.violations;
        if (bound > 0.0) st.worst_ratio = std::max(st.worst_ratio, df / bound);
        ++st.pairs;
    }
}

void check_gradients_and_smoothness(Gate& gate) {
    std::mt19937_64 rng(7919);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    const auto kernel = gaussian_psf(5, 1.0);
    const LinearOperatorHandle blur = LinearOperatorHandle::conv2d(kernel, 5, 9);
    const GridVector b_blur = blur.apply(crater_field(9));
    const Objective f_blur = Objective::kl_b_ax(blur, b_blur);

    const FilteredOperator beam = drop_zero_rows(parallel_beam(9, angle_grid(10), 9));
    const GridVector b_beam = beam.op.apply(nested_discs(9));
    const Objective f_beam = Objective::kl_ax_b(beam.op, b_beam);

    const Objective f_design =
        Objective::d_design(transpose_dense(parallel_beam(7, angle_grid(12), 7)));
    const std::size_t n_design = f_design.dim();
    const double m_design = 49.0;  // 7x7 pixels

    std::vector<double> dense(8 * 12);
    for (auto& v : dense) v = 2.0 * u01(rng) - 1.0;
    GridVector b_ls(8);
    for (auto& v : b_ls.data) v = u01(rng);
    const Objective f_ls =
        Objective::least_squares(LinearOperatorHandle::dense(8, 12, dense), b_ls);

    double fd = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
        GridVector x1(f_blur.dim());
        for (auto& v : x1.data) v = 0.3 + 1.7 * u01(rng);
        fd = std::max(fd, fd_gradient_error(f_blur, x1, 40, rng));

        GridVector x2(f_beam.dim());
        for (auto& v : x2.data) v = 0.1 + 0.8 * u01(rng);
        fd = std::max(fd, fd_gradient_error(f_beam, x2, 40, rng));

        GridVector x3(n_design);
        for (auto& v : x3.data) v = (0.5 + u01(rng)) / static_cast<double>(n_design);
        fd = std::max(fd, fd_gradient_error(f_design, x3, 40, rng));

        GridVector x4(f_ls.dim());
        for (auto& v : x4.data) v = 4.0 * u01(rng) - 2.0;
        fd = std::max(fd, fd_gradient_error(f_ls, x4, 12, rng));
    }

    SmoothStats st;
    smoothness_pairs(st, f_blur,
                     GeometrySpec::shifted_log_barrier(GridVector(f_blur.dim(), 0.0)),
                     [&](std::mt19937_64& r) {
                         GridVector x(f_blur.dim());
                         std::uniform_real_distribution<double> u(0.05, 3.0);
                         for (auto& v : x.data) v = u(r);
                         return x;
                     },
                     120, 10000, rng);
    smoothness_pairs(st, f_beam,
                     GeometrySpec::fermi_dirac(GridVector(f_beam.dim(), 0.0),
                                               GridVector(f_beam.dim(), 1.0)),
                     [&](std::mt19937_64& r) {
                         GridVector x(f_beam.dim());
                         std::uniform_real_distribution<double> u(0.03, 0.97);
                         for (auto& v : x.data) v = u(r);
                         return x;
                     },
                     120, 10000, rng);
    smoothness_pairs(st, f_design, GeometrySpec::log_barrier(n_design),
                     [&](std::mt19937_64& r) { return random_simplex_point(n_design, r); },
                     120, 10000, rng);

    double trace_err = 0.0;
    for (int t = 0; t < 30; ++t) {
        const GridVector x = random_simplex_point(n_design, rng);
        const ObjEval at = f_design.eval_grad(x);
        trace_err = std::max(trace_err, std::fabs(dot(x, at.grad) + m_design) / m_design);
    }

    const bool pass = fd <= 1e-5 && st.violations == 0 && trace_err <= 1e-8;
    gate.line(8, "gradients, smoothness bound, trace identity", pass,
              fmt("fd err %.2e, %d/%ld pair violations, trace err %.2e", fd,
                  st.violations, st.pairs, trace_err));
}

// ---- check 9: transfer pair identities ----

void check_transfers(Gate& gate) {
    std::mt19937_64 rng(8191);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double adj = 0.0, mass = 0.0;
    long bad_columns = 0, columns = 0;

    auto probe = [&](const TransferPair& t) {
        for (int s = 0; s < 50; ++s) {
            GridVector x(t.fine_size()), w(t.coarse_size());
            for (auto& v : x.data) v = u(rng);
            for (auto& v : w.data) v = u(rng);
            const double a = dot(t.restrict_fine(x), w);
            const double b = dot(x, t.prolong(w));
            adj = std::max(adj, std::fabs(a - b) / std::max(1.0, std::fabs(b)));
            const GridVector pw = t.prolong(w);
            mass = std::max(mass, std::fabs(sum(pw) - sum(w)) /
                                      std::max(1.0, std::fabs(sum(w))));
        }
        for (std::size_t j = 0; j < t.coarse_size(); ++j) {
            GridVector e(t.coarse_size());
            e[j] = 1.0;
            if (sum(t.prolong(e)) != 1.0) ++bad_columns;
            ++columns;
        }
    };
    probe(TransferPair::two_d(63));
    probe(TransferPair::two_d(31));
    probe(TransferPair::one_d(15, 60));
    probe(TransferPair::one_d(7, 12));

    const bool pass = adj <= 1e-12 && bad_columns == 0 && mass <= 1e-12;
    gate.line(9, "transfers: adjoint pair, column sums, mass", pass,
              fmt("adjoint err %.2e, %ld/%ld inexact columns, mass err %.2e", adj,
                  bad_columns, columns, mass));
}

void check_speedup(Gate& gate, const DeskRuns& d) {
    const auto& sl = d.deconv.sl.trace.records;
    const auto& ml = d.deconv.ml.trace.records;
    int reached = -1;
    if (sl.size() > 60) {
        const double target = sl[60].fval;
        for (const IterRecord& r : ml)
            if (r.fval <= target) { reached = r.iter; break; }
    }
    const bool deconv_ok = reached >= 0 && reached <= 30;
    const bool design_ok =
        d.ddesign.log.top_k_residual <= d.ddesign.log.equidistant_residual;
    gate.line(10, "multilevel speedup and design quality", deconv_ok && design_ok,
              fmt("parity with single-level iter 60 at iter %d; residuals %.3e vs %.3e",
                  reached, d.ddesign.log.top_k_residual,
                  d.ddesign.log.equidistant_residual),
              /*gating=*/false);
}

// ---- check 11: k * (f(x_k) - f_ref) stays under the divergence envelope ----

void check_sublinear_envelope(Gate& gate) {
    const ExperimentConfig cfg = default_config(ExperimentKind::Deconv);
    const int side = cfg.fine_side();
    const GridVector phantom = crater_field(side);
    const LinearOperatorHandle blur = LinearOperatorHandle::conv2d(
        gaussian_psf(cfg.psf_dim, cfg.psf_sigma), cfg.psf_dim, side);
    DegradedData deg = poisson_degrade(phantom, blur, cfg.noise_lambda, cfg.seed);
    const Objective f = Objective::kl_b_ax(blur, std::move(deg.b));
    const std::size_t n = f.dim();
    const FeasibleRegion region =
        FeasibleRegion::box(GridVector(n, 0.0), GridVector(n, kInf));
    const GeometrySpec geom = GeometrySpec::shifted_log_barrier(region.lower());
    const GridVector x0 = GridVector::grid(side, 0.5);

    const SolveResult run =
        bpgd_run(f, geom, region, x0, 1.0 / f.smoothness_constant(), 5000);
    const auto& rec = run.trace.records;
    const double f_ref = rec.back().fval;
    const double envelope = f.smoothness_constant() * divergence(geom, run.x, x0);

    double worst = 0.0;
    for (int k = 1; k <= 200; ++k)
        worst = std::max(worst,
                         static_cast<double>(k) * (rec[k].fval - f_ref) / envelope);
    gate.line(11, "sublinear envelope on deconvolution", worst <= 1.05,
              fmt("max k*(f - f_ref)/(L*D) = %.4f, limit 1.05, k <= 200", worst));
}

// ---- check 12: reruns match byte for byte outside the timing columns ----

std::vector<std::vector<std::string>> read_csv_cells(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',') { cells.push_back(cur); cur.clear(); }
            else cur.push_back(c);
        }
        cells.push_back(cur);
        rows.push_back(std::move(cells));
    }
    return rows;
}

bool csv_equal_outside_timings(const std::string& a, const std::string& b,
                               std::string* why) {
    const auto ra = read_csv_cells(a), rb = read_csv_cells(b);
    if (ra.size() != rb.size() || ra.empty()) {
        *why = a + ": row count differs";
        return false;
    }
    std::vector<bool> skip(ra[0].size(), false);
    for (std::size_t c = 0; c < ra[0].size(); ++c)
        skip[c] = ra[0][c].find("cpu_seconds") != std::string::npos;
    for (std::size_t r = 0; r < ra.size(); ++r) {
        if (ra[r].size() != rb[r].size() || ra[r].size() != skip.size()) {
            *why = a + fmt(": cell count differs at row %zu", r);
            return false;
        }
        for (std::size_t c = 0; c < ra[r].size(); ++c) {
            if (!skip[c] && ra[r][c] != rb[r][c]) {
                *why = a + fmt(": row %zu col %zu differs", r, c);
                return false;
            }
        }
    }
    return true;
}

void check_determinism(Gate& gate, const std::string& root_a, const std::string& root_b) {
    run_desk(root_b);
    int files = 0;
    bool ok = true;
    std::string why;
    for (ExperimentKind k :
         {ExperimentKind::Deconv, ExperimentKind::Tomo, ExperimentKind::DDesign}) {
        const std::string name = experiment_name(k);
        for (const char* suffix : {"_sl.csv", "_ml.csv", "_plot.csv"}) {
            const std::string rel = name + "/" + name + suffix;
            ++files;
            if (ok) ok = csv_equal_outside_timings(root_a + "/" + rel,
                                                   root_b + "/" + rel, &why);
        }
    }
    gate.line(12, "rerun CSVs identical outside timings", ok,
              ok ? fmt("%d files match", files) : why);
}

} // namespace

int main() {
    Gate gate;
    auto guarded = [&](int id, const char* label, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            gate.line(id, label, false, std::string("exception: ") + e.what());
        }
    };

    const fs::path root = fs::temp_directory_path() / "mlbpgd-acceptance";
    std::error_code ec;
    fs::remove_all(root, ec);
    const std::string root_a = (root / "a").string();
    const std::string root_b = (root / "b").string();

    guarded(1, "updates match dense grid search", [&] { check_update_oracle(gate); });
    guarded(2, "fixed points move <= 1e-8 over 5 iters",
            [&] { check_fixed_points(gate); });

    std::optional<DeskRuns> desk;
    try {
        desk = run_desk(root_a);
    } catch (const std::exception& e) {
        const std::string detail = std::string("experiment runs failed: ") + e.what();
        gate.line(3, "sufficient descent at every update", false, detail);
        gate.line(4, "coarse gradients match restricted gradients", false, detail);
        gate.line(5, "applied corrections are descent directions", false, detail);
    }
    if (desk) {
        guarded(3, "sufficient descent at every update",
                [&] { check_sufficient_descent(gate, *desk); });
        guarded(4, "coarse gradients match restricted gradients",
                [&] { check_coherence(gate, &*desk); });
        guarded(5, "applied corrections are descent directions",
                [&] { check_descent_sign(gate, *desk); });
    }
    guarded(6, "prolonged coarse points stay feasible", [&] { check_feasibility(gate); });
    if (desk)
        guarded(7, "objective traces are non-increasing",
                [&] { check_monotone_traces(gate, *desk); });
    else
        gate.line(7, "objective traces are non-increasing", false,
                  "experiment runs failed");
    guarded(8, "gradients, smoothness bound, trace identity",
            [&] { check_gradients_and_smoothness(gate); });
    guarded(9, "transfers: adjoint pair, column sums, mass",
            [&] { check_transfers(gate); });
    if (desk)
        guarded(10, "multilevel speedup and design quality",
                [&] { check_speedup(gate, *desk); });
    else
        gate.line(10, "multilevel speedup and design quality", false,
                  "experiment runs failed", false);
    guarded(11, "sublinear envelope on deconvolution",
            [&] { check_sublinear_envelope(gate); });
    if (desk)
        guarded(12, "rerun CSVs identical outside timings",
                [&] { check_determinism(gate, root_a, root_b); });
    else
        gate.line(12, "rerun CSVs identical outside timings", false,
                  "experiment runs failed");

    if (gate.gating_failures == 0) {
        std::printf("acceptance: all gating checks passed\n");
        return 0;
    }
    std::printf("acceptance: %d gating check(s) failed\n", gate.gating_failures);
    return 1;
}
