#include "mlbpgd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "mlbpgd/errors.hpp"
#include "mlbpgd/image_io.hpp"
#include "mlbpgd/phantoms.hpp"
#include "mlbpgd/poisson.hpp"
#include "mlbpgd/trace_io.hpp"

namespace mlbpgd {

namespace {

namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

double best_fval(const SolveResult& a, const SolveResult& b) {
    double best = kInf;
    for (const IterRecord& r : a.trace.records) best = std::min(best, r.fval);
    for (const IterRecord& r : b.trace.records) best = std::min(best, r.fval);
    return best;
}

GridVector load_input(const ExperimentConfig& cfg, GridVector (*synth)(int),
                      double floor, int* lifted) {
    if (cfg.input_image.empty()) return synth(cfg.fine_side());
    GridVector img = load_pgm(cfg.input_image);
    if (img.side != cfg.fine_side())
        throw ConfigError("input image side " + std::to_string(img.side) +
                          " does not match configured side " +
                          std::to_string(cfg.fine_side()));
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (img[i] < floor) {
            img[i] = floor;
            ++*lifted;
        }
    }
    return img;
}

std::vector<double> equidistant_angles(int count) {
    std::vector<double> a(count);
    for (int j = 0; j < count; ++j)
        a[j] = M_PI * static_cast<double>(j) / static_cast<double>(count);
    return a;
}

// H = A^T as a dense handle; the design objective wants pixels x rays.
LinearOperatorHandle transpose_to_dense(const LinearOperatorHandle& a) {
    const int rows = a.rows(), cols = a.cols();
    std::vector<double> fwd = a.dense_entries();
    std::vector<double> t(fwd.size());
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            t[static_cast<std::size_t>(c) * rows + r] =
                fwd[static_cast<std::size_t>(r) * cols + c];
    return LinearOperatorHandle::dense(cols, rows, std::move(t));
}

// Largest eigenvalue of A^T A by power iteration; deterministic start.
double squared_spectral_norm(const LinearOperatorHandle& a) {
    const std::size_t n = static_cast<std::size_t>(a.cols());
    GridVector u(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double lam = 0.0;
    for (int it = 0; it < 80; ++it) {
        GridVector v = a.apply_adjoint(a.apply(u));
        lam = norm_l2(v);
        if (lam == 0.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) u[i] = v[i] / lam;
    }
    return lam;
}

struct ArtifactSink {
    const std::string& dir;
    std::vector<std::string>& files;

    std::string operator()(const std::string& name) const {
        std::string p = (fs::path(dir) / name).string();
        files.push_back(p);
        return p;
    }
};

void write_comparison(const std::string& prefix, const ExperimentConfig& cfg,
                      ExperimentResult& res) {
    fs::create_directories(cfg.out_dir);
    res.log.f_ref = best_fval(res.sl, res.ml);
    ArtifactSink out{cfg.out_dir, res.files};
    write_trace_csv(res.sl.trace, res.log.f_ref, out(prefix + "_sl.csv"));
    write_trace_csv(res.ml.trace, res.log.f_ref, out(prefix + "_ml.csv"));
    emit_plot_data(res.sl.trace, res.ml.trace, res.log.f_ref, out(prefix + "_plot.csv"));
}

GeometryFactory shifted_log_barrier_factory() {
    return [](const FeasibleRegion& r) {
        return GeometrySpec::shifted_log_barrier(r.lower());
    };
}

GeometryFactory fermi_dirac_factory() {
    return [](const FeasibleRegion& r) {
        return GeometrySpec::fermi_dirac(r.lower(), r.upper());
    };
}

GeometryFactory log_barrier_factory() {
    return [](const FeasibleRegion& r) { return GeometrySpec::log_barrier(r.dim()); };
}

} // namespace

ExperimentResult run_deconv(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    GridVector phantom = load_input(cfg, &crater_field, 1e-4, &res.log.input_lifted);

    const std::vector<double> kernel = gaussian_psf(cfg.psf_dim, cfg.psf_sigma);
    std::vector<LinearOperatorHandle> blur;
    std::vector<TransferPair> transfer;
    for (int l = 0; l < cfg.levels; ++l) {
        blur.push_back(LinearOperatorHandle::conv2d(kernel, cfg.psf_dim, cfg.side_at(l)));
        if (l + 1 < cfg.levels) transfer.push_back(TransferPair::two_d(cfg.side_at(l)));
    }

    DegradedData degraded = poisson_degrade(phantom, blur[0], cfg.noise_lambda, cfg.seed);
    res.log.noise_floored = degraded.floored;
    std::vector<GridVector> data;
    data.push_back(std::move(degraded.b));
    for (int l = 1; l < cfg.levels; ++l)
        data.push_back(transfer[l - 1].restrict_fine(data[l - 1]));

    std::vector<LevelSpec> levels;
    for (int l = 0; l < cfg.levels; ++l) {
        Objective obj = Objective::kl_b_ax(blur[l], data[l]);
        const std::size_t n = obj.dim();
        FeasibleRegion region =
            FeasibleRegion::box(GridVector(n, 0.0), GridVector(n, kInf));
        double step = 1.0 / obj.smoothness_constant();
        levels.push_back({l, std::move(obj), shifted_log_barrier_factory(),
                          std::move(region), step, cfg.smoothing[l],
                          l + 1 < cfg.levels ? std::optional<TransferPair>(transfer[l])
                                             : std::nullopt});
    }
    validate_levels(levels);

    GridVector x0 = GridVector::grid(cfg.fine_side(), 0.5);
    res.sl = bpgd_run(levels[0].objective, levels[0].geometry(levels[0].region),
                      levels[0].region, x0, levels[0].step, cfg.iters);
    res.ml = ml_bpgd_run(levels, cfg.trigger, cfg.armijo, x0, cfg.iters);

    write_comparison("deconv", cfg, res);
    ArtifactSink out{cfg.out_dir, res.files};
    save_pgm(phantom, out("deconv_input.pgm"));
    save_pgm(data[0], out("deconv_data.pgm"));
    save_pgm(res.sl.x, out("deconv_sl.pgm"));
    save_pgm(res.ml.x, out("deconv_ml.pgm"));
    return res;
}

ExperimentResult run_tomo(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    GridVector phantom = load_input(cfg, &nested_discs, 1e-4, &res.log.input_lifted);

    std::vector<TransferPair> transfer;
    std::vector<GridVector> image;  // restricted ground truth per level
    image.push_back(phantom);
    for (int l = 0; l + 1 < cfg.levels; ++l) {
        transfer.push_back(TransferPair::two_d(cfg.side_at(l)));
        image.push_back(transfer[l].restrict_fine(image[l]));
    }

    std::vector<LevelSpec> levels;
    GridVector fine_data;
    for (int l = 0; l < cfg.levels; ++l) {
        LinearOperatorHandle raw = parallel_beam(
            cfg.side_at(l), equidistant_angles(cfg.angles[l]), cfg.detectors[l]);
        FilteredOperator filt = drop_zero_rows(raw);
        res.log.rows_dropped.push_back(filt.dropped);

        GridVector b;
        if (l == 0) {
            DegradedData degraded =
                poisson_degrade(image[0], filt.op, cfg.noise_lambda, cfg.seed);
            res.log.noise_floored = degraded.floored;
            b = std::move(degraded.b);
            fine_data = b;
        } else {
            b = filt.op.apply(image[l]);
        }

        Objective obj = Objective::kl_ax_b(filt.op, std::move(b));
        const std::size_t n = obj.dim();
        FeasibleRegion region =
            FeasibleRegion::box(GridVector(n, 0.0), GridVector(n, 1.0));
        double step = 1.0 / obj.smoothness_constant();
        levels.push_back({l, std::move(obj), fermi_dirac_factory(), std::move(region),
                          step, cfg.smoothing[l],
                          l + 1 < cfg.levels ? std::optional<TransferPair>(transfer[l])
                                             : std::nullopt});
    }
    validate_levels(levels);

    GridVector x0 = GridVector::grid(cfg.fine_side(), 0.5);
    res.sl = bpgd_run(levels[0].objective, levels[0].geometry(levels[0].region),
                      levels[0].region, x0, levels[0].step, cfg.iters);
    res.ml = ml_bpgd_run(levels, cfg.trigger, cfg.armijo, x0, cfg.iters);

    write_comparison("tomo", cfg, res);
    ArtifactSink out{cfg.out_dir, res.files};
    save_pgm(phantom, out("tomo_phantom.pgm"));
    save_pgm(res.sl.x, out("tomo_sl.pgm"));
    save_pgm(res.ml.x, out("tomo_ml.pgm"));
    return res;
}

namespace {

struct Reconstruction {
    GridVector x;
    double residual;
};

Reconstruction reconstruct_least_squares(const LinearOperatorHandle& a_full,
                                         int detectors,
                                         const std::vector<int>& angle_set,
                                         const GridVector& phantom, int iters) {
    std::vector<int> rows;
    for (int a : angle_set)
        for (int d = 0; d < detectors; ++d) rows.push_back(a * detectors + d);
    LinearOperatorHandle a_sel = a_full.keep_rows(rows);
    GridVector b = a_sel.apply(phantom);
    Objective lsq = Objective::least_squares(a_sel, b);

    const double lam = squared_spectral_norm(a_sel);
    const double tau = lam > 0.0 ? 1.0 / lam : 1.0;
    const std::size_t n = phantom.size();
    GridVector x0(n, 0.0);
    x0.side = phantom.side;
    SolveResult run = bpgd_run(
        lsq, GeometrySpec::quadratic(n),
        FeasibleRegion::box(GridVector(n, -kInf), GridVector(n, kInf)), x0, tau, iters);
    return {std::move(run.x), run.trace.records.back().fval};
}

} // namespace

ExperimentResult run_ddesign(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    GridVector phantom = load_input(cfg, &blocky_sprite, 0.0, &res.log.input_lifted);

    const int n_ang = cfg.angles[0];
    const std::vector<double> angles = equidistant_angles(n_ang);

    std::vector<LinearOperatorHandle> projector;
    std::vector<LevelSpec> levels;
    for (int l = 0; l < cfg.levels; ++l) {
        const int side = cfg.side_at(l);
        const int dets = cfg.detectors[l];
        LinearOperatorHandle a = parallel_beam(side, angles, dets);
        if (a.rows() < a.cols())
            throw ConfigError("design level " + std::to_string(l) +
                              " has fewer rays than pixels");
        projector.push_back(a);

        Objective obj = Objective::d_design(transpose_to_dense(a));
        const std::size_t n = obj.dim();
        FeasibleRegion region = FeasibleRegion::translated_simplex(GridVector(n, 0.0), 1.0);
        levels.push_back({l, std::move(obj), log_barrier_factory(), std::move(region),
                          1.0, cfg.smoothing[l],
                          l + 1 < cfg.levels
                              ? std::optional<TransferPair>(TransferPair::one_d(dets, n_ang))
                              : std::nullopt});
    }
    validate_levels(levels);

    const std::size_t n0 = levels[0].objective.dim();
    GridVector x0(n0, 1.0 / static_cast<double>(n0));
    try {
        (void)levels[0].objective.value(x0);
    } catch (const DomainError&) {
        throw RankError("information matrix is not positive definite at uniform weights");
    }

    res.sl = bpgd_run(levels[0].objective, levels[0].geometry(levels[0].region),
                      levels[0].region, x0, levels[0].step, cfg.iters);
    res.ml = ml_bpgd_run(levels, cfg.trigger, cfg.armijo, x0, cfg.iters);

    // rank angles by the total weight the optimized design gives their rays
    const int dets = cfg.detectors[0];
    std::vector<double> per_angle(n_ang, 0.0);
    for (int a = 0; a < n_ang; ++a)
        for (int d = 0; d < dets; ++d)
            per_angle[a] += res.ml.x[static_cast<std::size_t>(a) * dets + d];

    const int k = std::max(1, n_ang / 8);
    std::vector<int> order(n_ang);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return per_angle[a] != per_angle[b] ? per_angle[a] > per_angle[b] : a < b;
    });
    res.log.top_angles.assign(order.begin(), order.begin() + k);
    std::sort(res.log.top_angles.begin(), res.log.top_angles.end());
    for (int j = 0; j < k; ++j)
        res.log.equidistant_angles.push_back(j * n_ang / k);

    Reconstruction top = reconstruct_least_squares(projector[0], dets,
                                                   res.log.top_angles, phantom,
                                                   cfg.ls_iters);
    Reconstruction equi = reconstruct_least_squares(projector[0], dets,
                                                    res.log.equidistant_angles, phantom,
                                                    cfg.ls_iters);
    res.log.top_k_residual = top.residual;
    res.log.equidistant_residual = equi.residual;

    write_comparison("ddesign", cfg, res);
    ArtifactSink out{cfg.out_dir, res.files};
    save_pgm(phantom, out("ddesign_phantom.pgm"));
    save_pgm(top.x, out("ddesign_recon_topk.pgm"));
    save_pgm(equi.x, out("ddesign_recon_equi.pgm"));

    {
        std::ofstream w(out("ddesign_weights.csv"));
        w << "angle,weight,top_k,equidistant\n";
        for (int a = 0; a < n_ang; ++a) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", per_angle[a]);
            const bool in_top = std::binary_search(res.log.top_angles.begin(),
                                                   res.log.top_angles.end(), a);
            const bool in_eq =
                std::find(res.log.equidistant_angles.begin(),
                          res.log.equidistant_angles.end(), a) !=
                res.log.equidistant_angles.end();
            w << a << ',' << buf << ',' << (in_top ? 1 : 0) << ',' << (in_eq ? 1 : 0)
              << "\n";
        }
    }
    {
        std::ofstream w(out("ddesign_recon.csv"));
        w << "selection,residual,image_error\n";
        auto line = [&](const char* name, const Reconstruction& r) {
            char res_buf[40], err_buf[40];
            std::snprintf(res_buf, sizeof res_buf, "%.17g", r.residual);
            std::snprintf(err_buf, sizeof err_buf, "%.17g",
                          norm_l2(sub(r.x, phantom)) / norm_l2(phantom));
            w << name << ',' << res_buf << ',' << err_buf << "\n";
        };
        line("top_k", top);
        line("equidistant", equi);
    }
    return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case ExperimentKind::Deconv: return run_deconv(cfg);
        case ExperimentKind::Tomo: return run_tomo(cfg);
        case ExperimentKind::DDesign: return run_ddesign(cfg);
        case ExperimentKind::Selftest: break;
    }
    throw ConfigError("selftest has no experiment driver");
}

int selftest(std::ostream& out) {
    int failures = 0;
    auto check = [&](const char* name, auto&& body) {
        bool ok = false;
        std::string note;
        try {
            ok = body();
        } catch (const std::exception& e) {
            note = e.what();
        }
        out << (ok ? "[ok]   " : "[FAIL] ") << name;
        if (!ok && !note.empty()) out << "  (" << note << ")";
        out << "\n";
        if (!ok) ++failures;
    };

    check("transfers: adjoint pair, unit mass, serial agreement", [] {
        TransferPair t = TransferPair::two_d(15);
        std::mt19937 rng(1234);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            GridVector w(t.coarse_size()), x(t.fine_size());
            for (auto& v : w.data) v = u(rng);
            for (auto& v : x.data) v = u(rng);
            GridVector pw = t.prolong(w), rx = t.restrict_fine(x);
            if (std::fabs(dot(pw, x) - dot(w, rx)) > 1e-12 * (1.0 + std::fabs(dot(w, rx))))
                return false;
            if (std::fabs(sum(pw) - sum(w)) > 1e-12 * (1.0 + std::fabs(sum(w))))
                return false;
            if (max_abs_diff(pw, t.prolong_serial(w)) != 0.0) return false;
            if (max_abs_diff(rx, t.restrict_fine_serial(x)) != 0.0) return false;
        }
        return true;
    });

    check("mirror updates match direct scans", [] {
        std::mt19937 rng(99);
        std::uniform_real_distribution<double> u(0.2, 1.8);
        for (int trial = 0; trial < 25; ++trial) {
            const double x = u(rng), g = u(rng) - 1.0, tau = 0.3 + 0.5 * u(rng);
            GridVector xv(1, x), gv(1, g);

            GeometrySpec ent = GeometrySpec::neg_entropy(1);
            FeasibleRegion orthant =
                FeasibleRegion::box(GridVector(1, 0.0), GridVector(1, kInf));
            GridVector got = bpgd_update(ent, orthant, xv, gv, tau);
            double best = kInf, arg = x;
            for (double c = 1e-6; c < 8.0; c += 1e-4) {
                GridVector cv(1, c);
                double v = tau * g * (c - x) + divergence(ent, cv, xv);
                if (v < best) { best = v; arg = c; }
            }
            if (std::fabs(got[0] - arg) > 1e-3) return false;

            GeometrySpec box_geom =
                GeometrySpec::double_log_barrier(GridVector(1, 0.0), GridVector(1, 2.0));
            FeasibleRegion box =
                FeasibleRegion::box(GridVector(1, 0.0), GridVector(1, 2.0));
            got = bpgd_update(box_geom, box, xv, gv, tau);
            best = kInf;
            arg = x;
            for (double c = 1e-4; c < 2.0; c += 1e-4) {
                GridVector cv(1, c);
                double v = tau * g * (c - x) + divergence(box_geom, cv, xv);
                if (v < best) { best = v; arg = c; }
            }
            if (std::fabs(got[0] - arg) > 1e-3) return false;
        }
        return true;
    });

    check("poisson sampler is seed-deterministic", [] {
        GridVector img = nested_discs(15);
        LinearOperatorHandle id = LinearOperatorHandle::identity(static_cast<int>(img.size()));
        DegradedData a = poisson_degrade(img, id, 50.0, 7);
        DegradedData b = poisson_degrade(img, id, 50.0, 7);
        DegradedData c = poisson_degrade(img, id, 50.0, 8);
        if (max_abs_diff(a.b, b.b) != 0.0) return false;
        return max_abs_diff(a.b, c.b) > 0.0;
    });

    check("objective gradients match finite differences", [] {
        LinearOperatorHandle blur =
            LinearOperatorHandle::conv2d(gaussian_psf(5, 1.0), 5, 9);
        GridVector truth = crater_field(9);
        GridVector b = blur.apply(truth);
        Objective obj = Objective::kl_b_ax(blur, b);
        GridVector x(81, 0.7);
        ObjEval e = obj.eval_grad(x);
        std::mt19937 rng(5);
        std::uniform_int_distribution<std::size_t> pick(0, 80);
        for (int t = 0; t < 10; ++t) {
            std::size_t i = pick(rng);
            const double h = 1e-6;
            GridVector xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            double fd = (obj.value(xp) - obj.value(xm)) / (2.0 * h);
            if (std::fabs(fd - e.grad[i]) > 1e-5 * (1.0 + std::fabs(fd))) return false;
        }
        return true;
    });

    check("adapted bounds keep prolonged points feasible", [] {
        TransferPair t = TransferPair::two_d(7);
        std::mt19937 rng(21);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        GridVector lo(t.fine_size(), 0.0), hi(t.fine_size(), 1.0);
        GridVector x(t.fine_size());
        for (auto& v : x.data) v = 0.2 + 0.6 * u(rng);
        GridVector xc = t.restrict_fine(x);
        AdaptedBounds ab = adapt_box_bounds(lo, hi, x, xc, t);
        for (int trial = 0; trial < 200; ++trial) {
            GridVector w(t.coarse_size());
            for (std::size_t j = 0; j < w.size(); ++j)
                w[j] = ab.lower[j] + (ab.upper[j] - ab.lower[j]) * u(rng);
            GridVector fine = add_scaled(x, 1.0, t.prolong(sub(w, xc)));
            for (std::size_t i = 0; i < fine.size(); ++i)
                if (fine[i] < -1e-12 || fine[i] > 1.0 + 1e-12) return false;
        }
        return true;
    });

    check("two-level run keeps descent, coherence, feasibility", [] {
        const int side = 15;
        LinearOperatorHandle blur0 =
            LinearOperatorHandle::conv2d(gaussian_psf(5, 1.2), 5, side);
        LinearOperatorHandle blur1 =
            LinearOperatorHandle::conv2d(gaussian_psf(5, 1.2), 5, 7);
        TransferPair t = TransferPair::two_d(side);
        GridVector truth = crater_field(side);
        GridVector b0 = blur0.apply(truth);
        GridVector b1 = t.restrict_fine(b0);

        std::vector<LevelSpec> levels;
        Objective f0 = Objective::kl_b_ax(blur0, b0);
        Objective f1 = Objective::kl_b_ax(blur1, b1);
        FeasibleRegion r0 = FeasibleRegion::box(GridVector(f0.dim(), 0.0),
                                                GridVector(f0.dim(), kInf));
        FeasibleRegion r1 = FeasibleRegion::box(GridVector(f1.dim(), 0.0),
                                                GridVector(f1.dim(), kInf));
        levels.push_back({0, f0, shifted_log_barrier_factory(), r0,
                          1.0 / f0.smoothness_constant(), 1, t});
        levels.push_back({1, f1, shifted_log_barrier_factory(), r1,
                          1.0 / f1.smoothness_constant(), 8, std::nullopt});

        TriggerParams tp;
        tp.kappa = 0.4;  // the 15-grid restriction carries slightly under 0.49
        GridVector x0 = GridVector::grid(side, 0.5);
        SolveResult run = ml_bpgd_run(levels, tp, ArmijoParams{}, x0, 30);

        if (run.report.descent_violations != 0) return false;
        if (run.report.descent_sign_failures != 0) return false;
        if (run.report.feasibility_failures != 0) return false;
        if (run.report.worst_coherence_residual > 1e-10) return false;
        for (std::size_t i = 1; i < run.trace.records.size(); ++i) {
            double prev = run.trace.records[i - 1].fval;
            if (run.trace.records[i].fval > prev + 1e-10 * std::fabs(prev)) return false;
        }
        return true;
    });

    check("image save/load stays within quantization error", [] {
        GridVector img = crater_field(15);
        fs::path p = fs::temp_directory_path() / "mlbpgd_selftest_io.pgm";
        save_pgm(img, p.string());
        GridVector back = load_pgm(p.string());
        fs::remove(p);
        if (back.side != img.side) return false;
        for (std::size_t i = 0; i < img.size(); ++i) {
            double clamped = std::min(1.0, std::max(0.0, img[i]));
            if (std::fabs(back[i] - clamped) > 1.0 / 255.0 + 1e-12) return false;
        }
        return true;
    });

    check("trace csv roundtrip is bit-exact", [] {
        SolverTrace tr;
        for (int i = 0; i < 5; ++i) {
            IterRecord r;
            r.iter = i;
            r.fval = 1.0 / (i + 1.0) + 1e-17;
            r.seconds = 0.001 * i;
            r.deepest_level = i % 2;
            r.triggered = {static_cast<unsigned char>(i % 2)};
            r.alpha = {1.0 / 3.0};
            tr.records.push_back(r);
        }
        fs::path p = fs::temp_directory_path() / "mlbpgd_selftest_trace.csv";
        write_trace_csv(tr, 0.1, p.string());
        std::vector<TraceRow> rows = read_trace_csv(p.string());
        fs::remove(p);
        if (rows.size() != tr.records.size()) return false;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].fval != tr.records[i].fval) return false;
            if (rows[i].cpu_seconds != tr.records[i].seconds) return false;
            if (rows[i].alpha_finest != tr.records[i].alpha_finest()) return false;
        }
        return true;
    });

    return failures;
}

} // namespace mlbpgd
