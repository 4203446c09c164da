#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mlbpgd/config.hpp"
#include "mlbpgd/errors.hpp"
#include "mlbpgd/experiments.hpp"

namespace {

using namespace mlbpgd;

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int levels = 0;
    int iters = 0;
};

void attach_options(CLI::App* cmd, CliOverrides& ov) {
    cmd->add_option("--config", ov.config_path, "flat key = value config file");
    cmd->add_option("--seed", ov.seed, "noise seed override");
    cmd->add_option("--out", ov.out_dir, "output directory override");
    cmd->add_option("--levels", ov.levels, "level count override");
    cmd->add_option("--iters", ov.iters, "outer iteration override");
}

void print_summary(const ExperimentConfig& cfg, const ExperimentResult& res) {
    auto last = [](const SolveResult& r) { return r.trace.records.back(); };
    std::printf("single-level: %d iterations, f = %.10g (%.2fs)\n",
                last(res.sl).iter, last(res.sl).fval, last(res.sl).seconds);
    std::printf("multilevel:   %d iterations, f = %.10g (%.2fs)\n",
                last(res.ml).iter, last(res.ml).fval, last(res.ml).seconds);

    const InvariantReport& rep = res.ml.report;
    std::printf("coarse corrections: %d applied, %d skipped, %d line-search failures\n",
                rep.corrections_applied, rep.corrections_skipped,
                rep.line_search_failures);
    std::printf("worst coherence residual: %.3g\n", rep.worst_coherence_residual);
    if (res.log.noise_floored > 0)
        std::printf("noise floor applied to %d zero measurements\n",
                    res.log.noise_floored);
    if (res.log.input_lifted > 0)
        std::printf("lifted %d input pixels to a positive floor\n",
                    res.log.input_lifted);
    for (std::size_t l = 0; l < res.log.rows_dropped.size(); ++l)
        if (res.log.rows_dropped[l] > 0)
            std::printf("level %zu: dropped %d dead rays\n", l,
                        res.log.rows_dropped[l]);

    if (cfg.experiment == ExperimentKind::DDesign) {
        std::printf("top-k angles:");
        for (int a : res.log.top_angles) std::printf(" %d", a);
        std::printf("\nleast-squares residual: top-k %.6g vs equidistant %.6g\n",
                    res.log.top_k_residual, res.log.equidistant_residual);
    }
    for (const std::string& f : res.files) std::printf("wrote %s\n", f.c_str());
}

// Hard invariants of the convergence theory; nonzero counts mean the run is
// not trustworthy and the process should say so in its exit code.
bool invariants_ok(const ExperimentResult& res) {
    auto bad = [](const InvariantReport& r) {
        return r.descent_violations > 0 || r.descent_sign_failures > 0 ||
               r.feasibility_failures > 0 || r.worst_coherence_residual > 1e-10;
    };
    return !bad(res.sl.report) && !bad(res.ml.report);
}

int run(ExperimentKind kind, const CliOverrides& ov) {
    if (kind == ExperimentKind::Selftest)
        return selftest(std::cout) == 0 ? 0 : 1;

    ExperimentConfig cfg = load_config(kind, ov.config_path);
    if (ov.seed >= 0) cfg.seed = static_cast<std::uint64_t>(ov.seed);
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.levels > 0) cfg.levels = ov.levels;
    if (ov.iters > 0) cfg.iters = ov.iters;
    cfg.reconcile();
    cfg.validate();

    ExperimentResult res = run_experiment(cfg);
    print_summary(cfg, res);
    if (!invariants_ok(res)) {
        std::fprintf(stderr, "invariant violations detected; see counters above\n");
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multilevel Bregman proximal gradient toolkit"};
    app.require_subcommand(1);

    CliOverrides ov;
    CLI::App* deconv = app.add_subcommand("deconv", "Poisson deconvolution comparison");
    CLI::App* tomo = app.add_subcommand("tomo", "tomographic reconstruction comparison");
    CLI::App* ddesign = app.add_subcommand("ddesign", "optimal design of experiments");
    CLI::App* self = app.add_subcommand("selftest", "cross-module invariant checks");
    for (CLI::App* cmd : {deconv, tomo, ddesign, self}) attach_options(cmd, ov);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints help or the parse diagnostic
        return e.get_name() == "CallForHelp" ? 0 : 2;
    }

    ExperimentKind kind = ExperimentKind::Selftest;
    if (deconv->parsed()) kind = ExperimentKind::Deconv;
    if (tomo->parsed()) kind = ExperimentKind::Tomo;
    if (ddesign->parsed()) kind = ExperimentKind::DDesign;

    try {
        return run(kind, ov);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
