#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "gridlearn/errors.hpp"
#include "gridlearn/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Grid transport structure learning: simulate an advection-diffusion "
                 "process, estimate a sparse precision matrix over lagged variables, and "
                 "reconstruct the flow field from the learned graph."};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "key=value config file; flags override it");

    gridlearn::PipelineConfig cfg;
    if (const char* env = std::getenv("GRIDLEARN_OUT")) cfg.out_dir = env;

    int grid_side = 0;
    auto* grid_opt = app.add_option("--grid", grid_side, "square grid side (sets width and height)");
    auto* width_opt = app.add_option("--width", cfg.width, "grid width");
    auto* height_opt = app.add_option("--height", cfg.height, "grid height");
    app.add_option("--scenario", cfg.scenario, "circular | ring | cross_current | fast_ring");
    app.add_option("--kappa", cfg.kappa, "diffusion coefficient");
    app.add_option("--dt", cfg.dt, "time step; <= 0 selects 0.9x the stability limit");
    app.add_option("--steps", cfg.run_steps, "recorded rows per impulse run (after subsampling)");
    app.add_option("--stride", cfg.stride, "subsampling stride; <= 0 selects 10 for fast_ring, else 1");

    app.add_option("--lags", cfg.T, "lagged copies per location");
    app.add_option("--method", cfg.method, "aclime | clime");
    app.add_option("--delta", cfg.delta, "threshold rate constant");
    app.add_option("--lambda", cfg.lambda, "clime radius; <= 0 selects tau(delta, p, n)");
    app.add_option("--rho1", cfg.stage1.rho, "stage-1 penalty parameter");
    app.add_option("--eta1", cfg.stage1.eta, "stage-1 linearization weight; <= 0 selects the default");
    app.add_option("--rho2", cfg.stage2.rho, "stage-2 penalty parameter");
    app.add_option("--eta2", cfg.stage2.eta, "stage-2 linearization weight; <= 0 selects the default");
    app.add_option("--tol-abs", cfg.stage1.tol_abs, "absolute stopping tolerance (both stages)");
    app.add_option("--tol-rel", cfg.stage1.tol_rel, "relative stopping tolerance (both stages)");
    app.add_option("--max-iter", cfg.stage1.max_iter, "iteration cap per column (both stages)");
    app.add_option("--check-every", cfg.stage1.check_every, "residual check cadence (both stages)");
    app.add_option("--block", cfg.block, "columns solved per block");
    app.add_option("--workers", cfg.workers, "worker threads for block-parallel work");

    app.add_option("--zero-tol", cfg.zero_tol,
                   "edge threshold; <= 0 selects 2% of the largest off-diagonal |omega|");
    app.add_option("--mode", cfg.mode, "both_incident | outgoing_only");
    app.add_option("--min-strength", cfg.min_strength,
                   "minimum contributions per cell; < 0 selects 0/10 by mode");

    app.add_option("--out", cfg.out_dir, "output directory (default from GRIDLEARN_OUT)");
    app.add_option("--seed", cfg.seed, "generator seed for synthetic-data commands");

    auto* sim = app.add_subcommand("simulate", "run per-impulse simulations and write runs.gmat");
    auto* learn = app.add_subcommand("learn", "estimate the precision matrix from runs.gmat");
    auto* evaluate = app.add_subcommand("evaluate", "decode edges, reconstruct and score velocities");
    auto* pipeline = app.add_subcommand("pipeline", "simulate + learn + evaluate in one go");
    auto* stability = app.add_subcommand("stability-check",
                                         "chain-graph recovery across a penalty sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*grid_opt) {
        if (!*width_opt) cfg.width = grid_side;
        if (!*height_opt) cfg.height = grid_side;
    }
    cfg.stage2.tol_abs = cfg.stage1.tol_abs;
    cfg.stage2.tol_rel = cfg.stage1.tol_rel;
    cfg.stage2.max_iter = cfg.stage1.max_iter;
    cfg.stage2.check_every = cfg.stage1.check_every;
    if (cfg.delta < 2.0)
        std::fprintf(stderr, "warning: delta = %g is below the supported range (>= 2)\n",
                     cfg.delta);

    try {
        if (sim->parsed()) return gridlearn::cmd_simulate(cfg);
        if (learn->parsed()) return gridlearn::cmd_learn(cfg);
        if (evaluate->parsed()) return gridlearn::cmd_evaluate(cfg);
        if (pipeline->parsed()) return gridlearn::cmd_pipeline(cfg);
        if (stability->parsed()) return gridlearn::cmd_stability_check(cfg);
        std::fprintf(stderr, "no subcommand selected\n");
        return 2;
    } catch (const gridlearn::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const gridlearn::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const gridlearn::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
