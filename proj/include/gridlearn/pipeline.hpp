#pragma once
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridlearn/aclime.hpp"
#include "gridlearn/pde_sim.hpp"

namespace gridlearn {

// Everything the subcommands need, resolved from defaults, an optional
// key=value config file, and command-line flags (flags win).
struct PipelineConfig {
    // simulation
    std::string scenario = "ring";
    int width = 20;
    int height = 20;
    double kappa = 0.1;
    double dt = 0.0;    // <= 0 selects 0.9x the stability limit
    int run_steps = 32; // recorded rows per run, after any subsampling
    int stride = 0;     // <= 0 selects 10 for fast_ring, 1 otherwise

    // estimation
    int T = 10;            // lags per location; p = width*height*T
    std::string method = "aclime";
    double delta = 2.0;
    double lambda = 0.0;   // clime radius; <= 0 selects tau(delta, p, n)
    AdmmParams stage1;
    AdmmParams stage2;
    Eigen::Index block = 64;
    int workers = 1;

    // evaluation
    double zero_tol = 0.0;    // <= 0 selects 2% of max off-diagonal |omega_hat|
    std::string mode = "both_incident";
    int min_strength = -1;    // < 0 selects 0 (both_incident) or 10 (outgoing_only)

    // plumbing
    std::filesystem::path out_dir = "out";
    unsigned long long seed = 7;  // synthetic-data commands only
};

Grid make_grid(const PipelineConfig& cfg);
int resolve_stride(const PipelineConfig& cfg);
int resolve_min_strength(const PipelineConfig& cfg);
double resolve_zero_tol(double zero_tol, const Eigen::MatrixXd& omega_hat);

// Writes runs.gmat (all runs stacked row-wise) and runs.meta. For strides
// above one the simulation records (run_steps-1)*stride + 1 raw rows and
// keeps every stride-th. Returns a process exit code.
int cmd_simulate(const PipelineConfig& cfg);

// Reads runs.gmat/runs.meta, builds the lagged z-scored design, runs the
// configured estimator and writes omega_hat.gmat, omega_sparse.csv,
// zscore.csv, columns.csv, stage trace CSVs and learn.meta. Results are
// written even when columns stop unconverged; that case returns 3.
int cmd_learn(const PipelineConfig& cfg);

// Reads omega_hat.gmat/learn.meta, decodes edges, reconstructs and scores
// velocities against the scenario truth (scaled to cells per sample row),
// and writes edges.tsv, velocity_report.csv, summary.csv and quiver.svg.
int cmd_evaluate(const PipelineConfig& cfg);

// simulate + learn + evaluate with one config; byte-identical outputs to
// running the subcommands separately.
int cmd_pipeline(const PipelineConfig& cfg);

// Tridiagonal chain precision matrix: unit diagonal, `w` on the first
// off-diagonals. Must be positive definite.
Eigen::MatrixXd chain_precision(int p, double w);

// Draws n rows from N(0, inverse(omega)) with the library generator.
Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& omega, int n,
                                unsigned long long seed);

struct StabilityRow {
    double rho = 0.0;
    int stage1_iterations = 0;   // max over columns
    int stage2_iterations = 0;
    double stage1_primal = 0.0;  // max final per-column residuals
    double stage1_dual = 0.0;
    double stage2_primal = 0.0;
    double stage2_dual = 0.0;
    bool converged = false;      // every column, both stages
    bool support_exact = false;
};

struct StabilityReport {
    unsigned long long seed = 0;
    int p = 0;
    int n = 0;
    double delta = 0.0;
    std::vector<StabilityRow> rows;
    std::vector<SolveMeta> stage1_metas;  // parallel to rows
    std::vector<SolveMeta> stage2_metas;
};

// Chain-graph recovery experiment: fixed 10-variable chain (w = 0.4),
// n samples, delta, one ACLIME run per rho. Support is compared on the
// auto zero tolerance.
StabilityReport run_stability_check(unsigned long long seed, int n,
                                    double delta,
                                    const std::vector<double>& rhos,
                                    const AdmmParams& base);

// Runs the default sweep (rho in {0.1, 0.5, 1, 2}, n = 1500, delta from
// cfg) and writes stability.csv plus per-rho trace files.
int cmd_stability_check(const PipelineConfig& cfg);

}  // namespace gridlearn
