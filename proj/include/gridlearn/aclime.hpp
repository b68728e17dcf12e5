#pragma once
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gridlearn/admm_core.hpp"
#include "gridlearn/dataset.hpp"

namespace gridlearn {

// Per-column solver outcome. `inf_residual` is the max-norm of the primal
// residual at stop; at convergence it stays within 10 * tol_abs.
struct ColumnMeta {
    int iterations = 0;
    bool converged = false;
    double primal = 0.0;
    double dual = 0.0;
    double inf_residual = 0.0;
    bool diag_nonpositive = false;  // stage 1 only: b_jj <= 0 at stop
};

struct SolveMeta {
    std::vector<ColumnMeta> columns;
    std::vector<TraceRow> trace;  // aggregated per block at every residual check
    double eta_used = 0.0;
    double rho = 0.0;
};

// Outcome of one stage-1 column solve, exposed for small-p checks.
struct Stage1Column {
    Eigen::VectorXd b;  // p
    ColumnMeta meta;
};

struct Stage1Result {
    Eigen::VectorXd omega1_diag;       // b_jj per column, before any fallback
    SolveMeta meta;
    std::optional<Eigen::MatrixXd> B;  // all coefficients, kept on request only
};

struct PrecisionEstimate {
    Eigen::MatrixXd omega_tilde;    // pre-symmetrization columns
    Eigen::MatrixXd omega_hat;      // final symmetric estimate
    Eigen::VectorXd lambda_per_col;
    Eigen::VectorXd omega1_diag;    // empty for the CLIME baseline
    Eigen::VectorXd omega_breve;    // empty for the CLIME baseline
    double tau = 0.0;
    double delta = 0.0;
    SolveMeta stage1;               // empty for the CLIME baseline
    SolveMeta stage2;
};

// Stage 1: per column j, min ||b||_1 subject to
// -tau*b_jj <= (Chat b - e_j)_i <= tau*b_jj for all i, solved by inexact
// (linearized) ADMM on the stacked form A_j b + r = c_j, r >= 0. Requires
// z-scored input (diag(C) = 1 within 1e-6). Columns are processed in
// fixed blocks of `block_size`; results do not depend on `workers`.
Stage1Result stage1_solve(const CovarianceView& cov, double tau_n,
                          const AdmmParams& params, Eigen::Index block_size,
                          int workers = 1, bool keep_full = false);

// Single-column variant of stage 1, for small-p checks.
Stage1Column stage1_solve_column(const CovarianceView& cov, Eigen::Index j,
                                 double tau_n, const AdmmParams& params);

// omega_breve_j = omega1_diag_j where c_jj <= sqrt(n / ln p), else sqrt(ln p / n).
Eigen::VectorXd correct_diagonal(const Eigen::VectorXd& omega1_diag,
                                 const Eigen::VectorXd& c_diag,
                                 Eigen::Index p, Eigen::Index n);

// Stage 2: per column j, min ||b||_1 subject to ||Chat b - e_j||_inf <=
// lambda_j, via the splitting Chat b = z with a box constraint on z.
// Same blocking and determinism contract as stage 1.
Eigen::MatrixXd stage2_solve(const CovarianceView& cov,
                             const Eigen::VectorXd& lambda_per_col,
                             const AdmmParams& params, Eigen::Index block_size,
                             int workers, SolveMeta* meta);

// Min-magnitude symmetrization; equal magnitudes take the (i,j) entry.
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& omega_tilde);

// CLIME baseline: stage 2 with one fixed lambda for every column, then
// symmetrization.
PrecisionEstimate clime_estimate(const CovarianceView& cov, double lambda,
                                 const AdmmParams& params, Eigen::Index block_size,
                                 int workers = 1);

// Full two-stage estimator on a z-scored design matrix. Stage-1 columns
// whose diagonal lands nonpositive fall back to sqrt(ln p / n) before the
// diagonal correction.
PrecisionEstimate aclime_estimate(const DesignMatrix& X, double delta,
                                  const AdmmParams& stage1_params,
                                  const AdmmParams& stage2_params,
                                  Eigen::Index block_size, int workers = 1);

}  // namespace gridlearn
