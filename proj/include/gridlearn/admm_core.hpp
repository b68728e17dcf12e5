#pragma once
#include <vector>

#include <Eigen/Dense>

namespace gridlearn {

struct AdmmParams {
    double rho = 1.0;
    double eta = 0.0;       // <= 0 selects 1.05 * rho * (stage operator norm)^2
    double tol_abs = 1e-5;
    double tol_rel = 1e-4;
    int max_iter = 2000;
    int check_every = 1;    // residual evaluation cadence; stopping only happens at checks
};

// One residual sample of a block solve, aggregated over the block's columns.
struct TraceRow {
    int block = 0;
    int iteration = 0;      // 1-based
    double primal = 0.0;    // Frobenius norm of the primal residual
    double dual = 0.0;      // rho * Frobenius norm of the dual residual
};

// Elementwise sign(v) * max(|v| - kappa, 0).
double soft_threshold(double v, double kappa);
Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& v, double kappa);

// Elementwise max(h, 0).
double nonneg_project(double h);
Eigen::MatrixXd nonneg_project(const Eigen::MatrixXd& h);

// Elementwise clamp of a into [w - lambda, w + lambda].
double box_project(double a, double w, double lambda);
Eigen::MatrixXd box_project(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w, double lambda);

// Largest eigenvalue of a symmetric PSD matrix by power iteration
// (deterministic all-ones start, 50 iterations, tolerance 1e-8).
double power_lambda_max(const Eigen::MatrixXd& m);

// Default linearization weight for a solve on Chat.
double auto_eta(double rho, const Eigen::MatrixXd& chat);

}  // namespace gridlearn
