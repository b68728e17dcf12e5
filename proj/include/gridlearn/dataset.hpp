#pragma once
#include <vector>

#include <Eigen/Dense>

#include "gridlearn/pde_sim.hpp"

namespace gridlearn {

// Lagged static samples. Column index = loc*T + lag, lag 0 being the
// earliest time, so p = q*T and edge decoding is fixed.
struct DesignMatrix {
    Eigen::MatrixXd samples;  // n x p
    int q = 0;
    int T = 0;

    Eigen::Index n() const { return samples.rows(); }
    Eigen::Index p() const { return samples.cols(); }
};

struct ZScoreInfo {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;              // as applied; 1 for constant columns
    std::vector<bool> constant;      // sd below 1e-12 before scaling
};

struct CovarianceView {
    Eigen::MatrixXd C;     // unbiased sample covariance, symmetrized
    Eigen::MatrixXd Chat;  // C + (1/n) I
    Eigen::Index n = 0;
};

// Each run of length L yields L-T+1 samples; sample s concatenates rows
// s..s+T-1 so that column (loc, lag) holds the run's value at location loc,
// time s+lag. No sample spans two runs.
DesignMatrix lag_expand(const RawRuns& runs, int T);

// Centers every column and scales non-constant ones to unit unbiased
// standard deviation, in place.
ZScoreInfo zscore_inplace(DesignMatrix& X);

// C = X'X/(n-1) with symmetry enforced by transpose averaging; requires
// z-scored input.
CovarianceView sample_covariance(const DesignMatrix& X);

// Threshold rate delta * sqrt(ln p / n). Values of delta below 2 are
// permitted but outside the supported theory; callers warn on them.
double tau(double delta, Eigen::Index p, Eigen::Index n);

}  // namespace gridlearn
