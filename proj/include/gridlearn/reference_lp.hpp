#pragma once
#include <optional>

#include <Eigen/Dense>

namespace gridlearn {

// Exact minimizer of ||x||_1 subject to A_ub x <= b_ub, for d <= 30 and
// m <= 120. Ties are broken toward the lexicographically smallest solution.
// `nonneg_index`, when given, adds the constraint x[idx] >= 0.
Eigen::VectorXd reference_lp_min_l1(const Eigen::MatrixXd& A_ub,
                                    const Eigen::VectorXd& b_ub,
                                    std::optional<Eigen::Index> nonneg_index = {});

}  // namespace gridlearn
