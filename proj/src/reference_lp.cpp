#include "gridlearn/reference_lp.hpp"

#include <cmath>
#include <vector>

#include <Eigen/LU>

#include "gridlearn/errors.hpp"

namespace gridlearn {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kOptTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr int kMaxPivots = 100000;
constexpr int kMaxRounds = 500;

enum class Claim { kOptimal, kUnbounded };

// One uninterrupted run of primal simplex on the maintained tableau with
// Bland's rule (smallest eligible index enters; ratio ties leave by
// smallest basic index), which cannot cycle. `tab` is [A | b] with b >= 0
// and `basis` indexes an identity submatrix. Returns a claimed verdict;
// the caller re-verifies it on exactly reconstructed data, because one
// near-tolerance pivot inflates row values enough that the incremental
// updates cancel catastrophically and the drifted tableau can fake
// optimality, unboundedness, or infeasibility.
Claim pivot_to_claim(Eigen::MatrixXd& tab, Eigen::RowVectorXd& cost,
                     std::vector<int>& basis, Eigen::Index& claim_col) {
    const Eigen::Index m = tab.rows();
    const Eigen::Index n = tab.cols() - 1;
    for (int guard = 0; guard < kMaxPivots; ++guard) {
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < n; ++j)
            if (cost[j] < -kOptTol) { enter = j; break; }
        if (enter < 0) { claim_col = -1; return Claim::kOptimal; }

        Eigen::Index leave = -1;
        double best_ratio = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (tab(i, enter) <= kPivotTol) continue;
            double ratio = tab(i, n) / tab(i, enter);
            if (leave < 0 || ratio < best_ratio - kPivotTol ||
                (std::abs(ratio - best_ratio) <= kPivotTol && basis[i] < basis[leave]))
                { leave = i; best_ratio = ratio; }
        }
        if (leave < 0) { claim_col = enter; return Claim::kUnbounded; }

        double piv = tab(leave, enter);
        tab.row(leave) /= piv;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (i == leave) continue;
            double f = tab(i, enter);
            if (f != 0.0) tab.row(i) -= f * tab.row(leave);
        }
        double cf = cost[enter];
        if (cf != 0.0) cost -= cf * tab.row(leave).head(n);
        basis[static_cast<size_t>(leave)] = static_cast<int>(enter);
    }
    throw NumericError("simplex pivot limit exceeded");
}

// Rebuilds tableau and reduced costs exactly from the original data for
// the current basis. Degenerate right-hand sides that reconstruct to tiny
// negatives are clamped to zero; anything worse means the maintained
// pivoting wandered off a feasible basis.
void reconstruct(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                 const Eigen::RowVectorXd& c, const std::vector<int>& basis,
                 Eigen::MatrixXd& tab, Eigen::RowVectorXd& cost) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    Eigen::MatrixXd B(m, m);
    for (Eigen::Index i = 0; i < m; ++i) B.col(i) = A.col(basis[static_cast<size_t>(i)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible())
        throw NumericError("reference solver: basis matrix is singular");
    tab.resize(m, n + 1);
    tab.leftCols(n) = lu.solve(A);
    tab.col(n) = lu.solve(b);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (tab(i, n) < -kFeasTol)
            throw NumericError("reference solver: lost primal feasibility");
        if (tab(i, n) < 0.0) tab(i, n) = 0.0;
    }
    cost = c;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double f = c[basis[static_cast<size_t>(i)]];
        if (f != 0.0) cost -= f * tab.row(i).head(n);
    }
}

// min c'y over the tableau, accepting a verdict only when it holds on the
// exact reconstruction. A refuted claim resumes pivoting from the exact
// tableau, which both corrects the verdict and resets accumulated drift.
void solve_verified(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                    const Eigen::RowVectorXd& c, std::vector<int>& basis,
                    Eigen::MatrixXd& tab, Eigen::RowVectorXd& cost) {
    for (int round = 0; round < kMaxRounds; ++round) {
        Eigen::Index claim_col = -1;
        const Claim claim = pivot_to_claim(tab, cost, basis, claim_col);
        reconstruct(A, b, c, basis, tab, cost);
        if (claim == Claim::kOptimal) {
            if (cost.minCoeff() >= -kOptTol) return;
        } else if (cost[claim_col] < -kOptTol &&
                   (tab.col(claim_col).head(tab.rows()).array() <= kPivotTol).all()) {
            throw NumericError("LP is unbounded");
        }
    }
    throw NumericError("simplex did not converge");
}

// min c'y subject to Ay = b, y >= 0, via two-phase simplex.
Eigen::VectorXd standard_simplex(Eigen::MatrixXd A, Eigen::VectorXd b,
                                 const Eigen::VectorXd& c, double& objective) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    for (Eigen::Index i = 0; i < m; ++i)
        if (b[i] < 0.0) { A.row(i) = -A.row(i); b[i] = -b[i]; }

    // Phase 1: artificial basis, minimize the artificial sum.
    Eigen::MatrixXd A1(m, n + m);
    A1.leftCols(n) = A;
    A1.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
    Eigen::RowVectorXd c1 = Eigen::RowVectorXd::Zero(n + m);
    c1.segment(n, m).setOnes();
    std::vector<int> basis(static_cast<size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<size_t>(i)] = static_cast<int>(n + i);

    Eigen::MatrixXd tab(m, n + m + 1);
    tab.leftCols(n + m) = A1;
    tab.col(n + m) = b;
    Eigen::RowVectorXd cost = c1;
    for (Eigen::Index i = 0; i < m; ++i) cost -= tab.row(i).head(n + m);
    solve_verified(A1, b, c1, basis, tab, cost);

    double artificial_sum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        if (basis[static_cast<size_t>(i)] >= n) artificial_sum += tab(i, n + m);
    if (artificial_sum > kFeasTol) throw NumericError("LP is infeasible");

    // Drive leftover artificials out of the basis; rows that cannot pivot
    // are redundant and get dropped.
    std::vector<Eigen::Index> keep_rows;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (basis[static_cast<size_t>(i)] < n) { keep_rows.push_back(i); continue; }
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::abs(tab(i, j)) > kPivotTol) { enter = j; break; }
        if (enter < 0) continue;  // redundant constraint row
        double piv = tab(i, enter);
        tab.row(i) /= piv;
        for (Eigen::Index r = 0; r < m; ++r) {
            if (r == i) continue;
            double f = tab(r, enter);
            if (f != 0.0) tab.row(r) -= f * tab.row(i);
        }
        basis[static_cast<size_t>(i)] = static_cast<int>(enter);
        keep_rows.push_back(i);
    }

    const Eigen::Index m2 = static_cast<Eigen::Index>(keep_rows.size());
    Eigen::MatrixXd A2(m2, n);
    Eigen::VectorXd b2(m2);
    Eigen::MatrixXd tab2(m2, n + 1);
    std::vector<int> basis2;
    basis2.reserve(keep_rows.size());
    for (Eigen::Index k = 0; k < m2; ++k) {
        A2.row(k) = A.row(keep_rows[static_cast<size_t>(k)]);
        b2[k] = b[keep_rows[static_cast<size_t>(k)]];
        tab2.row(k).head(n) = tab.row(keep_rows[static_cast<size_t>(k)]).head(n);
        tab2(k, n) = tab(keep_rows[static_cast<size_t>(k)], n + m);
        basis2.push_back(basis[static_cast<size_t>(keep_rows[static_cast<size_t>(k)])]);
    }

    // Phase 2: real objective, basic columns eliminated from the cost row.
    Eigen::RowVectorXd c2 = c.transpose();
    Eigen::RowVectorXd cost2 = c2;
    for (size_t k = 0; k < basis2.size(); ++k) {
        double f = cost2[basis2[k]];
        if (f != 0.0) cost2 -= f * tab2.row(static_cast<Eigen::Index>(k));
    }
    solve_verified(A2, b2, c2, basis2, tab2, cost2);

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (size_t k = 0; k < basis2.size(); ++k)
        y[basis2[k]] = tab2(static_cast<Eigen::Index>(k), n);
    objective = c.dot(y);
    return y;
}

// min c_split' [u; w] subject to A_split [u; w] <= b_ub, u, w >= 0, where
// the first d columns of A_split act on u and the next d on w.
Eigen::VectorXd split_ineq_simplex(const Eigen::MatrixXd& A_split,
                                   const Eigen::VectorXd& b_ub,
                                   const Eigen::VectorXd& c_split,
                                   double& objective) {
    const Eigen::Index m = A_split.rows();
    const Eigen::Index nv = A_split.cols();
    Eigen::MatrixXd A(m, nv + m);
    A.leftCols(nv) = A_split;
    A.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nv + m);
    c.head(nv) = c_split;
    Eigen::VectorXd y = standard_simplex(A, b_ub, c, objective);
    return y.head(nv);
}

}  // namespace

Eigen::VectorXd reference_lp_min_l1(const Eigen::MatrixXd& A_ub,
                                    const Eigen::VectorXd& b_ub,
                                    std::optional<Eigen::Index> nonneg_index) {
    const Eigen::Index m = A_ub.rows();
    const Eigen::Index d = A_ub.cols();
    if (b_ub.size() != m) throw ConfigError("reference_lp_min_l1 dimension mismatch");
    if (d > 30 || m > 120)
        throw ConfigError("reference_lp_min_l1 is a small-scale oracle (d <= 30, m <= 120)");
    if (nonneg_index && (*nonneg_index < 0 || *nonneg_index >= d))
        throw ConfigError("nonneg_index out of range");

    const Eigen::Index base_rows = m + (nonneg_index ? 1 : 0);
    Eigen::MatrixXd base(base_rows, 2 * d);
    Eigen::VectorXd base_b(base_rows);
    base.block(0, 0, m, d) = A_ub;
    base.block(0, d, m, d) = -A_ub;
    base_b.head(m) = b_ub;
    if (nonneg_index) {
        base.row(m).setZero();
        base(m, *nonneg_index) = -1.0;       // -u + w <= 0, i.e. x >= 0
        base(m, d + *nonneg_index) = 1.0;
        base_b[m] = 0.0;
    }

    double l1_opt = 0.0;
    split_ineq_simplex(base, base_b, Eigen::VectorXd::Ones(2 * d), l1_opt);

    // Lexicographic refinement: minimize each coordinate in turn on the
    // optimal face. Pinned coordinates are substituted out of the system
    // (their contribution moves into the right-hand side and the remaining
    // l1 budget), so every pass shrinks and no equality-pin rows pile up.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd b_eff = b_ub;
    double budget = l1_opt;
    for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index rest = d - i;
        const bool keep_nonneg = nonneg_index && *nonneg_index >= i;
        const Eigen::Index rows = m + (keep_nonneg ? 1 : 0) + 1;
        Eigen::MatrixXd A(rows, 2 * rest);
        Eigen::VectorXd b(rows);
        A.block(0, 0, m, rest) = A_ub.rightCols(rest);
        A.block(0, rest, m, rest) = -A_ub.rightCols(rest);
        b.head(m) = b_eff;
        Eigen::Index r = m;
        if (keep_nonneg) {
            A.row(r).setZero();
            A(r, *nonneg_index - i) = -1.0;
            A(r, rest + *nonneg_index - i) = 1.0;
            b[r] = 0.0;
            ++r;
        }
        A.row(r) = Eigen::RowVectorXd::Ones(2 * rest);  // remaining l1 budget
        b[r] = budget;
        Eigen::VectorXd c = Eigen::VectorXd::Zero(2 * rest);
        c[0] = 1.0;  // coordinate i is the first remaining column
        c[rest] = -1.0;
        double ci = 0.0;
        split_ineq_simplex(A, b, c, ci);
        x[i] = ci;
        b_eff -= A_ub.col(i) * ci;
        budget -= std::abs(ci);
    }
    return x;
}

}  // namespace gridlearn
