#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "gridlearn/errors.hpp"
#include "gridlearn/reference_lp.hpp"
#include "gridlearn/rng.hpp"

using namespace gridlearn;

namespace {

// Independent check by brute force: the l1 problem in split form
// min 1'(u+w) s.t. A(u-w) <= b, u,w >= 0 attains its minimum at a vertex,
// i.e. a point where 2d of the m+2d constraints are active. Enumerates all
// square active sets, keeps feasible solutions, and returns the best
// objective with lexicographic tie-breaking on x = u - w.
bool brute_force_min_l1(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                        Eigen::VectorXd& best_x, double& best_obj) {
    const Eigen::Index m = A.rows();
    const Eigen::Index d = A.cols();
    const Eigen::Index nv = 2 * d;
    Eigen::MatrixXd G(m + nv, nv);  // G z <= h with z = [u; w]
    Eigen::VectorXd h(m + nv);
    G.topLeftCorner(m, d) = A;
    G.topRightCorner(m, d) = -A;
    G.bottomRows(nv) = -Eigen::MatrixXd::Identity(nv, nv);
    h.head(m) = b;
    h.tail(nv).setZero();

    bool found = false;
    std::vector<Eigen::Index> pick(static_cast<size_t>(nv));
    std::vector<bool> mask(static_cast<size_t>(m + nv), false);
    // Iterative subset enumeration over C(m+nv, nv) active sets.
    std::vector<Eigen::Index> idx(static_cast<size_t>(nv));
    for (Eigen::Index i = 0; i < nv; ++i) idx[static_cast<size_t>(i)] = i;
    for (;;) {
        Eigen::MatrixXd Ga(nv, nv);
        Eigen::VectorXd ha(nv);
        for (Eigen::Index r = 0; r < nv; ++r) {
            Ga.row(r) = G.row(idx[static_cast<size_t>(r)]);
            ha[r] = h[idx[static_cast<size_t>(r)]];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Ga);
        if (lu.isInvertible()) {
            Eigen::VectorXd z = lu.solve(ha);
            if (((G * z - h).array() <= 1e-9).all() && z.minCoeff() >= -1e-9) {
                double obj = z.sum();
                Eigen::VectorXd x = z.head(d) - z.tail(d);
                bool better = !found || obj < best_obj - 1e-9;
                if (!better && found && std::abs(obj - best_obj) <= 1e-9) {
                    for (Eigen::Index k = 0; k < d; ++k) {
                        if (std::abs(x[k] - best_x[k]) <= 1e-9) continue;
                        better = x[k] < best_x[k];
                        break;
                    }
                }
                if (better) {
                    best_obj = obj;
                    best_x = x;
                    found = true;
                }
            }
        }
        // next combination
        Eigen::Index k = nv - 1;
        while (k >= 0 && idx[static_cast<size_t>(k)] == m + nv - nv + k) --k;
        if (k < 0) break;
        ++idx[static_cast<size_t>(k)];
        for (Eigen::Index j = k + 1; j < nv; ++j)
            idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
    }
    return found;
}

}  // namespace

TEST_SUITE("reference_lp") {

TEST_CASE("one-variable floor: min |x| subject to x >= 1 gives 1") {
    Eigen::MatrixXd A(1, 1);
    A << -1;  // -x <= -1
    Eigen::VectorXd b(1);
    b << -1;
    Eigen::VectorXd x = reference_lp_min_l1(A, b);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("identity-design column problem pins one coordinate at the slack bound") {
    // |x_j - 1| <= 0.5 and |x_i| <= 0.5 elsewhere; cheapest point is 0.5*e_j.
    const int d = 4, j = 2;
    Eigen::MatrixXd A(2 * d, d);
    Eigen::VectorXd b(2 * d);
    A.topRows(d) = Eigen::MatrixXd::Identity(d, d);
    A.bottomRows(d) = -Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < d; ++i) {
        b[i] = (i == j ? 1.5 : 0.5);
        b[d + i] = (i == j ? -0.5 : 0.5);
    }
    Eigen::VectorXd x = reference_lp_min_l1(A, b);
    for (int i = 0; i < d; ++i)
        CHECK(x[i] == doctest::Approx(i == j ? 0.5 : 0.0).epsilon(1e-9));
}

TEST_CASE("matches brute-force vertex enumeration on random low-dimensional problems") {
    Rng rng(321);
    int checked = 0;
    for (int trial = 0; trial < 12; ++trial) {
        int d = 1 + trial % 3;
        int m = d + 1 + trial % 2;
        Eigen::MatrixXd A = rng.normal_matrix(m, d);
        Eigen::VectorXd x0 = rng.normal_matrix(d, 1);
        // b = A x0 + positive slack guarantees feasibility.
        Eigen::VectorXd b = A * x0 + rng.normal_matrix(m, 1).cwiseAbs() +
                            Eigen::VectorXd::Constant(m, 0.05);
        Eigen::VectorXd brute;
        double brute_obj = std::numeric_limits<double>::infinity();
        REQUIRE(brute_force_min_l1(A, b, brute, brute_obj));
        Eigen::VectorXd x = reference_lp_min_l1(A, b);
        CHECK(x.cwiseAbs().sum() == doctest::Approx(brute_obj).epsilon(1e-7));
        ++checked;
    }
    CHECK(checked == 12);
}

TEST_CASE("optional non-negativity constraint is honored") {
    // x <= -0.5 alone forces a negative coordinate; adding x >= 0 is infeasible.
    Eigen::MatrixXd A(1, 1);
    A << 1;
    Eigen::VectorXd b(1);
    b << -0.5;
    Eigen::VectorXd x = reference_lp_min_l1(A, b);
    CHECK(x[0] == doctest::Approx(-0.5).epsilon(1e-8));
    CHECK_THROWS_AS(reference_lp_min_l1(A, b, 0), NumericError);
}

TEST_CASE("infeasible systems are reported") {
    Eigen::MatrixXd A(2, 1);
    A << 1, -1;  // x <= -1 and -x <= -1 cannot both hold
    Eigen::VectorXd b(2);
    b << -1, -1;
    CHECK_THROWS_AS(reference_lp_min_l1(A, b), NumericError);
}

TEST_CASE("scale guard rejects oversized problems") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 31);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(reference_lp_min_l1(A, b), ConfigError);
    Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(121, 2);
    Eigen::VectorXd b2 = Eigen::VectorXd::Ones(121);
    CHECK_THROWS_AS(reference_lp_min_l1(A2, b2), ConfigError);
    CHECK_THROWS_AS(reference_lp_min_l1(A2.topRows(3), b2.head(2)), ConfigError);
}

TEST_CASE("larger lambda never increases the l1 optimum of a box problem") {
    Rng rng(99);
    Eigen::MatrixXd M = rng.normal_matrix(5, 5);
    Eigen::MatrixXd C = M * M.transpose() / 5.0 + Eigen::MatrixXd::Identity(5, 5);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
    e[1] = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {0.05, 0.1, 0.3, 0.6, 1.0}) {
        Eigen::MatrixXd A(10, 5);
        A.topRows(5) = C;
        A.bottomRows(5) = -C;
        Eigen::VectorXd b(10);
        b.head(5) = e.array() + lambda;
        b.tail(5) = -e.array() + lambda;
        double obj = reference_lp_min_l1(A, b).cwiseAbs().sum();
        CHECK(obj <= prev + 1e-9);
        prev = obj;
    }
}

}  // TEST_SUITE
