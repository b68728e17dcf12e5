#include <cmath>

#include "doctest.h"
#include "gridlearn/aclime.hpp"
#include "gridlearn/errors.hpp"
#include "gridlearn/reference_lp.hpp"
#include "gridlearn/rng.hpp"

using namespace gridlearn;

namespace {

CovarianceView identity_cov(Eigen::Index p, Eigen::Index n) {
    CovarianceView cov;
    cov.C = Eigen::MatrixXd::Identity(p, p);
    cov.Chat = cov.C + Eigen::MatrixXd::Identity(p, p) / static_cast<double>(n);
    cov.n = n;
    return cov;
}

// Z-scored samples from N(0, Sigma).
DesignMatrix gaussian_design(const Eigen::MatrixXd& sigma, Eigen::Index n,
                             std::uint64_t seed) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    REQUIRE(llt.info() == Eigen::Success);
    Rng rng(seed);
    DesignMatrix X;
    X.q = static_cast<int>(sigma.rows());
    X.T = 1;
    X.samples = rng.normal_matrix(n, sigma.rows()) * llt.matrixL().transpose();
    zscore_inplace(X);
    return X;
}

Eigen::MatrixXd random_spd(Eigen::Index p, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd a = rng.normal_matrix(p, p);
    return a * a.transpose() / static_cast<double>(p) +
           Eigen::MatrixXd::Identity(p, p);
}

// Stage-1 constraint rows: |Chat b - e_j|_inf <= tau * b_jj with b_jj >= 0.
Eigen::VectorXd stage1_lp(const CovarianceView& cov, Eigen::Index j, double tau_n) {
    const Eigen::Index p = cov.Chat.rows();
    Eigen::MatrixXd A(2 * p, p);
    Eigen::VectorXd b(2 * p);
    A.topRows(p) = cov.Chat;
    A.bottomRows(p) = -cov.Chat;
    A.col(j).array() -= tau_n;
    b.setZero();
    b[j] = 1.0;
    b[p + j] = -1.0;
    return reference_lp_min_l1(A, b, j);
}

// Stage-2 constraint rows: |Chat b - e_j|_inf <= lambda.
Eigen::VectorXd stage2_lp(const CovarianceView& cov, Eigen::Index j, double lambda) {
    const Eigen::Index p = cov.Chat.rows();
    Eigen::MatrixXd A(2 * p, p);
    Eigen::VectorXd b(2 * p);
    A.topRows(p) = cov.Chat;
    A.bottomRows(p) = -cov.Chat;
    b.head(p) = Eigen::VectorXd::Constant(p, lambda);
    b.tail(p) = Eigen::VectorXd::Constant(p, lambda);
    b[j] += 1.0;
    b[p + j] -= 1.0;
    return reference_lp_min_l1(A, b);
}

double stage1_violation(const CovarianceView& cov, Eigen::Index j,
                        double tau_n, const Eigen::VectorXd& b) {
    Eigen::VectorXd r = cov.Chat * b;
    r[j] -= 1.0;
    return std::max(0.0, r.cwiseAbs().maxCoeff() - tau_n * b[j]);
}

double stage2_violation(const CovarianceView& cov, Eigen::Index j,
                        double lambda, const Eigen::VectorXd& b) {
    Eigen::VectorXd r = cov.Chat * b;
    r[j] -= 1.0;
    return std::max(0.0, r.cwiseAbs().maxCoeff() - lambda);
}

}  // namespace

TEST_SUITE("aclime") {

TEST_CASE("solvers reject covariance that is not a correlation matrix") {
    CovarianceView cov = identity_cov(4, 100);
    cov.C(2, 2) = 1.2;
    cov.Chat(2, 2) = 1.2 + 0.01;
    AdmmParams prm;
    CHECK_THROWS_AS(stage1_solve_column(cov, 0, 0.1, prm), ConfigError);
    CHECK_THROWS_AS(stage1_solve(cov, 0.1, prm, 2), ConfigError);
    CHECK_THROWS_AS(stage2_solve(cov, Eigen::VectorXd::Constant(4, 0.3), prm, 2, 1, nullptr),
                    ConfigError);
}

TEST_CASE("stage 1 on independent data solves the scalar subproblem per column") {
    // With Chat diagonal the column problem is 1-D: the binding constraint
    // is Chat_jj * b - 1 >= -tau * b, so b = 1 / (Chat_jj + tau).
    const Eigen::Index p = 3, n = 100;
    CovarianceView cov = identity_cov(p, n);
    const double tau_n = 0.1;
    const double expected = 1.0 / (1.0 + 1.0 / static_cast<double>(n) + tau_n);
    AdmmParams prm;
    prm.check_every = 1;

    Stage1Result res = stage1_solve(cov, tau_n, prm, 2, 1, true);
    REQUIRE(res.B.has_value());
    for (Eigen::Index j = 0; j < p; ++j) {
        CHECK(res.meta.columns[j].converged);
        CHECK(res.omega1_diag[j] == doctest::Approx(expected).epsilon(1e-3));
        for (Eigen::Index i = 0; i < p; ++i)
            if (i != j) CHECK(std::abs((*res.B)(i, j)) <= 1e-6);
    }

    Stage1Column col = stage1_solve_column(cov, 1, tau_n, prm);
    CHECK(col.meta.converged);
    CHECK(col.b[1] == doctest::Approx(expected).epsilon(1e-3));
    CHECK(col.b[1] == res.omega1_diag[1]);  // same block algorithm, same bits
}

TEST_CASE("stage 1 agrees with the reference LP on Gaussian data") {
    const Eigen::Index p = 6, n = 400;
    DesignMatrix X = gaussian_design(random_spd(p, 42), n, 1001);
    CovarianceView cov = sample_covariance(X);
    const double tau_n = tau(2.0, p, n);
    AdmmParams prm;
    prm.check_every = 1;
    // the default tolerances stop around 1e-4; the oracle bars need tighter
    prm.tol_abs = 1e-7;
    prm.tol_rel = 1e-6;
    prm.max_iter = 20000;
    for (Eigen::Index j = 0; j < p; ++j) {
        Stage1Column col = stage1_solve_column(cov, j, tau_n, prm);
        Eigen::VectorXd lp = stage1_lp(cov, j, tau_n);
        CHECK(col.meta.converged);
        CHECK(std::abs(col.b.cwiseAbs().sum() - lp.cwiseAbs().sum()) <= 1e-4);
        CHECK(stage1_violation(cov, j, tau_n, col.b) <= 1e-5);
    }
}

TEST_CASE("stage 2 agrees with the reference LP on Gaussian data") {
    const Eigen::Index p = 5, n = 300;
    DesignMatrix X = gaussian_design(random_spd(p, 7), n, 2002);
    CovarianceView cov = sample_covariance(X);
    AdmmParams prm;
    prm.check_every = 1;
    prm.tol_abs = 1e-7;
    prm.tol_rel = 1e-6;
    prm.max_iter = 20000;
    for (double lambda : {0.15, 0.3}) {
        SolveMeta meta;
        Eigen::MatrixXd W = stage2_solve(cov, Eigen::VectorXd::Constant(p, lambda),
                                         prm, p, 1, &meta);
        for (Eigen::Index j = 0; j < p; ++j) {
            Eigen::VectorXd lp = stage2_lp(cov, j, lambda);
            CHECK(meta.columns[j].converged);
            CHECK(std::abs(W.col(j).cwiseAbs().sum() - lp.cwiseAbs().sum()) <= 1e-4);
            CHECK(stage2_violation(cov, j, lambda, W.col(j)) <= 1e-5);
        }
    }
}

TEST_CASE("stage 2 on independent data: analytic diagonal, zero at lambda >= 1") {
    const Eigen::Index p = 4, n = 50;
    CovarianceView cov = identity_cov(p, n);
    const double chat_jj = 1.0 + 1.0 / static_cast<double>(n);
    AdmmParams prm;
    prm.check_every = 1;

    Eigen::MatrixXd W = stage2_solve(cov, Eigen::VectorXd::Constant(p, 0.5),
                                     prm, p, 1, nullptr);
    for (Eigen::Index j = 0; j < p; ++j) {
        CHECK(W(j, j) == doctest::Approx((1.0 - 0.5) / chat_jj).epsilon(1e-3));
        for (Eigen::Index i = 0; i < p; ++i)
            if (i != j) CHECK(std::abs(W(i, j)) <= 1e-6);
    }

    // The zero vector is feasible once the radius reaches 1, and it is optimal.
    PrecisionEstimate zero = clime_estimate(cov, 1.0, prm, p);
    CHECK(zero.omega_hat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("diagonal correction: pass-through versus ceiling branch") {
    Eigen::VectorXd omega1(3);
    omega1 << 7.0, 0.9, 1.4;
    Eigen::VectorXd c_diag(3);
    c_diag << 1.0, 1.0, 1e6;  // last column exceeds sqrt(n / ln p)
    Eigen::VectorXd breve = correct_diagonal(omega1, c_diag, 1000, 100);
    CHECK(breve[0] == 7.0);
    CHECK(breve[1] == 0.9);
    // Independently evaluated at 30-digit precision: sqrt(ln(1000)/100).
    CHECK(breve[2] == doctest::Approx(0.2628260884878466).epsilon(1e-12));
}

TEST_CASE("min-magnitude symmetrization") {
    Eigen::MatrixXd w(2, 2);
    w << 1.0, 0.5, -0.2, 1.0;
    Eigen::MatrixXd s = symmetrize(w);
    CHECK(s(0, 1) == -0.2);
    CHECK(s(1, 0) == -0.2);

    w(0, 1) = 0.3;
    w(1, 0) = 0.0;  // zero has the smaller magnitude
    s = symmetrize(w);
    CHECK(s(0, 1) == 0.0);
    CHECK(s(1, 0) == 0.0);

    w(0, 1) = 0.5;
    w(1, 0) = -0.5;  // tie by magnitude: the (i, j) entry wins
    s = symmetrize(w);
    CHECK(s(0, 1) == 0.5);
    CHECK(s(1, 0) == 0.5);

    Eigen::MatrixXd sym(2, 2);
    sym << 1.0, -0.4, -0.4, 1.0;
    CHECK(symmetrize(sym) == sym);
}

TEST_CASE("two correlated Gaussians recover the analytic precision matrix") {
    // Sigma = [[1, .6], [.6, 1]] has inverse (1/.64) * [[1, -.6], [-.6, 1]].
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.6, 0.6, 1.0;
    DesignMatrix X = gaussian_design(sigma, 10000, 31);
    AdmmParams prm;
    PrecisionEstimate est = aclime_estimate(X, 2.0, prm, prm, 2);
    CHECK(est.omega_hat(0, 0) == doctest::Approx(1.5625).epsilon(0.1 / 1.5625));
    CHECK(est.omega_hat(1, 1) == doctest::Approx(1.5625).epsilon(0.1 / 1.5625));
    CHECK(std::abs(est.omega_hat(0, 1) - (-0.9375)) <= 0.1);
    CHECK(est.omega_hat(0, 1) == est.omega_hat(1, 0));
}

TEST_CASE("independent high-dimensional data yields an empty off-diagonal support") {
    DesignMatrix X = gaussian_design(Eigen::MatrixXd::Identity(20, 20), 2000, 88);
    AdmmParams prm;
    PrecisionEstimate est = aclime_estimate(X, 2.0, prm, prm, 8);
    int false_edges = 0;
    for (int i = 0; i < 20; ++i)
        for (int j = i + 1; j < 20; ++j)
            if (std::abs(est.omega_hat(i, j)) >= 1e-6) ++false_edges;
    CHECK(false_edges <= 2);
}

TEST_CASE("block size does not change the estimate") {
    DesignMatrix X = gaussian_design(random_spd(20, 5), 200, 606);
    AdmmParams prm;
    PrecisionEstimate k1 = aclime_estimate(X, 2.0, prm, prm, 1);
    PrecisionEstimate k7 = aclime_estimate(X, 2.0, prm, prm, 7);
    PrecisionEstimate kp = aclime_estimate(X, 2.0, prm, prm, 20);
    CHECK((k1.omega_hat - k7.omega_hat).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((k7.omega_hat - kp.omega_hat).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("worker count never changes a single bit of the estimate") {
    DesignMatrix X = gaussian_design(random_spd(12, 9), 150, 707);
    AdmmParams prm;
    PrecisionEstimate w1 = aclime_estimate(X, 2.0, prm, prm, 3, 1);
    PrecisionEstimate w4 = aclime_estimate(X, 2.0, prm, prm, 3, 4);
    CHECK((w1.omega_hat.array() == w4.omega_hat.array()).all());
    CHECK((w1.omega_tilde.array() == w4.omega_tilde.array()).all());
}

TEST_CASE("a column stuck at zero falls back to the diagonal ceiling") {
    DesignMatrix X = gaussian_design(random_spd(5, 1), 120, 11);
    AdmmParams stuck;
    stuck.max_iter = 1;  // b stays at its zero start, so b_jj <= 0 at stop
    stuck.check_every = 1;
    AdmmParams prm;
    PrecisionEstimate est = aclime_estimate(X, 2.0, stuck, prm, 5);
    const double ceiling = std::sqrt(std::log(5.0) / 120.0);
    for (int j = 0; j < 5; ++j) {
        CHECK(est.stage1.columns[j].diag_nonpositive);
        CHECK(est.omega_breve[j] == doctest::Approx(ceiling).epsilon(1e-12));
        CHECK(est.lambda_per_col[j] ==
              doctest::Approx(est.tau * std::sqrt(ceiling)).epsilon(1e-12));
    }
}

TEST_CASE("converged columns report small residuals and iteration counts") {
    DesignMatrix X = gaussian_design(random_spd(8, 21), 250, 909);
    AdmmParams prm;
    PrecisionEstimate est = aclime_estimate(X, 2.0, prm, prm, 4);
    REQUIRE(est.stage1.columns.size() == 8);
    REQUIRE(est.stage2.columns.size() == 8);
    for (const auto& stage : {est.stage1, est.stage2}) {
        CHECK(stage.eta_used > 0.0);
        for (const auto& c : stage.columns) {
            CHECK(c.converged);
            CHECK(c.iterations >= 1);
            CHECK(c.iterations <= prm.max_iter);
            CHECK(c.inf_residual <= 10 * prm.tol_abs);
        }
        CHECK_FALSE(stage.trace.empty());
    }
}

}  // TEST_SUITE
