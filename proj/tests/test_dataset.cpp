#include <cmath>

#include "doctest.h"
#include "gridlearn/dataset.hpp"
#include "gridlearn/errors.hpp"
#include "gridlearn/rng.hpp"

using namespace gridlearn;

namespace {

// Runs filled with distinct values 1000*run + 10*time + location, so every
// placement in the lagged design is checkable by formula.
RawRuns coded_runs(int width, int height, int n_runs, int steps) {
    RawRuns runs;
    runs.grid = Grid{width, height, 1.0};
    runs.run_steps = steps;
    int q = width * height;
    for (int r = 0; r < n_runs; ++r) {
        Eigen::MatrixXd m(steps, q);
        for (int t = 0; t < steps; ++t)
            for (int c = 0; c < q; ++c) m(t, c) = 1000.0 * r + 10.0 * t + c;
        runs.runs.push_back(std::move(m));
    }
    return runs;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("lag_expand shape: each run of length L yields L-T+1 samples") {
    RawRuns runs = coded_runs(2, 1, 1, 5);
    DesignMatrix X = lag_expand(runs, 3);
    CHECK(X.n() == 3);
    CHECK(X.p() == 6);
    CHECK(X.q == 2);
    CHECK(X.T == 3);

    RawRuns many = coded_runs(2, 2, 7, 9);
    DesignMatrix Y = lag_expand(many, 4);
    CHECK(Y.n() == 7 * (9 - 4 + 1));
    CHECK(Y.p() == 4 * 4);
}

TEST_CASE("lag_expand content: column loc*T+lag holds the run value at time s+lag") {
    RawRuns runs = coded_runs(3, 2, 2, 6);
    int T = 4;
    DesignMatrix X = lag_expand(runs, T);
    int per_run = 6 - T + 1;
    for (int r = 0; r < 2; ++r)
        for (int s = 0; s < per_run; ++s)
            for (int loc = 0; loc < 6; ++loc)
                for (int lag = 0; lag < T; ++lag)
                    CHECK(X.samples(r * per_run + s, loc * T + lag) ==
                          1000.0 * r + 10.0 * (s + lag) + loc);
}

TEST_CASE("lag_expand with T=1 reproduces the raw rows") {
    RawRuns runs = coded_runs(2, 2, 3, 4);
    DesignMatrix X = lag_expand(runs, 1);
    CHECK(X.n() == 12);
    CHECK(X.p() == 4);
    Eigen::Index row = 0;
    for (const auto& run : runs.runs)
        for (int t = 0; t < 4; ++t, ++row)
            CHECK(X.samples.row(row) == run.row(t));
}

TEST_CASE("lag_expand rejects runs shorter than the lag count") {
    RawRuns runs = coded_runs(2, 1, 1, 3);
    CHECK_THROWS_AS(lag_expand(runs, 4), ConfigError);
    CHECK_THROWS_AS(lag_expand(runs, 0), ConfigError);
}

TEST_CASE("zscore maps (1,2,3) to (-1,0,1) and is idempotent") {
    DesignMatrix X;
    X.q = 1;
    X.T = 1;
    X.samples.resize(3, 1);
    X.samples << 1, 2, 3;
    ZScoreInfo info = zscore_inplace(X);
    CHECK(X.samples(0, 0) == doctest::Approx(-1.0));
    CHECK(X.samples(1, 0) == doctest::Approx(0.0));
    CHECK(X.samples(2, 0) == doctest::Approx(1.0));
    CHECK(info.mean[0] == doctest::Approx(2.0));
    CHECK(info.sd[0] == doctest::Approx(1.0));
    CHECK_FALSE(info.constant[0]);

    Eigen::MatrixXd before = X.samples;
    zscore_inplace(X);
    CHECK((X.samples - before).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("zscore centers constant columns and flags them") {
    DesignMatrix X;
    X.q = 2;
    X.T = 1;
    X.samples.resize(3, 2);
    X.samples << 5, 1, 5, 2, 5, 3;
    ZScoreInfo info = zscore_inplace(X);
    CHECK(X.samples.col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(info.constant[0]);
    CHECK(info.sd[0] == 1.0);  // recorded as applied: no scaling
    CHECK_FALSE(info.constant[1]);
}

TEST_CASE("zscore requires at least two samples") {
    DesignMatrix X;
    X.q = 1;
    X.T = 1;
    X.samples.resize(1, 1);
    X.samples << 42;
    CHECK_THROWS_AS(zscore_inplace(X), ConfigError);
}

TEST_CASE("covariance of two identical columns is 1, and Chat adds 1/n") {
    DesignMatrix X;
    X.q = 2;
    X.T = 1;
    X.samples.resize(5, 2);
    for (int i = 0; i < 5; ++i) X.samples(i, 0) = X.samples(i, 1) = i * 1.5 + 0.25;
    zscore_inplace(X);
    CovarianceView cov = sample_covariance(X);
    CHECK(cov.n == 5);
    CHECK(cov.C(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cov.C(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < 2; ++j)
        CHECK(cov.Chat(j, j) - cov.C(j, j) == doctest::Approx(1.0 / 5.0).epsilon(1e-14));
    CHECK((cov.C - cov.C.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("independent columns have near-zero sample correlation") {
    Rng rng(2024);
    DesignMatrix X;
    X.q = 5;
    X.T = 1;
    X.samples = rng.normal_matrix(10000, 5);
    zscore_inplace(X);
    CovarianceView cov = sample_covariance(X);
    for (int i = 0; i < 5; ++i) {
        CHECK(cov.C(i, i) == doctest::Approx(1.0).epsilon(1e-10));
        for (int j = 0; j < 5; ++j)
            if (i != j) CHECK(std::abs(cov.C(i, j)) <= 0.05);  // ~4/sqrt(n)
    }
}

TEST_CASE("tau matches its frozen reference value") {
    // Independently evaluated at 30-digit precision: 2*sqrt(ln(8000)/5200).
    CHECK(std::abs(tau(2.0, 8000, 5200) - 0.08314582565340327) <= 1e-15);
}

TEST_CASE("tau is linear in delta") {
    CHECK(tau(4.0, 500, 1200) == 2.0 * tau(2.0, 500, 1200));
    CHECK(tau(1.0, 50, 10) == 0.5 * tau(2.0, 50, 10));  // permitted below 2
}

TEST_CASE("tau validates its arguments") {
    CHECK_THROWS_AS(tau(0.0, 100, 100), ConfigError);
    CHECK_THROWS_AS(tau(2.0, 1, 100), ConfigError);
    CHECK_THROWS_AS(tau(2.0, 100, 0), ConfigError);
}

}  // TEST_SUITE
