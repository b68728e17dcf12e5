#include "gridlearn/dataset.hpp"

#include <cmath>

#include "gridlearn/errors.hpp"

namespace gridlearn {

DesignMatrix lag_expand(const RawRuns& runs, int T) {
    if (T < 1) throw ConfigError("lag count T must be at least 1");
    if (runs.run_steps < T)
        throw ConfigError("run length " + std::to_string(runs.run_steps) +
                          " is shorter than T=" + std::to_string(T));
    const int q = runs.grid.cells();
    const int per_run = runs.run_steps - T + 1;
    DesignMatrix X;
    X.q = q;
    X.T = T;
    X.samples.resize(static_cast<Eigen::Index>(per_run) * static_cast<Eigen::Index>(runs.runs.size()),
                     static_cast<Eigen::Index>(q) * T);
    Eigen::Index row = 0;
    for (const auto& run : runs.runs) {
        for (int s = 0; s < per_run; ++s, ++row) {
            for (int loc = 0; loc < q; ++loc)
                for (int lag = 0; lag < T; ++lag)
                    X.samples(row, static_cast<Eigen::Index>(loc) * T + lag) = run(s + lag, loc);
        }
    }
    return X;
}

ZScoreInfo zscore_inplace(DesignMatrix& X) {
    const Eigen::Index n = X.n();
    if (n < 2) throw ConfigError("z-scoring needs at least 2 samples");
    ZScoreInfo info;
    info.mean.resize(X.p());
    info.sd.resize(X.p());
    info.constant.assign(static_cast<size_t>(X.p()), false);
    for (Eigen::Index j = 0; j < X.p(); ++j) {
        auto col = X.samples.col(j);
        double mean = col.mean();
        col.array() -= mean;
        double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n - 1));
        info.mean[j] = mean;
        if (sd < 1e-12) {
            info.constant[static_cast<size_t>(j)] = true;
            info.sd[j] = 1.0;
        } else {
            col /= sd;
            info.sd[j] = sd;
        }
    }
    return info;
}

CovarianceView sample_covariance(const DesignMatrix& X) {
    const Eigen::Index n = X.n();
    if (n < 2) throw ConfigError("covariance needs at least 2 samples");
    CovarianceView cov;
    cov.n = n;
    cov.C.noalias() = X.samples.transpose() * X.samples;
    cov.C /= static_cast<double>(n - 1);
    cov.C = 0.5 * (cov.C + cov.C.transpose()).eval();
    cov.Chat = cov.C;
    cov.Chat.diagonal().array() += 1.0 / static_cast<double>(n);
    return cov;
}

double tau(double delta, Eigen::Index p, Eigen::Index n) {
    if (!(delta > 0.0)) throw ConfigError("delta must be positive");
    if (p < 2) throw ConfigError("tau requires p >= 2");
    if (n < 1) throw ConfigError("tau requires n >= 1");
    return delta * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

}  // namespace gridlearn
