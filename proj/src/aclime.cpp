#include "gridlearn/aclime.hpp"

#include <cmath>
#include <numeric>

#include "gridlearn/errors.hpp"
#include "gridlearn/parallel.hpp"

namespace gridlearn {

namespace {

// The implemented reformulations assume tau_n * (c_ii v c_jj) = tau_n,
// which only holds on correlation input.
void require_zscored(const CovarianceView& cov) {
    for (Eigen::Index j = 0; j < cov.C.rows(); ++j)
        if (std::abs(cov.C(j, j) - 1.0) > 1e-6)
            throw ConfigError("solver requires z-scored input; C(" + std::to_string(j) +
                              "," + std::to_string(j) + ") = " + std::to_string(cov.C(j, j)));
}

AdmmParams validate(const AdmmParams& params) {
    AdmmParams prm = params;
    if (!(prm.rho > 0.0)) throw ConfigError("rho must be positive");
    if (prm.max_iter < 1) throw ConfigError("max_iter must be at least 1");
    if (prm.check_every < 1) prm.check_every = 1;
    if (prm.tol_abs <= 0.0 || prm.tol_rel < 0.0)
        throw ConfigError("tolerances must be positive");
    return prm;
}

// Stage 2 splits on Chat itself, so the default weight is the usual
// 1.05 * rho * lambda_max(Chat)^2.
AdmmParams resolve_stage2(const AdmmParams& params, const Eigen::MatrixXd& chat) {
    AdmmParams prm = validate(params);
    if (prm.eta <= 0.0) prm.eta = auto_eta(prm.rho, chat);
    return prm;
}

// The stage-1 constraint stack [Chat - tau 1 e_j'; -Chat - tau 1 e_j'] has
// Gram matrix 2*Chat^2 + 2*p*tau^2 e_j e_j' (the cross terms cancel), so its
// squared operator norm is at most 2*lambda_max(Chat)^2 + 2*p*tau^2. Using
// lambda_max(Chat)^2 alone undershoots by half and the iteration can diverge.
AdmmParams resolve_stage1(const AdmmParams& params, const Eigen::MatrixXd& chat,
                          double tau_n) {
    AdmmParams prm = validate(params);
    if (prm.eta <= 0.0) {
        const double lam = power_lambda_max(chat);
        const double p = static_cast<double>(chat.rows());
        prm.eta = 1.05 * prm.rho * (2.0 * lam * lam + 2.0 * p * tau_n * tau_n);
    }
    return prm;
}

struct BlockOutputs {
    Eigen::VectorXd* diag = nullptr;             // stage 1 diagonal slots
    Eigen::MatrixXd* coeffs = nullptr;           // full columns, when kept
    std::vector<ColumnMeta>* columns = nullptr;  // one slot per column
    std::vector<std::vector<TraceRow>>* traces = nullptr;
};

// Stage-1 block: columns [j0, j0+k). Constraint stack per column j:
//   [Chat - tau 1 e_j'; -Chat - tau 1 e_j'] b + r = [e_j; -e_j],  r >= 0.
// Forward and adjoint products share one Chat GEMM across the block plus a
// rank-one diagonal correction per column. Columns that pass their stopping
// test are frozen and dropped from the working set; per-column iterates
// never couple, so results are block-size independent.
void solve_stage1_block(const Eigen::MatrixXd& chat, double tau_n,
                        const AdmmParams& prm, int block_id, Eigen::Index j0,
                        Eigen::Index k, const BlockOutputs& out) {
    const Eigen::Index p = chat.rows();
    const double rho = prm.rho;
    const double step = rho / prm.eta;
    const double shrink = 1.0 / prm.eta;
    const double norm_e = std::sqrt(2.0);
    const double eps_p_abs = std::sqrt(2.0 * static_cast<double>(p)) * prm.tol_abs;
    const double eps_d_abs = std::sqrt(static_cast<double>(p)) * prm.tol_abs;

    std::vector<Eigen::Index> cols(static_cast<size_t>(k));
    std::iota(cols.begin(), cols.end(), 0);

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(p, k);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2 * p, k);
    for (Eigen::Index m = 0; m < k; ++m) {
        E(j0 + m, m) = 1.0;
        E(p + j0 + m, m) = -1.0;
    }
    Eigen::MatrixXd R = E.cwiseMax(0.0);
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(2 * p, k);
    Eigen::MatrixXd Yprev = Eigen::MatrixXd::Zero(2 * p, k);

    Eigen::VectorXd last_primal = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd last_dual = Eigen::VectorXd::Zero(k);
    std::vector<TraceRow>& trace = (*out.traces)[static_cast<size_t>(block_id)];

    auto finalize = [&](const Eigen::MatrixXd& Xcur, Eigen::Index c, int t,
                        bool converged, double primal, double dual, double inf_res) {
        Eigen::Index j = j0 + cols[static_cast<size_t>(c)];
        double bjj = Xcur(j, c);
        (*out.diag)[j] = bjj;
        if (out.coeffs) out.coeffs->col(j) = Xcur.col(c);
        ColumnMeta& meta = (*out.columns)[static_cast<size_t>(j)];
        meta = ColumnMeta{t, converged, primal, dual, inf_res, !(bjj > 0.0)};
    };

    for (int t = 1; t <= prm.max_iter; ++t) {
        const Eigen::Index a = static_cast<Eigen::Index>(cols.size());
        // b step: X <- soft(X - (rho/eta) A'(2Y - Yprev), 1/eta)
        Eigen::MatrixXd M = 2.0 * Y - Yprev;
        Eigen::MatrixXd G(p, a);
        G.noalias() = chat * (M.topRows(p) - M.bottomRows(p));
        for (Eigen::Index c = 0; c < a; ++c)
            G(j0 + cols[static_cast<size_t>(c)], c) -= tau_n * M.col(c).sum();
        X = soft_threshold(X - step * G, shrink);

        Eigen::MatrixXd W(p, a);
        W.noalias() = chat * X;
        Eigen::MatrixXd AX(2 * p, a);
        AX.topRows(p) = W;
        AX.bottomRows(p) = -W;
        for (Eigen::Index c = 0; c < a; ++c)
            AX.col(c).array() -= tau_n * X(j0 + cols[static_cast<size_t>(c)], c);

        Eigen::MatrixXd Rnew = (E - Y - AX).cwiseMax(0.0);
        Eigen::MatrixXd Ydelta = AX + Rnew - E;  // equals Ynew - Y

        bool checking = (t % prm.check_every == 0) || t == prm.max_iter;
        if (!checking) {
            Yprev.swap(Y);
            Y = Yprev + Ydelta;
            R.swap(Rnew);
            continue;
        }

        Eigen::MatrixXd Ynew = Y + Ydelta;
        Eigen::MatrixXd DR = Rnew - R;
        Eigen::MatrixXd Arg(p, 2 * a);
        Arg.leftCols(a) = DR.topRows(p) - DR.bottomRows(p);
        Arg.rightCols(a) = Ynew.topRows(p) - Ynew.bottomRows(p);
        Eigen::MatrixXd Big(p, 2 * a);
        Big.noalias() = chat * Arg;
        for (Eigen::Index c = 0; c < a; ++c) {
            Big(j0 + cols[static_cast<size_t>(c)], c) -= tau_n * DR.col(c).sum();
            Big(j0 + cols[static_cast<size_t>(c)], a + c) -= tau_n * Ynew.col(c).sum();
        }

        std::vector<Eigen::Index> survivors;
        for (Eigen::Index c = 0; c < a; ++c) {
            double primal = Ydelta.col(c).norm();
            double dual = rho * Big.col(c).norm();
            double inf_res = Ydelta.col(c).cwiseAbs().maxCoeff();
            double eps_p = eps_p_abs + prm.tol_rel * std::max({AX.col(c).norm(),
                                                               Rnew.col(c).norm(), norm_e});
            double eps_d = eps_d_abs + prm.tol_rel * rho * Big.col(a + c).norm();
            last_primal[cols[static_cast<size_t>(c)]] = primal;
            last_dual[cols[static_cast<size_t>(c)]] = dual;
            bool finite = std::isfinite(primal) && std::isfinite(dual);
            // the extra gate keeps the per-column feasibility promise
            bool done = finite && primal <= eps_p && dual <= eps_d &&
                        inf_res <= 10.0 * prm.tol_abs;
            // a non-finite iterate cannot recover; freeze it as failed
            if (done || !finite || t == prm.max_iter)
                finalize(X, c, t, done, primal, dual, inf_res);
            if (!done && finite) survivors.push_back(c);
        }
        trace.push_back({block_id, t, last_primal.norm(), last_dual.norm()});

        if (t == prm.max_iter) return;
        if (survivors.size() == cols.size()) {
            Yprev.swap(Y);
            Y.swap(Ynew);
            R.swap(Rnew);
            continue;
        }
        if (survivors.empty()) return;

        const Eigen::Index na = static_cast<Eigen::Index>(survivors.size());
        Eigen::MatrixXd X2(p, na), E2(2 * p, na), R2(2 * p, na), Y2(2 * p, na), Yp2(2 * p, na);
        std::vector<Eigen::Index> cols2(static_cast<size_t>(na));
        for (Eigen::Index i = 0; i < na; ++i) {
            Eigen::Index c = survivors[static_cast<size_t>(i)];
            X2.col(i) = X.col(c);
            E2.col(i) = E.col(c);
            R2.col(i) = Rnew.col(c);
            Y2.col(i) = Ynew.col(c);
            Yp2.col(i) = Y.col(c);  // pre-rotation Y
            cols2[static_cast<size_t>(i)] = cols[static_cast<size_t>(c)];
        }
        X.swap(X2);
        E.swap(E2);
        R.swap(R2);
        Y.swap(Y2);
        Yprev.swap(Yp2);
        cols.swap(cols2);
    }
}

// Stage-2 block: columns [j0, j0+k) with per-column radius lambda. The
// splitting is Chat b = z, z clamped into the box around e_j.
void solve_stage2_block(const Eigen::MatrixXd& chat,
                        const Eigen::VectorXd& lambda_per_col,
                        const AdmmParams& prm, int block_id, Eigen::Index j0,
                        Eigen::Index k, const BlockOutputs& out) {
    const Eigen::Index p = chat.rows();
    const double rho = prm.rho;
    const double step = rho / prm.eta;
    const double shrink = 1.0 / prm.eta;
    const double eps_p_abs = std::sqrt(static_cast<double>(p)) * prm.tol_abs;
    const double eps_d_abs = eps_p_abs;

    std::vector<Eigen::Index> cols(static_cast<size_t>(k));
    std::iota(cols.begin(), cols.end(), 0);
    Eigen::VectorXd lam(k);
    for (Eigen::Index m = 0; m < k; ++m) lam[m] = lambda_per_col[j0 + m];

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(p, k);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(p, k);
    for (Eigen::Index m = 0; m < k; ++m) E(j0 + m, m) = 1.0;
    Eigen::MatrixXd Z(p, k);
    for (Eigen::Index m = 0; m < k; ++m)
        Z.col(m) = Eigen::ArrayXd::Zero(p)
                       .max(E.col(m).array() - lam[m])
                       .min(E.col(m).array() + lam[m])
                       .matrix();
    Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(p, k);
    Eigen::MatrixXd Yprev = Eigen::MatrixXd::Zero(p, k);

    Eigen::VectorXd last_primal = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd last_dual = Eigen::VectorXd::Zero(k);
    std::vector<TraceRow>& trace = (*out.traces)[static_cast<size_t>(block_id)];

    auto finalize = [&](const Eigen::MatrixXd& Xcur, Eigen::Index c, int t,
                        bool converged, double primal, double dual, double inf_res) {
        Eigen::Index j = j0 + cols[static_cast<size_t>(c)];
        if (out.coeffs) out.coeffs->col(j) = Xcur.col(c);
        ColumnMeta& meta = (*out.columns)[static_cast<size_t>(j)];
        meta = ColumnMeta{t, converged, primal, dual, inf_res, false};
    };

    for (int t = 1; t <= prm.max_iter; ++t) {
        const Eigen::Index a = static_cast<Eigen::Index>(cols.size());
        Eigen::MatrixXd M = 2.0 * Y - Yprev;
        Eigen::MatrixXd G(p, a);
        G.noalias() = chat * M;
        X = soft_threshold(X - step * G, shrink);

        Eigen::MatrixXd CX(p, a);
        CX.noalias() = chat * X;
        Eigen::MatrixXd Znew(p, a);
        {
            Eigen::MatrixXd Probe = CX + Y;
            for (Eigen::Index c = 0; c < a; ++c) {
                double l = lam[cols[static_cast<size_t>(c)]];
                Znew.col(c) = Probe.col(c)
                                  .array()
                                  .max(E.col(c).array() - l)
                                  .min(E.col(c).array() + l)
                                  .matrix();
            }
        }
        Eigen::MatrixXd Ydelta = CX - Znew;  // equals Ynew - Y

        bool checking = (t % prm.check_every == 0) || t == prm.max_iter;
        if (!checking) {
            Yprev.swap(Y);
            Y = Yprev + Ydelta;
            Z.swap(Znew);
            continue;
        }

        Eigen::MatrixXd Ynew = Y + Ydelta;
        Eigen::MatrixXd Arg(p, 2 * a);
        Arg.leftCols(a) = Znew - Z;
        Arg.rightCols(a) = Ynew;
        Eigen::MatrixXd Big(p, 2 * a);
        Big.noalias() = chat * Arg;

        std::vector<Eigen::Index> survivors;
        for (Eigen::Index c = 0; c < a; ++c) {
            double primal = Ydelta.col(c).norm();
            double dual = rho * Big.col(c).norm();
            double inf_res = Ydelta.col(c).cwiseAbs().maxCoeff();
            double eps_p = eps_p_abs + prm.tol_rel * std::max({CX.col(c).norm(),
                                                               Znew.col(c).norm(), 1.0});
            double eps_d = eps_d_abs + prm.tol_rel * rho * Big.col(a + c).norm();
            last_primal[cols[static_cast<size_t>(c)]] = primal;
            last_dual[cols[static_cast<size_t>(c)]] = dual;
            bool finite = std::isfinite(primal) && std::isfinite(dual);
            // the extra gate keeps the per-column feasibility promise
            bool done = finite && primal <= eps_p && dual <= eps_d &&
                        inf_res <= 10.0 * prm.tol_abs;
            // a non-finite iterate cannot recover; freeze it as failed
            if (done || !finite || t == prm.max_iter)
                finalize(X, c, t, done, primal, dual, inf_res);
            if (!done && finite) survivors.push_back(c);
        }
        trace.push_back({block_id, t, last_primal.norm(), last_dual.norm()});

        if (t == prm.max_iter) return;
        if (survivors.size() == cols.size()) {
            Yprev.swap(Y);
            Y.swap(Ynew);
            Z.swap(Znew);
            continue;
        }
        if (survivors.empty()) return;

        const Eigen::Index na = static_cast<Eigen::Index>(survivors.size());
        Eigen::MatrixXd X2(p, na), E2(p, na), Z2(p, na), Y2(p, na), Yp2(p, na);
        std::vector<Eigen::Index> cols2(static_cast<size_t>(na));
        for (Eigen::Index i = 0; i < na; ++i) {
            Eigen::Index c = survivors[static_cast<size_t>(i)];
            X2.col(i) = X.col(c);
            E2.col(i) = E.col(c);
            Z2.col(i) = Znew.col(c);
            Y2.col(i) = Ynew.col(c);
            Yp2.col(i) = Y.col(c);
            cols2[static_cast<size_t>(i)] = cols[static_cast<size_t>(c)];
        }
        X.swap(X2);
        E.swap(E2);
        Z.swap(Z2);
        Y.swap(Y2);
        Yprev.swap(Yp2);
        cols.swap(cols2);
    }
}

std::vector<TraceRow> concat_traces(std::vector<std::vector<TraceRow>>& traces) {
    std::vector<TraceRow> all;
    for (auto& t : traces) all.insert(all.end(), t.begin(), t.end());
    return all;
}

}  // namespace

Stage1Result stage1_solve(const CovarianceView& cov, double tau_n,
                          const AdmmParams& params, Eigen::Index block_size,
                          int workers, bool keep_full) {
    require_zscored(cov);
    if (!(tau_n > 0.0)) throw ConfigError("tau must be positive");
    if (block_size < 1) throw ConfigError("block size must be at least 1");
    const Eigen::Index p = cov.Chat.rows();
    AdmmParams prm = resolve_stage1(params, cov.Chat, tau_n);

    Stage1Result res;
    res.omega1_diag.resize(p);
    res.meta.columns.resize(static_cast<size_t>(p));
    res.meta.eta_used = prm.eta;
    res.meta.rho = prm.rho;
    if (keep_full) res.B.emplace(Eigen::MatrixXd::Zero(p, p));

    const int num_blocks = static_cast<int>((p + block_size - 1) / block_size);
    std::vector<std::vector<TraceRow>> traces(static_cast<size_t>(num_blocks));
    BlockOutputs out{&res.omega1_diag, keep_full ? &*res.B : nullptr,
                     &res.meta.columns, &traces};
    parallel_blocks(num_blocks, workers, [&](int b) {
        Eigen::Index j0 = static_cast<Eigen::Index>(b) * block_size;
        Eigen::Index k = std::min(block_size, p - j0);
        solve_stage1_block(cov.Chat, tau_n, prm, b, j0, k, out);
    });
    res.meta.trace = concat_traces(traces);
    return res;
}

Stage1Column stage1_solve_column(const CovarianceView& cov, Eigen::Index j,
                                 double tau_n, const AdmmParams& params) {
    require_zscored(cov);
    const Eigen::Index p = cov.Chat.rows();
    if (j < 0 || j >= p) throw ConfigError("column index out of range");
    if (!(tau_n > 0.0)) throw ConfigError("tau must be positive");
    AdmmParams prm = resolve_stage1(params, cov.Chat, tau_n);

    Eigen::VectorXd diag(p);
    std::vector<ColumnMeta> columns(static_cast<size_t>(p));
    Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(p, p);
    std::vector<std::vector<TraceRow>> traces(1);
    BlockOutputs out{&diag, &coeffs, &columns, &traces};
    solve_stage1_block(cov.Chat, tau_n, prm, 0, j, 1, out);

    Stage1Column col;
    col.b = coeffs.col(j);
    col.meta = columns[static_cast<size_t>(j)];
    return col;
}

Eigen::VectorXd correct_diagonal(const Eigen::VectorXd& omega1_diag,
                                 const Eigen::VectorXd& c_diag,
                                 Eigen::Index p, Eigen::Index n) {
    if (omega1_diag.size() != c_diag.size())
        throw ConfigError("correct_diagonal dimension mismatch");
    if (p < 2 || n < 1) throw ConfigError("correct_diagonal requires p >= 2, n >= 1");
    const double log_p = std::log(static_cast<double>(p));
    const double gate = std::sqrt(static_cast<double>(n) / log_p);
    const double ceiling = std::sqrt(log_p / static_cast<double>(n));
    Eigen::VectorXd breve(omega1_diag.size());
    for (Eigen::Index j = 0; j < omega1_diag.size(); ++j)
        breve[j] = c_diag[j] <= gate ? omega1_diag[j] : ceiling;
    return breve;
}

Eigen::MatrixXd stage2_solve(const CovarianceView& cov,
                             const Eigen::VectorXd& lambda_per_col,
                             const AdmmParams& params, Eigen::Index block_size,
                             int workers, SolveMeta* meta) {
    require_zscored(cov);
    const Eigen::Index p = cov.Chat.rows();
    if (lambda_per_col.size() != p) throw ConfigError("lambda vector length mismatch");
    if ((lambda_per_col.array() <= 0.0).any())
        throw ConfigError("stage 2 requires lambda_j > 0 for every column");
    if (block_size < 1) throw ConfigError("block size must be at least 1");
    AdmmParams prm = resolve_stage2(params, cov.Chat);

    Eigen::MatrixXd omega_tilde = Eigen::MatrixXd::Zero(p, p);
    std::vector<ColumnMeta> columns(static_cast<size_t>(p));
    const int num_blocks = static_cast<int>((p + block_size - 1) / block_size);
    std::vector<std::vector<TraceRow>> traces(static_cast<size_t>(num_blocks));
    BlockOutputs out{nullptr, &omega_tilde, &columns, &traces};
    parallel_blocks(num_blocks, workers, [&](int b) {
        Eigen::Index j0 = static_cast<Eigen::Index>(b) * block_size;
        Eigen::Index k = std::min(block_size, p - j0);
        solve_stage2_block(cov.Chat, lambda_per_col, prm, b, j0, k, out);
    });
    if (meta) {
        meta->columns = std::move(columns);
        meta->trace = concat_traces(traces);
        meta->eta_used = prm.eta;
        meta->rho = prm.rho;
    }
    return omega_tilde;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& omega_tilde) {
    if (omega_tilde.rows() != omega_tilde.cols())
        throw ConfigError("symmetrize needs a square matrix");
    Eigen::MatrixXd out = omega_tilde;
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = i + 1; j < out.cols(); ++j) {
            double keep = std::abs(omega_tilde(i, j)) <= std::abs(omega_tilde(j, i))
                              ? omega_tilde(i, j)
                              : omega_tilde(j, i);
            out(i, j) = keep;
            out(j, i) = keep;
        }
    return out;
}

PrecisionEstimate clime_estimate(const CovarianceView& cov, double lambda,
                                 const AdmmParams& params, Eigen::Index block_size,
                                 int workers) {
    if (!(lambda > 0.0)) throw ConfigError("clime requires lambda > 0");
    PrecisionEstimate est;
    est.lambda_per_col = Eigen::VectorXd::Constant(cov.Chat.rows(), lambda);
    est.omega_tilde = stage2_solve(cov, est.lambda_per_col, params, block_size,
                                   workers, &est.stage2);
    est.omega_hat = symmetrize(est.omega_tilde);
    return est;
}

PrecisionEstimate aclime_estimate(const DesignMatrix& X, double delta,
                                  const AdmmParams& stage1_params,
                                  const AdmmParams& stage2_params,
                                  Eigen::Index block_size, int workers) {
    CovarianceView cov = sample_covariance(X);
    const Eigen::Index p = X.p();
    const Eigen::Index n = X.n();

    PrecisionEstimate est;
    est.delta = delta;
    est.tau = tau(delta, p, n);

    Stage1Result s1 = stage1_solve(cov, est.tau, stage1_params, block_size, workers, false);
    est.omega1_diag = s1.omega1_diag;
    est.stage1 = std::move(s1.meta);

    // Nonpositive stage-1 diagonals fall back to the correction ceiling.
    const double ceiling = std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
    Eigen::VectorXd diag_fixed = est.omega1_diag;
    for (Eigen::Index j = 0; j < p; ++j)
        if (!(diag_fixed[j] > 0.0)) diag_fixed[j] = ceiling;

    est.omega_breve = correct_diagonal(diag_fixed, cov.C.diagonal(), p, n);
    est.lambda_per_col = (est.tau * est.omega_breve.array().sqrt()).matrix();
    est.omega_tilde = stage2_solve(cov, est.lambda_per_col, stage2_params,
                                   block_size, workers, &est.stage2);
    est.omega_hat = symmetrize(est.omega_tilde);
    return est;
}

}  // namespace gridlearn
