#include "gridlearn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "gridlearn/dataset.hpp"
#include "gridlearn/errors.hpp"
#include "gridlearn/gmat_io.hpp"
#include "gridlearn/graph_velocity.hpp"
#include "gridlearn/rng.hpp"

namespace gridlearn {

namespace fs = std::filesystem;

namespace {

using Manifest = std::map<std::string, std::string>;

const std::string& need(const Manifest& kv, const std::string& key, const fs::path& src) {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError(src.string() + " is missing key " + key);
    return it->second;
}

int need_int(const Manifest& kv, const std::string& key, const fs::path& src) {
    try {
        return std::stoi(need(kv, key, src));
    } catch (const IoError&) {
        throw;
    } catch (const std::exception&) {
        throw IoError(src.string() + " has a malformed value for " + key);
    }
}

double need_double(const Manifest& kv, const std::string& key, const fs::path& src) {
    try {
        return std::stod(need(kv, key, src));
    } catch (const IoError&) {
        throw;
    } catch (const std::exception&) {
        throw IoError(src.string() + " has a malformed value for " + key);
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& trace) {
    std::string text = "block,iteration,primal,dual\n";
    for (const TraceRow& row : trace)
        text += std::to_string(row.block) + "," + std::to_string(row.iteration) + "," +
                format_double(row.primal) + "," + format_double(row.dual) + "\n";
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    size_t written = std::fwrite(text.data(), 1, text.size(), f);
    bool ok = written == text.size() && std::fclose(f) == 0;
    if (!ok) throw IoError("write failed for " + path.string());
}

void append_columns(std::string& text, int stage, const std::vector<ColumnMeta>& cols) {
    for (size_t j = 0; j < cols.size(); ++j) {
        const ColumnMeta& m = cols[j];
        text += std::to_string(stage) + "," + std::to_string(j) + "," +
                std::to_string(m.iterations) + "," + (m.converged ? "1" : "0") + "," +
                format_double(m.primal) + "," + format_double(m.dual) + "," +
                format_double(m.inf_residual) + "," + (m.diag_nonpositive ? "1" : "0") + "\n";
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    size_t written = std::fwrite(text.data(), 1, text.size(), f);
    bool ok = written == text.size() && std::fclose(f) == 0;
    if (!ok) throw IoError("write failed for " + path.string());
}

std::string rho_label(double rho) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", rho);
    return buf;
}

}  // namespace

Grid make_grid(const PipelineConfig& cfg) {
    Grid grid{cfg.width, cfg.height, 1.0};
    grid.validate();
    return grid;
}

int resolve_stride(const PipelineConfig& cfg) {
    if (cfg.stride > 0) return cfg.stride;
    return scenario_from_name(cfg.scenario) == Scenario::FastRing ? 10 : 1;
}

int resolve_min_strength(const PipelineConfig& cfg) {
    if (cfg.min_strength >= 0) return cfg.min_strength;
    return velocity_mode_from_name(cfg.mode) == VelocityMode::BothIncident ? 0 : 10;
}

double resolve_zero_tol(double zero_tol, const Eigen::MatrixXd& omega_hat) {
    if (zero_tol > 0.0) return zero_tol;
    // Entries below 2% of the strongest off-diagonal are treated as the
    // solver's noise floor rather than structure.
    double m = 0.0;
    for (Eigen::Index j = 0; j < omega_hat.cols(); ++j)
        for (Eigen::Index i = 0; i < omega_hat.rows(); ++i)
            if (i != j) m = std::max(m, std::abs(omega_hat(i, j)));
    return 0.02 * m;
}

int cmd_simulate(const PipelineConfig& cfg) {
    Grid grid = make_grid(cfg);
    Scenario sc = scenario_from_name(cfg.scenario);
    int stride = resolve_stride(cfg);
    if (cfg.run_steps < 2) throw ConfigError("run_steps must be at least 2");
    if (stride < 1) throw ConfigError("stride must be at least 1");
    const int raw_steps = (cfg.run_steps - 1) * stride + 1;

    VelocityField field = make_velocity_field(sc, grid);
    const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(field, cfg.kappa);

    SimConfig sim;
    sim.kappa = cfg.kappa;
    sim.dt = dt;
    sim.run_steps = raw_steps;
    sim.scenario = sc;
    sim.stride = stride;
    RawRuns runs = simulate_impulses(sim, grid, cfg.workers);
    if (stride > 1) runs = subsample_runs(runs, stride);

    const int q = grid.cells();
    Eigen::MatrixXd stacked(static_cast<Eigen::Index>(q) * cfg.run_steps, q);
    for (int g = 0; g < q; ++g)
        stacked.middleRows(static_cast<Eigen::Index>(g) * cfg.run_steps, cfg.run_steps) =
            runs.runs[static_cast<size_t>(g)];

    ensure_dir(cfg.out_dir);
    write_gmat(cfg.out_dir / "runs.gmat", stacked);
    Manifest meta;
    meta["scenario"] = cfg.scenario;
    meta["width"] = std::to_string(grid.width);
    meta["height"] = std::to_string(grid.height);
    meta["spacing"] = format_double(grid.spacing);
    meta["kappa"] = format_double(cfg.kappa);
    meta["dt"] = format_double(dt);
    meta["run_steps"] = std::to_string(cfg.run_steps);
    meta["stride"] = std::to_string(stride);
    meta["q"] = std::to_string(q);
    write_manifest(cfg.out_dir / "runs.meta", meta);
    return 0;
}

int cmd_learn(const PipelineConfig& cfg) {
    const fs::path meta_path = cfg.out_dir / "runs.meta";
    Manifest sim_meta = read_manifest(meta_path);
    const int width = need_int(sim_meta, "width", meta_path);
    const int height = need_int(sim_meta, "height", meta_path);
    const int run_steps = need_int(sim_meta, "run_steps", meta_path);
    const int q = need_int(sim_meta, "q", meta_path);
    if (q != width * height) throw ConfigError("runs.meta is inconsistent: q != width*height");

    Eigen::MatrixXd stacked = read_gmat(cfg.out_dir / "runs.gmat");
    if (stacked.cols() != q || stacked.rows() != static_cast<Eigen::Index>(q) * run_steps)
        throw ConfigError("runs.gmat does not match runs.meta dimensions");

    RawRuns runs;
    runs.grid = Grid{width, height, 1.0};
    runs.run_steps = run_steps;
    runs.runs.reserve(static_cast<size_t>(q));
    for (int g = 0; g < q; ++g)
        runs.runs.push_back(
            stacked.middleRows(static_cast<Eigen::Index>(g) * run_steps, run_steps));

    DesignMatrix X = lag_expand(runs, cfg.T);
    ZScoreInfo zinfo = zscore_inplace(X);

    PrecisionEstimate est;
    double lambda_used = 0.0;
    if (cfg.method == "aclime") {
        est = aclime_estimate(X, cfg.delta, cfg.stage1, cfg.stage2, cfg.block, cfg.workers);
    } else if (cfg.method == "clime") {
        CovarianceView cov = sample_covariance(X);
        lambda_used = cfg.lambda > 0.0 ? cfg.lambda : tau(cfg.delta, X.p(), X.n());
        est = clime_estimate(cov, lambda_used, cfg.stage2, cfg.block, cfg.workers);
    } else {
        throw ConfigError("unknown method: " + cfg.method + " (expected aclime or clime)");
    }

    ensure_dir(cfg.out_dir);
    write_gmat(cfg.out_dir / "omega_hat.gmat", est.omega_hat);
    const double ztol = resolve_zero_tol(cfg.zero_tol, est.omega_hat);
    write_sparse_triplets(cfg.out_dir / "omega_sparse.csv", est.omega_hat, ztol);

    std::string ztext = "column,mean,sd,constant\n";
    for (Eigen::Index j = 0; j < X.p(); ++j)
        ztext += std::to_string(j) + "," + format_double(zinfo.mean[j]) + "," +
                 format_double(zinfo.sd[j]) + "," +
                 (zinfo.constant[static_cast<size_t>(j)] ? "1" : "0") + "\n";
    write_text(cfg.out_dir / "zscore.csv", ztext);

    std::string ctext = "stage,column,iterations,converged,primal,dual,inf_residual,diag_nonpositive\n";
    append_columns(ctext, 1, est.stage1.columns);
    append_columns(ctext, 2, est.stage2.columns);
    write_text(cfg.out_dir / "columns.csv", ctext);
    write_trace_csv(cfg.out_dir / "stage1_trace.csv", est.stage1.trace);
    write_trace_csv(cfg.out_dir / "stage2_trace.csv", est.stage2.trace);

    int unconverged = 0;
    for (const ColumnMeta& m : est.stage1.columns)
        if (!m.converged) ++unconverged;
    for (const ColumnMeta& m : est.stage2.columns)
        if (!m.converged) ++unconverged;

    Manifest meta = sim_meta;
    meta["method"] = cfg.method;
    meta["lags"] = std::to_string(cfg.T);
    meta["n"] = std::to_string(X.n());
    meta["p"] = std::to_string(X.p());
    meta["delta"] = format_double(cfg.delta);
    if (cfg.method == "clime") meta["lambda"] = format_double(lambda_used);
    if (cfg.method == "aclime") meta["tau"] = format_double(est.tau);
    meta["rho1"] = format_double(est.stage1.rho);
    meta["eta1"] = format_double(est.stage1.eta_used);
    meta["rho2"] = format_double(est.stage2.rho);
    meta["eta2"] = format_double(est.stage2.eta_used);
    meta["tol_abs"] = format_double(cfg.stage2.tol_abs);
    meta["tol_rel"] = format_double(cfg.stage2.tol_rel);
    meta["max_iter"] = std::to_string(cfg.stage2.max_iter);
    meta["check_every"] = std::to_string(cfg.stage2.check_every);
    meta["block"] = std::to_string(cfg.block);
    meta["zero_tol"] = format_double(ztol);
    meta["unconverged"] = std::to_string(unconverged);
    write_manifest(cfg.out_dir / "learn.meta", meta);

    return unconverged > 0 ? 3 : 0;
}

int cmd_evaluate(const PipelineConfig& cfg) {
    const fs::path meta_path = cfg.out_dir / "learn.meta";
    Manifest meta = read_manifest(meta_path);
    const int width = need_int(meta, "width", meta_path);
    const int height = need_int(meta, "height", meta_path);
    const int q = need_int(meta, "q", meta_path);
    const int T = need_int(meta, "lags", meta_path);
    const int stride = need_int(meta, "stride", meta_path);
    const double dt = need_double(meta, "dt", meta_path);
    const std::string& scenario = need(meta, "scenario", meta_path);
    const std::string& method = need(meta, "method", meta_path);

    Grid grid{width, height, 1.0};
    grid.validate();
    Eigen::MatrixXd omega = read_gmat(cfg.out_dir / "omega_hat.gmat");
    if (omega.rows() != static_cast<Eigen::Index>(q) * T)
        throw ConfigError("omega_hat.gmat does not match q*lags from learn.meta");

    const double ztol = cfg.zero_tol > 0.0 ? cfg.zero_tol : need_double(meta, "zero_tol", meta_path);
    std::vector<LaggedEdge> edges = extract_edges(omega, q, T, ztol);
    VelocityMode mode = velocity_mode_from_name(cfg.mode);
    VelocityReport report = estimate_velocities(edges, grid, mode, resolve_min_strength(cfg));

    // the scenario field is displacement per unit time; one sample row spans
    // dt * stride time, which is the unit the edge estimates live in
    VelocityField truth = make_velocity_field(scenario_from_name(scenario), grid);
    truth.vx *= dt * stride;
    truth.vy *= dt * stride;
    ScoreResult scores = score(report, truth);

    write_edges_tsv(cfg.out_dir / "edges.tsv", edges);
    write_velocity_report_csv(cfg.out_dir / "velocity_report.csv", report, truth, scores);
    write_summary_csv(cfg.out_dir / "summary.csv", scenario, method, scores.summary);
    write_quiver_svg(cfg.out_dir / "quiver.svg", report, scores);
    return 0;
}

int cmd_pipeline(const PipelineConfig& cfg) {
    int rc = cmd_simulate(cfg);
    if (rc != 0) return rc;
    int rc_learn = cmd_learn(cfg);
    int rc_eval = cmd_evaluate(cfg);  // results exist even on partial convergence
    return rc_learn != 0 ? rc_learn : rc_eval;
}

Eigen::MatrixXd chain_precision(int p, double w) {
    if (p < 2) throw ConfigError("chain needs p >= 2");
    Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(p, p);
    for (int i = 0; i + 1 < p; ++i) {
        omega(i, i + 1) = w;
        omega(i + 1, i) = w;
    }
    if (omega.llt().info() != Eigen::Success)
        throw ConfigError("chain precision is not positive definite at w = " + format_double(w));
    return omega;
}

Eigen::MatrixXd sample_gaussian(const Eigen::MatrixXd& omega, int n,
                                unsigned long long seed) {
    if (omega.rows() != omega.cols()) throw ConfigError("precision matrix must be square");
    if (n < 1) throw ConfigError("sample count must be positive");
    const Eigen::Index p = omega.rows();
    Eigen::LLT<Eigen::MatrixXd> llt_omega(omega);
    if (llt_omega.info() != Eigen::Success)
        throw ConfigError("precision matrix must be positive definite");
    Eigen::MatrixXd sigma = llt_omega.solve(Eigen::MatrixXd::Identity(p, p));
    sigma = (0.5 * (sigma + sigma.transpose())).eval();
    Eigen::LLT<Eigen::MatrixXd> llt_sigma(sigma);
    if (llt_sigma.info() != Eigen::Success)
        throw NumericError("covariance factorization failed");
    Rng rng(seed);
    Eigen::MatrixXd z = rng.normal_matrix(n, p);
    return z * Eigen::MatrixXd(llt_sigma.matrixL()).transpose();
}

StabilityReport run_stability_check(unsigned long long seed, int n, double delta,
                                    const std::vector<double>& rhos,
                                    const AdmmParams& base) {
    const int p = 10;
    const double w = 0.4;
    Eigen::MatrixXd omega_truth = chain_precision(p, w);

    DesignMatrix X;
    X.samples = sample_gaussian(omega_truth, n, seed);
    X.q = p;
    X.T = 1;
    zscore_inplace(X);

    StabilityReport report;
    report.seed = seed;
    report.p = p;
    report.n = n;
    report.delta = delta;

    for (double rho : rhos) {
        AdmmParams prm = base;
        prm.rho = rho;
        prm.eta = 0.0;  // per-solve default
        PrecisionEstimate est = aclime_estimate(X, delta, prm, prm, p, 1);

        StabilityRow row;
        row.rho = rho;
        row.converged = true;
        for (const ColumnMeta& m : est.stage1.columns) {
            row.stage1_iterations = std::max(row.stage1_iterations, m.iterations);
            row.stage1_primal = std::max(row.stage1_primal, m.primal);
            row.stage1_dual = std::max(row.stage1_dual, m.dual);
            row.converged = row.converged && m.converged;
        }
        for (const ColumnMeta& m : est.stage2.columns) {
            row.stage2_iterations = std::max(row.stage2_iterations, m.iterations);
            row.stage2_primal = std::max(row.stage2_primal, m.primal);
            row.stage2_dual = std::max(row.stage2_dual, m.dual);
            row.converged = row.converged && m.converged;
        }

        const double tol = resolve_zero_tol(0.0, est.omega_hat);
        row.support_exact = true;
        for (int i = 0; i < p; ++i)
            for (int j = i + 1; j < p; ++j) {
                bool truth_edge = omega_truth(i, j) != 0.0;
                double v = std::abs(est.omega_hat(i, j));
                bool est_edge = v != 0.0 && v >= tol;
                if (truth_edge != est_edge) row.support_exact = false;
            }
        report.rows.push_back(row);
        report.stage1_metas.push_back(std::move(est.stage1));
        report.stage2_metas.push_back(std::move(est.stage2));
    }
    return report;
}

int cmd_stability_check(const PipelineConfig& cfg) {
    const std::vector<double> rhos{0.1, 0.5, 1.0, 2.0};
    ensure_dir(cfg.out_dir);
    StabilityReport report = run_stability_check(cfg.seed, 1500, cfg.delta, rhos, cfg.stage2);

    std::string text =
        "rho,stage1_iterations,stage2_iterations,stage1_primal,stage1_dual,"
        "stage2_primal,stage2_dual,converged,support_exact\n";
    bool all_ok = true;
    for (size_t i = 0; i < report.rows.size(); ++i) {
        const StabilityRow& row = report.rows[i];
        text += rho_label(row.rho) + "," + std::to_string(row.stage1_iterations) + "," +
                std::to_string(row.stage2_iterations) + "," + format_double(row.stage1_primal) +
                "," + format_double(row.stage1_dual) + "," + format_double(row.stage2_primal) +
                "," + format_double(row.stage2_dual) + "," + (row.converged ? "1" : "0") + "," +
                (row.support_exact ? "1" : "0") + "\n";
        all_ok = all_ok && row.converged && row.support_exact;
        const std::string label = rho_label(row.rho);
        write_trace_csv(cfg.out_dir / ("stability_rho_" + label + "_stage1_trace.csv"),
                        report.stage1_metas[i].trace);
        write_trace_csv(cfg.out_dir / ("stability_rho_" + label + "_stage2_trace.csv"),
                        report.stage2_metas[i].trace);
    }
    write_text(cfg.out_dir / "stability.csv", text);
    return all_ok ? 0 : 3;
}

}  // namespace gridlearn
