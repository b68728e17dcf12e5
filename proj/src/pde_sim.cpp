#include "gridlearn/pde_sim.hpp"

#include <cmath>

#include "gridlearn/errors.hpp"
#include "gridlearn/parallel.hpp"

namespace gridlearn {

Scenario scenario_from_name(const std::string& name) {
    if (name == "circular") return Scenario::Circular;
    if (name == "ring") return Scenario::Ring;
    if (name == "cross_current") return Scenario::CrossCurrent;
    if (name == "fast_ring") return Scenario::FastRing;
    throw ConfigError("unknown scenario: " + name);
}

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Circular: return "circular";
        case Scenario::Ring: return "ring";
        case Scenario::CrossCurrent: return "cross_current";
        case Scenario::FastRing: return "fast_ring";
    }
    throw ConfigError("unknown scenario enum value");
}

namespace {

VelocityField zero_field(const Grid& grid) {
    VelocityField v;
    v.grid = grid;
    v.vx = Eigen::VectorXd::Zero(grid.cells());
    v.vy = Eigen::VectorXd::Zero(grid.cells());
    return v;
}

// Tangential (counterclockwise) unit direction about the grid center,
// (0,0) at the center itself.
void tangential_direction(const Grid& grid, int x, int y,
                          double& r, double& ux, double& uy) {
    double cx = std::floor(grid.width / 2.0);
    double cy = std::floor(grid.height / 2.0);
    double dx = x - cx;
    double dy = y - cy;
    r = std::hypot(dx, dy);
    if (r == 0.0) {
        ux = uy = 0.0;
        return;
    }
    ux = -dy / r;
    uy = dx / r;
}

VelocityField circular_field(const Grid& grid) {
    VelocityField v = zero_field(grid);
    // First pass finds the largest radius so the speed scale c*r peaks at 1.
    double r_max = 0.0;
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x) {
            double r, ux, uy;
            tangential_direction(grid, x, y, r, ux, uy);
            r_max = std::max(r_max, r);
        }
    double c = r_max > 0.0 ? 1.0 / r_max : 0.0;
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x) {
            double r, ux, uy;
            tangential_direction(grid, x, y, r, ux, uy);
            int i = grid.index(x, y);
            v.vx[i] = c * r * ux;
            v.vy[i] = c * r * uy;
        }
    return v;
}

VelocityField ring_field(const Grid& grid) {
    VelocityField v = zero_field(grid);
    double R = grid.width / 2.0;
    double r_lo = 0.3 * R;
    double r_hi = 0.65 * R;
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x) {
            double r, ux, uy;
            tangential_direction(grid, x, y, r, ux, uy);
            if (r < r_lo || r > r_hi) continue;
            int i = grid.index(x, y);
            v.vx[i] = ux;
            v.vy[i] = uy;
        }
    return v;
}

VelocityField cross_current_field(const Grid& grid) {
    VelocityField v = zero_field(grid);
    int band = (grid.height + 4) / 5;  // ceil(height/5)
    int h0 = grid.height / 2 - band / 2;
    int v0 = grid.width / 2 - band / 2;
    const double bg = 0.05 / std::sqrt(2.0);
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x) {
            int i = grid.index(x, y);
            bool in_h = y >= h0 && y < h0 + band;
            bool in_v = x >= v0 && x < v0 + band;
            if (in_v) {  // vertical band wins at the crossing
                v.vx[i] = 0.0;
                v.vy[i] = 1.0;
            } else if (in_h) {
                v.vx[i] = 1.0;
                v.vy[i] = 0.0;
            } else {
                v.vx[i] = bg;
                v.vy[i] = bg;
            }
        }
    return v;
}

}  // namespace

VelocityField make_velocity_field(Scenario s, const Grid& grid) {
    grid.validate();
    switch (s) {
        case Scenario::Circular: return circular_field(grid);
        case Scenario::Ring: return ring_field(grid);
        case Scenario::CrossCurrent: return cross_current_field(grid);
        case Scenario::FastRing: return ring_field(grid);
    }
    throw ConfigError("unknown scenario enum value");
}

double stability_limit_dt(const VelocityField& v, double kappa) {
    double h = v.grid.spacing;
    double adv = v.vx.cwiseAbs().maxCoeff() / h + v.vy.cwiseAbs().maxCoeff() / h;
    double dif = 2.0 * kappa * (1.0 / (h * h) + 1.0 / (h * h));
    double denom = adv + dif;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / denom;
}

double default_dt(const VelocityField& v, double kappa) {
    double limit = stability_limit_dt(v, kappa);
    if (!std::isfinite(limit))
        throw ConfigError("no transport terms: dt must be given explicitly");
    return 0.9 * limit;
}

void check_stability(const VelocityField& v, double kappa, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (kappa < 0.0) throw ConfigError("kappa must be non-negative");
    double h = v.grid.spacing;
    double courant = dt * (v.vx.cwiseAbs().maxCoeff() / h + v.vy.cwiseAbs().maxCoeff() / h) +
                     2.0 * dt * kappa * (2.0 / (h * h));
    if (courant > 1.0 + 1e-12)
        throw NumericError("stability bound violated: advective plus diffusive "
                           "Courant number " + std::to_string(courant) + " exceeds 1");
}

ScalarField step(const ScalarField& f, const VelocityField& v, const SimConfig& cfg) {
    const Grid& g = f.grid;
    if (v.grid.width != g.width || v.grid.height != g.height)
        throw ConfigError("velocity field grid does not match scalar field grid");
    check_stability(v, cfg.kappa, cfg.dt);

    const double h = g.spacing;
    const double adt = cfg.dt / h;
    const double ddt = cfg.dt * cfg.kappa / (h * h);

    ScalarField out;
    out.grid = g;
    out.values = f.values;

    // x faces: face (x,y) sits between (x,y) and (x+1 mod W, y).
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            int left = g.index(x, y);
            int right = g.index(g.wrap_x(x + 1), y);
            double uf = 0.5 * (v.vx[left] + v.vx[right]);
            double flux = uf * (uf > 0.0 ? f.values[left] : f.values[right]);
            out.values[left] -= adt * flux;
            out.values[right] += adt * flux;
        }
    }
    // y faces: face (x,y) sits between (x,y) and (x, y+1 mod H).
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            int bottom = g.index(x, y);
            int top = g.index(x, g.wrap_y(y + 1));
            double uf = 0.5 * (v.vy[bottom] + v.vy[top]);
            double flux = uf * (uf > 0.0 ? f.values[bottom] : f.values[top]);
            out.values[bottom] -= adt * flux;
            out.values[top] += adt * flux;
        }
    }
    if (ddt > 0.0) {
        for (int y = 0; y < g.height; ++y) {
            for (int x = 0; x < g.width; ++x) {
                int i = g.index(x, y);
                double lap = f.values[g.index(g.wrap_x(x + 1), y)] +
                             f.values[g.index(g.wrap_x(x - 1), y)] +
                             f.values[g.index(x, g.wrap_y(y + 1))] +
                             f.values[g.index(x, g.wrap_y(y - 1))] -
                             4.0 * f.values[i];
                out.values[i] += ddt * lap;
            }
        }
    }
    return out;
}

RawRuns simulate_impulses(const SimConfig& cfg, const Grid& grid, int workers) {
    grid.validate();
    if (cfg.run_steps < 1) throw ConfigError("run_steps must be at least 1");
    VelocityField v = make_velocity_field(cfg.scenario, grid);
    SimConfig local = cfg;
    if (local.dt <= 0.0) local.dt = default_dt(v, cfg.kappa);
    check_stability(v, local.kappa, local.dt);

    const int q = grid.cells();
    RawRuns out;
    out.grid = grid;
    out.run_steps = local.run_steps;
    out.runs.resize(static_cast<size_t>(q));

    parallel_blocks(q, workers, [&](int g) {
        Eigen::MatrixXd run(local.run_steps, q);
        ScalarField f;
        f.grid = grid;
        f.values = Eigen::VectorXd::Zero(q);
        f.values[g] = 1.0;
        run.row(0) = f.values.transpose();
        for (int s = 1; s < local.run_steps; ++s) {
            f = step(f, v, local);
            run.row(s) = f.values.transpose();
        }
        out.runs[static_cast<size_t>(g)] = std::move(run);
    });
    return out;
}

RawRuns subsample_runs(const RawRuns& runs, int stride) {
    if (stride < 1) throw ConfigError("stride must be at least 1");
    if (stride == 1) return runs;
    if (runs.run_steps < stride)
        throw ConfigError("stride exceeds run length");
    int kept = (runs.run_steps - 1) / stride + 1;
    RawRuns out;
    out.grid = runs.grid;
    out.run_steps = kept;
    out.runs.reserve(runs.runs.size());
    for (const auto& run : runs.runs) {
        Eigen::MatrixXd sub(kept, run.cols());
        for (int r = 0; r < kept; ++r) sub.row(r) = run.row(r * stride);
        out.runs.push_back(std::move(sub));
    }
    return out;
}

}  // namespace gridlearn
