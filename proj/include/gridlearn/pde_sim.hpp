#pragma once
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridlearn/grid.hpp"

namespace gridlearn {

enum class Scenario { Circular, Ring, CrossCurrent, FastRing };

Scenario scenario_from_name(const std::string& name);
std::string scenario_name(Scenario s);

struct VelocityField {
    Grid grid;
    Eigen::VectorXd vx;  // per cell, along +x
    Eigen::VectorXd vy;  // per cell, along +y
};

struct ScalarField {
    Grid grid;
    Eigen::VectorXd values;
};

struct SimConfig {
    double kappa = 0.1;
    double dt = 0.0;     // <= 0 selects the default: 0.9x the stability limit
    int run_steps = 32;  // recorded rows per impulse run
    Scenario scenario = Scenario::Ring;
    int stride = 1;      // FastRing subsampling factor; 1 otherwise
};

// Per-impulse evolution records. Run g starts from a unit impulse at cell g;
// row 0 is that initial state, rows advance one step at a time.
struct RawRuns {
    Grid grid;
    int run_steps = 0;
    std::vector<Eigen::MatrixXd> runs;  // cells() matrices, run_steps x cells()
};

// Scenario velocity fields. FastRing shares the Ring field; its speed-up
// comes from subsampling, not from the field itself.
VelocityField make_velocity_field(Scenario s, const Grid& grid);

// Largest dt the explicit scheme admits: advective plus diffusive Courant
// numbers must not exceed 1.
double stability_limit_dt(const VelocityField& v, double kappa);
double default_dt(const VelocityField& v, double kappa);

// Throws NumericError when cfg.dt violates the stability limit.
void check_stability(const VelocityField& v, double kappa, double dt);

// One explicit Euler step: conservative flux-form first-order upwind
// advection plus central-difference diffusion, periodic in both axes.
// Each face flux is computed once and shared by its two cells, so the
// total mass telescopes and is conserved to rounding.
ScalarField step(const ScalarField& f, const VelocityField& v, const SimConfig& cfg);

// One run per grid cell, each started from a unit impulse at that cell.
// Runs are independent; with workers > 1 they are computed concurrently
// with bitwise-identical results.
RawRuns simulate_impulses(const SimConfig& cfg, const Grid& grid, int workers = 1);

// Keeps rows 0, stride, 2*stride, ... of each run.
RawRuns subsample_runs(const RawRuns& runs, int stride);

}  // namespace gridlearn
