#pragma once
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridlearn/grid.hpp"
#include "gridlearn/pde_sim.hpp"

namespace gridlearn {

// One off-diagonal entry of the precision estimate, decoded to grid
// locations and lags. Directed edges point from the earlier lag to the
// later one; equal lags stay undirected.
struct LaggedEdge {
    int src_loc = 0;
    int src_lag = 0;
    int dst_loc = 0;
    int dst_lag = 0;
    double weight = 0.0;  // magnitude of the precision entry
    bool directed = false;
};

enum class VelocityMode { BothIncident, OutgoingOnly };

VelocityMode velocity_mode_from_name(const std::string& name);
std::string velocity_mode_name(VelocityMode m);

// Per-cell velocity estimate in cells per sample row. Cells with fewer
// contributions than the configured minimum keep their count but have the
// velocity zeroed and the suppressed flag set.
struct VelocityReport {
    Grid grid;
    Eigen::VectorXd est_vx;
    Eigen::VectorXd est_vy;
    Eigen::VectorXi strength;
    std::vector<bool> suppressed;
};

struct CellScore {
    double delta_length = 0.0;
    std::optional<double> delta_alpha;  // degrees in [0, 180]
    std::string color;                  // blue, black, yellow, red, or none
};

struct ErrorSummary {
    double rmse_length = 0.0;
    double rmse_angle = 0.0;        // over cells with a defined angle error
    double ppdl15 = 0.0;            // percentage; 0 when nothing is defined
    Eigen::Index angle_defined = 0;  // cells entering the angle metrics
};

struct ScoreResult {
    ErrorSummary summary;
    std::vector<CellScore> cells;  // flat grid order
};

// Decodes every strict upper-triangle entry with a nonzero value of
// magnitude >= zero_tol. Variable i sits at location i/T, lag i%T.
std::vector<LaggedEdge> extract_edges(const Eigen::MatrixXd& omega_hat, int q,
                                      int T, double zero_tol);

// Averages displacement / travel-time over the directed edges credited to
// each cell. Displacements take the minimal periodic wrap on the grid.
// BothIncident credits both endpoints; OutgoingOnly credits the source
// only. Undirected edges contribute nothing either way.
VelocityReport estimate_velocities(const std::vector<LaggedEdge>& edges,
                                   const Grid& grid, VelocityMode mode,
                                   int min_strength);

// Scores the report against the true advection field, which the caller must
// express in the report's unit (cells per sample row). The angle error is
// wrapped to [0, 180], is 0 by convention when both vectors are zero, and is
// undefined when exactly one is zero. The length error covers every cell;
// the angle metrics cover defined cells only.
ScoreResult score(const VelocityReport& report, const VelocityField& truth);

void write_edges_tsv(const std::filesystem::path& path,
                     const std::vector<LaggedEdge>& edges);
void write_velocity_report_csv(const std::filesystem::path& path,
                               const VelocityReport& report,
                               const VelocityField& truth,
                               const ScoreResult& scores);
void write_summary_csv(const std::filesystem::path& path,
                       const std::string& scenario, const std::string& method,
                       const ErrorSummary& summary);
void write_quiver_svg(const std::filesystem::path& path,
                      const VelocityReport& report, const ScoreResult& scores);

}  // namespace gridlearn
