#include "gridlearn/graph_velocity.hpp"

#include <cmath>
#include <fstream>

#include "gridlearn/errors.hpp"
#include "gridlearn/gmat_io.hpp"

namespace gridlearn {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

std::string color_hex(const std::string& color) {
    if (color == "blue") return "#1f5bd8";
    if (color == "black") return "#111111";
    if (color == "yellow") return "#d4a800";
    if (color == "red") return "#cc2222";
    return "#999999";  // none
}

}  // namespace

VelocityMode velocity_mode_from_name(const std::string& name) {
    if (name == "both_incident") return VelocityMode::BothIncident;
    if (name == "outgoing_only") return VelocityMode::OutgoingOnly;
    throw ConfigError("unknown velocity mode: " + name);
}

std::string velocity_mode_name(VelocityMode m) {
    return m == VelocityMode::BothIncident ? "both_incident" : "outgoing_only";
}

std::vector<LaggedEdge> extract_edges(const Eigen::MatrixXd& omega_hat, int q,
                                      int T, double zero_tol) {
    if (omega_hat.rows() != omega_hat.cols())
        throw ConfigError("edge extraction needs a square matrix");
    if (q < 1 || T < 1) throw ConfigError("edge extraction needs q >= 1, T >= 1");
    if (omega_hat.rows() != static_cast<Eigen::Index>(q) * T)
        throw ConfigError("matrix size " + std::to_string(omega_hat.rows()) +
                          " does not match q*T = " + std::to_string(q * T));
    if (zero_tol < 0.0) throw ConfigError("zero_tol must be nonnegative");

    std::vector<LaggedEdge> edges;
    const Eigen::Index p = omega_hat.rows();
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            double w = std::abs(omega_hat(i, j));
            // exact zeros never form an edge, whatever the tolerance
            if (w == 0.0 || w < zero_tol) continue;
            LaggedEdge e;
            e.weight = w;
            int loc_a = static_cast<int>(i) / T;
            int lag_a = static_cast<int>(i) % T;
            int loc_b = static_cast<int>(j) / T;
            int lag_b = static_cast<int>(j) % T;
            if (lag_a <= lag_b) {
                e.src_loc = loc_a;
                e.src_lag = lag_a;
                e.dst_loc = loc_b;
                e.dst_lag = lag_b;
            } else {
                e.src_loc = loc_b;
                e.src_lag = lag_b;
                e.dst_loc = loc_a;
                e.dst_lag = lag_a;
            }
            e.directed = e.src_lag != e.dst_lag;
            edges.push_back(e);
        }
    }
    return edges;
}

VelocityReport estimate_velocities(const std::vector<LaggedEdge>& edges,
                                   const Grid& grid, VelocityMode mode,
                                   int min_strength) {
    grid.validate();
    const int cells = grid.cells();

    Eigen::VectorXd sum_x = Eigen::VectorXd::Zero(cells);
    Eigen::VectorXd sum_y = Eigen::VectorXd::Zero(cells);
    Eigen::VectorXi count = Eigen::VectorXi::Zero(cells);

    for (const LaggedEdge& e : edges) {
        if (!e.directed) continue;
        if (e.src_loc < 0 || e.src_loc >= cells || e.dst_loc < 0 || e.dst_loc >= cells)
            throw ConfigError("edge location outside the grid");
        int tt = e.dst_lag - e.src_lag;
        if (tt <= 0) throw ConfigError("directed edge must advance in lag");
        int dx = Grid::wrap_delta(grid.cell_x(e.src_loc), grid.cell_x(e.dst_loc), grid.width);
        int dy = Grid::wrap_delta(grid.cell_y(e.src_loc), grid.cell_y(e.dst_loc), grid.height);
        double vx = static_cast<double>(dx) / tt;
        double vy = static_cast<double>(dy) / tt;
        sum_x[e.src_loc] += vx;
        sum_y[e.src_loc] += vy;
        count[e.src_loc] += 1;
        if (mode == VelocityMode::BothIncident) {
            // a same-location edge credits its cell once per endpoint
            sum_x[e.dst_loc] += vx;
            sum_y[e.dst_loc] += vy;
            count[e.dst_loc] += 1;
        }
    }

    VelocityReport report;
    report.grid = grid;
    report.est_vx = Eigen::VectorXd::Zero(cells);
    report.est_vy = Eigen::VectorXd::Zero(cells);
    report.strength = count;
    report.suppressed.assign(static_cast<size_t>(cells), false);
    for (int i = 0; i < cells; ++i) {
        if (count[i] < min_strength) {
            report.suppressed[static_cast<size_t>(i)] = true;
            continue;
        }
        if (count[i] > 0) {
            report.est_vx[i] = sum_x[i] / count[i];
            report.est_vy[i] = sum_y[i] / count[i];
        }
    }
    return report;
}

ScoreResult score(const VelocityReport& report, const VelocityField& truth) {
    if (report.grid.width != truth.grid.width || report.grid.height != truth.grid.height)
        throw ConfigError("velocity report and truth field use different grids");
    const int cells = report.grid.cells();
    if (report.est_vx.size() != cells || truth.vx.size() != cells)
        throw ConfigError("velocity field size does not match the grid");

    ScoreResult res;
    res.cells.resize(static_cast<size_t>(cells));
    double sq_length = 0.0;
    double sq_angle = 0.0;
    Eigen::Index defined = 0;
    Eigen::Index within15 = 0;

    for (int i = 0; i < cells; ++i) {
        double ex = report.est_vx[i], ey = report.est_vy[i];
        double tx = truth.vx[i], ty = truth.vy[i];
        double le = std::hypot(ex, ey);
        double lt = std::hypot(tx, ty);
        CellScore& cell = res.cells[static_cast<size_t>(i)];
        cell.delta_length = std::abs(lt - le);
        sq_length += cell.delta_length * cell.delta_length;

        bool est_zero = le == 0.0;
        bool truth_zero = lt == 0.0;
        if (est_zero && truth_zero) {
            cell.delta_alpha = 0.0;
        } else if (!est_zero && !truth_zero) {
            double deg = std::abs(std::atan2(ty, tx) - std::atan2(ey, ex)) * 180.0 / kPi;
            if (deg > 180.0) deg = 360.0 - deg;
            cell.delta_alpha = deg;
        }

        if (cell.delta_alpha) {
            double a = *cell.delta_alpha;
            defined += 1;
            sq_angle += a * a;
            if (a <= 15.0) within15 += 1;
            cell.color = a <= 15.0 ? "blue" : a <= 30.0 ? "black" : a <= 45.0 ? "yellow" : "red";
        } else if (truth_zero) {
            cell.color = le <= 0.1 ? "blue" : le <= 0.5 ? "black" : "red";
        } else {
            cell.color = "none";
        }
    }

    res.summary.rmse_length = cells > 0 ? std::sqrt(sq_length / cells) : 0.0;
    res.summary.angle_defined = defined;
    if (defined > 0) {
        res.summary.rmse_angle = std::sqrt(sq_angle / static_cast<double>(defined));
        res.summary.ppdl15 = 100.0 * static_cast<double>(within15) / static_cast<double>(defined);
    }
    return res;
}

void write_edges_tsv(const std::filesystem::path& path,
                     const std::vector<LaggedEdge>& edges) {
    std::ofstream out = open_out(path);
    out << "src_loc\tsrc_lag\tdst_loc\tdst_lag\tweight\tdirected\n";
    for (const LaggedEdge& e : edges)
        out << e.src_loc << '\t' << e.src_lag << '\t' << e.dst_loc << '\t'
            << e.dst_lag << '\t' << format_double(e.weight) << '\t'
            << (e.directed ? 1 : 0) << '\n';
    finish(out, path);
}

void write_velocity_report_csv(const std::filesystem::path& path,
                               const VelocityReport& report,
                               const VelocityField& truth,
                               const ScoreResult& scores) {
    const int cells = report.grid.cells();
    if (static_cast<int>(scores.cells.size()) != cells || truth.vx.size() != cells)
        throw ConfigError("velocity report components use different grids");
    std::ofstream out = open_out(path);
    out << "x,y,est_vx,est_vy,strength,truth_vx,truth_vy,delta_L,delta_alpha_or_NA,color\n";
    for (int i = 0; i < cells; ++i) {
        const CellScore& cell = scores.cells[static_cast<size_t>(i)];
        out << report.grid.cell_x(i) << ',' << report.grid.cell_y(i) << ','
            << format_double(report.est_vx[i]) << ',' << format_double(report.est_vy[i])
            << ',' << report.strength[i] << ',' << format_double(truth.vx[i]) << ','
            << format_double(truth.vy[i]) << ',' << format_double(cell.delta_length)
            << ',';
        if (cell.delta_alpha)
            out << format_double(*cell.delta_alpha);
        else
            out << "NA";
        out << ',' << cell.color << '\n';
    }
    finish(out, path);
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::string& scenario, const std::string& method,
                       const ErrorSummary& summary) {
    std::ofstream out = open_out(path);
    out << "scenario,method,PPDL15,RMSE-Angle,RMSE-Length,angle_defined_count\n";
    out << scenario << ',' << method << ',' << format_double(summary.ppdl15) << ','
        << format_double(summary.rmse_angle) << ','
        << format_double(summary.rmse_length) << ',' << summary.angle_defined << '\n';
    finish(out, path);
}

void write_quiver_svg(const std::filesystem::path& path,
                      const VelocityReport& report, const ScoreResult& scores) {
    const Grid& grid = report.grid;
    const int cells = grid.cells();
    if (static_cast<int>(scores.cells.size()) != cells)
        throw ConfigError("quiver scores use a different grid");

    const double s = 28.0;  // pixels per cell
    const double margin = s;
    const double w = grid.width * s + 2 * margin;
    const double h = grid.height * s + 2 * margin + 24.0;  // legend strip

    double max_len = 0.0;
    for (int i = 0; i < cells; ++i)
        max_len = std::max(max_len, std::hypot(report.est_vx[i], report.est_vy[i]));
    const double scale = max_len > 0.0 ? 0.9 * s / max_len : 0.0;

    std::ofstream out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
        << h << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << grid.width * s
        << "\" height=\"" << grid.height * s
        << "\" fill=\"none\" stroke=\"#dddddd\"/>\n";

    for (int i = 0; i < cells; ++i) {
        double cx = margin + (grid.cell_x(i) + 0.5) * s;
        // grid y points up; svg y points down
        double cy = margin + (grid.height - 1 - grid.cell_y(i) + 0.5) * s;
        const std::string hex = color_hex(scores.cells[static_cast<size_t>(i)].color);
        double ex = report.est_vx[i], ey = report.est_vy[i];
        double len = std::hypot(ex, ey) * scale;
        if (len <= 0.0) {
            out << "<circle cx=\"" << cx << "\" cy=\"" << cy
                << "\" r=\"1.6\" fill=\"" << hex << "\"/>\n";
            continue;
        }
        double ux = ex / std::hypot(ex, ey);
        double uy = -ey / std::hypot(ex, ey);
        double x2 = cx + ux * len;
        double y2 = cy + uy * len;
        double head = std::min(5.0, 0.4 * len);
        const double ca = std::cos(kPi * 150.0 / 180.0), sa = std::sin(kPi * 150.0 / 180.0);
        double lx = x2 + head * (ux * ca - uy * sa);
        double ly = y2 + head * (ux * sa + uy * ca);
        double rx = x2 + head * (ux * ca + uy * sa);
        double ry = y2 + head * (-ux * sa + uy * ca);
        out << "<line x1=\"" << cx << "\" y1=\"" << cy << "\" x2=\"" << x2 << "\" y2=\""
            << y2 << "\" stroke=\"" << hex << "\" stroke-width=\"1.4\"/>\n";
        out << "<polyline points=\"" << lx << ',' << ly << ' ' << x2 << ',' << y2 << ' '
            << rx << ',' << ry << "\" fill=\"none\" stroke=\"" << hex
            << "\" stroke-width=\"1.4\"/>\n";
    }

    double ly = h - 10.0;
    out << "<text x=\"" << margin << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << "<tspan fill=\"#1f5bd8\">blue &#8804;15&#176;</tspan>  "
        << "<tspan fill=\"#111111\">black &#8804;30&#176;</tspan>  "
        << "<tspan fill=\"#d4a800\">yellow &#8804;45&#176;</tspan>  "
        << "<tspan fill=\"#cc2222\">red &gt;45&#176;</tspan>  "
        << "<tspan fill=\"#999999\">gray: no defined angle</tspan></text>\n";
    out << "</svg>\n";
    finish(out, path);
}

}  // namespace gridlearn
