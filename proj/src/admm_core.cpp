#include "gridlearn/admm_core.hpp"

#include <cmath>

#include "gridlearn/errors.hpp"

namespace gridlearn {

double soft_threshold(double v, double kappa) {
    double m = std::abs(v) - kappa;
    return m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
}

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& v, double kappa) {
    if (kappa < 0.0) throw ConfigError("soft_threshold needs kappa >= 0");
    return v.array().sign() * (v.array().abs() - kappa).max(0.0);
}

double nonneg_project(double h) { return h > 0.0 ? h : 0.0; }

Eigen::MatrixXd nonneg_project(const Eigen::MatrixXd& h) {
    return h.array().max(0.0);
}

double box_project(double a, double w, double lambda) {
    if (a - w > lambda) return w + lambda;
    if (w - a > lambda) return w - lambda;
    return a;
}

Eigen::MatrixXd box_project(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w,
                            double lambda) {
    if (lambda < 0.0) throw ConfigError("box_project needs lambda >= 0");
    return a.array().min(w.array() + lambda).max(w.array() - lambda);
}

double power_lambda_max(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw ConfigError("power iteration needs a nonempty square matrix");
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows());
    v /= v.norm();
    double lambda = 0.0;
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd w = m * v;
        double norm = w.norm();
        if (norm == 0.0) return 0.0;
        w /= norm;
        double next = w.dot(m * w);
        bool done = std::abs(next - lambda) <= 1e-8 * std::max(1.0, std::abs(next));
        lambda = next;
        v = std::move(w);
        if (done) break;
    }
    if (!std::isfinite(lambda))
        throw NumericError("power iteration diverged");
    return lambda;
}

double auto_eta(double rho, const Eigen::MatrixXd& chat) {
    double lmax = power_lambda_max(chat);
    return 1.05 * rho * lmax * lmax;
}

}  // namespace gridlearn
