#pragma once
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace gridlearn {

// Deterministic Gaussian source. std::normal_distribution's algorithm is
// implementation-defined, so the Box-Muller transform is done by hand; the
// output sequence is fixed by the mt19937_64 stream and nothing else.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in (0, 1]; never returns 0 so log() below is safe.
    double uniform_pos() {
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform_pos();
        double mag = std::sqrt(-2.0 * std::log(u1));
        double ang = 2.0 * M_PI * u2;
        spare_ = mag * std::sin(ang);
        has_spare_ = true;
        return mag * std::cos(ang);
    }

    // Column-major fill order, so the draw sequence matches storage order.
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r)
                m(r, c) = normal();
        return m;
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gridlearn
