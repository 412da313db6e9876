#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "scle/core.hpp"

namespace testing_support {

using scle::Matrix;
using scle::Vector;

// Seeded generators for property tests. A separate engine from the library's
// so that test inputs never share a stream with library sampling.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(static_cast<std::uint32_t>(seed * 2654435761u + 17u)) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Matrix normal_matrix(int rows, int cols) {
        Matrix a(rows, cols);
        for (int j = 0; j < cols; ++j) {
            for (int i = 0; i < rows; ++i) {
                a(i, j) = normal();
            }
        }
        return a;
    }

    // Random PSD matrix of the given rank (full rank when rank >= m).
    Matrix psd(int m, int rank) {
        const Matrix f = normal_matrix(m, rank);
        Matrix g = f * f.transpose() / static_cast<double>(rank);
        if (rank >= m) {
            g.diagonal().array() += 0.05;
        }
        return 0.5 * (g + g.transpose());
    }

private:
    std::mt19937 rng_;
};

// Naive triple loop: (1/n) sum_i sum_a U_i(j, a) U_i(k, a).
inline Matrix naive_gram(const std::vector<Matrix>& per_obs) {
    const auto m = per_obs.front().rows();
    Matrix g = Matrix::Zero(m, m);
    for (const auto& u : per_obs) {
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index k = 0; k < m; ++k) {
                double s = 0.0;
                for (Eigen::Index a = 0; a < u.cols(); ++a) {
                    s += u(j, a) * u(k, a);
                }
                g(j, k) += s;
            }
        }
    }
    return g / static_cast<double>(per_obs.size());
}

// log density of a standard bivariate normal with correlation r.
inline double bvn_logpdf(double x, double y, double r) {
    const double a = 1.0 - r * r;
    return -std::log(2.0 * M_PI) - 0.5 * std::log(a) - (x * x + y * y - 2.0 * r * x * y) / (2.0 * a);
}

// Central difference of log f(x, y; exp(-theta * d)) in theta.
inline double pairwise_score_fd(double theta, double x, double y, double d, double h = 1e-5) {
    return (bvn_logpdf(x, y, std::exp(-(theta + h) * d)) - bvn_logpdf(x, y, std::exp(-(theta - h) * d))) /
           (2.0 * h);
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing_support
