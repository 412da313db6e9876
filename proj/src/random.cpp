#include "scle/random.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace scle {

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Matrix cholesky_lower(const Matrix& cov) {
    if (cov.rows() != cov.cols() || cov.rows() == 0) {
        fail(ErrorKind::Model, "covariance must be square and non-empty");
    }
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        fail(ErrorKind::Model, "covariance matrix is not positive definite");
    }
    return llt.matrixL();
}

void fill_mvn(const Vector& mean, const Matrix& lower, Rng& rng, RowMatrix& out) {
    const Eigen::Index d = lower.rows();
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(d);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index k = 0; k < d; ++k) {
            z[k] = normal(rng);
        }
        out.row(i) = (mean + lower.triangularView<Eigen::Lower>() * z).transpose();
    }
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace scle
