#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "scle/core.hpp"

namespace scle {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer over (master, stream): independent per-stream seeds.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

/// Fills `out` (rows = draws) with N(mean, L L') vectors from `rng`.
void fill_mvn(const Vector& mean, const Matrix& lower, Rng& rng, RowMatrix& out);

/// Lower Cholesky factor of a PD matrix; ErrorKind::Model on failure.
Matrix cholesky_lower(const Matrix& cov);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
/// runs exactly once; callers write results into per-index slots.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace scle
