#pragma once

// Synthetic difference matrices D = C + noise with C = A B^T low rank and piecewise constant in time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hetcorr/bounded_rank.hpp"
#include "hetcorr/core.hpp"
#include "hetcorr/random.hpp"

namespace hetcorr {

struct SimulationSpec {
  Index N = 51;
  Index T = 699;
  Index true_rank = 5;
  Index pieces = 10;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (N < 1 || T < 1) throw ArgumentError("simulation dimensions must be positive");
    if (pieces < 1) throw ArgumentError("pieces must be at least 1");
    if (pieces > T) throw ArgumentError("cannot split " + std::to_string(T) + " days into " +
                                        std::to_string(pieces) + " pieces");
    if (true_rank < 0 || true_rank > std::min(N, T)) throw ArgumentError("true rank outside [0, min(N, T)]");
    if (!(noise_sigma >= 0.0)) throw ArgumentError("noise sigma must be nonnegative");
  }
};

struct SimulatedInstance {
  SignalMatrix D;
  MatrixXd C_true;  // normalised signal
  MatrixXd A_true;  // N x K, scaled so that A_true * B_true^T == C_true
  MatrixXd B_true;  // T x K, piecewise constant columns
  SimulationSpec spec;
};

/// Draw order: A column-major, then per column of B its breakpoints and levels, then the noise
/// column-major. A_true absorbs the normalising factor.
inline SimulatedInstance simulate_difference(const SimulationSpec& spec, Date start = default_start_date()) {
  spec.validate();
  Rng rng(spec.seed);
  const Index N = spec.N;
  const Index T = spec.T;
  const Index K = spec.true_rank;

  MatrixXd A(N, K);
  for (Index k = 0; k < K; ++k)
    for (Index i = 0; i < N; ++i) A(i, k) = rng.uniform(-1.0, 1.0);

  MatrixXd B(T, K);
  std::vector<Index> candidates(static_cast<std::size_t>(std::max<Index>(T - 1, 0)));
  for (Index k = 0; k < K; ++k) {
    // pieces - 1 distinct breakpoints from 1..T-1 via a partial Fisher-Yates shuffle.
    std::iota(candidates.begin(), candidates.end(), Index{1});
    const Index nbreaks = spec.pieces - 1;
    for (Index j = 0; j < nbreaks; ++j) {
      const auto pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(T - 1 - j)));
      std::swap(candidates[static_cast<std::size_t>(j)], candidates[static_cast<std::size_t>(j + pick)]);
    }
    std::vector<Index> bounds(candidates.begin(), candidates.begin() + nbreaks);
    std::sort(bounds.begin(), bounds.end());
    bounds.insert(bounds.begin(), 0);
    bounds.push_back(T);
    for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
      const double level = rng.uniform01();
      for (Index t = bounds[p]; t < bounds[p + 1]; ++t) B(t, k) = level;
    }
  }

  MatrixXd C = A * B.transpose();
  if (K > 0) {
    const double mean = C.mean();
    const double sd = std::sqrt((C.array() - mean).square().sum() / static_cast<double>(C.size()));
    if (sd > 0.0) {
      A /= sd;
      C = A * B.transpose();
    }
  }

  MatrixXd D = C;
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < N; ++i) D(i, t) += rng.normal(0.0, spec.noise_sigma);

  return {SignalMatrix::with_default_labels(std::move(D), start), std::move(C), std::move(A), std::move(B), spec};
}

/// Singular values of the signal C_true and of the noise D - C_true, each decreasing.
inline std::pair<VectorXd, VectorXd> signal_noise_singular_values(const SimulatedInstance& inst) {
  return {singular_values(inst.C_true), singular_values(inst.D.values() - inst.C_true)};
}

}  // namespace hetcorr
