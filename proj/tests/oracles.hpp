#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace hetcorr::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0,
                              double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline double tv_obj(const VectorXd& z, const VectorXd& v, double lambda) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += 0.5 * (z(i) - v(i)) * (z(i) - v(i));
  for (Eigen::Index i = 1; i < z.size(); ++i) s += lambda * std::abs(v(i) - v(i - 1));
  return s;
}

struct TvOracleResult {
  VectorXd v;
  double objective = std::numeric_limits<double>::infinity();
};

/// Exhaustive stationarity enumeration for 0.5||z - v||^2 + lambda sum |v_j - v_{j-1}|.
/// Each boundary between neighbours is fused, an upward jump or a downward jump
/// (3^(n-1) patterns). For a fixed pattern the block values solve
/// |B| v_B = sum(z_B) - lambda * s_left + lambda * s_right, which is the exact stationary point
/// when the pattern is the optimal one; every candidate is a feasible vector, so the minimum
/// objective over candidates is the global optimum.
inline TvOracleResult tv_bruteforce(const VectorXd& z, double lambda) {
  const int n = static_cast<int>(z.size());
  TvOracleResult best;
  if (n == 0) {
    best.v = z;
    best.objective = 0.0;
    return best;
  }
  int patterns = 1;
  for (int i = 0; i < n - 1; ++i) patterns *= 3;
  std::vector<int> code(static_cast<std::size_t>(std::max(n - 1, 0)));
  VectorXd v(n);
  for (int p = 0; p < patterns; ++p) {
    int rem = p;
    for (int i = 0; i < n - 1; ++i) {
      code[static_cast<std::size_t>(i)] = rem % 3;  // 0 fused, 1 up, 2 down
      rem /= 3;
    }
    int start = 0;
    double s_left = 0.0;
    while (start < n) {
      int end = start;
      while (end < n - 1 && code[static_cast<std::size_t>(end)] == 0) ++end;
      double s_right = 0.0;
      if (end < n - 1) s_right = code[static_cast<std::size_t>(end)] == 1 ? 1.0 : -1.0;
      double sum = 0.0;
      for (int i = start; i <= end; ++i) sum += z(i);
      const double val = (sum - lambda * s_left + lambda * s_right) / static_cast<double>(end - start + 1);
      for (int i = start; i <= end; ++i) v(i) = val;
      s_left = s_right;
      start = end + 1;
    }
    const double obj = tv_obj(z, v, lambda);
    if (obj < best.objective) {
      best.objective = obj;
      best.v = v;
    }
  }
  return best;
}

/// Mean of squared differences over all cells by an explicit double loop.
inline double naive_full_mse(const MatrixXd& a, const MatrixXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  return s / static_cast<double>(a.size());
}

struct DenseAcSolution {
  VectorXd a;
  VectorXd b;
  double objective = 0.0;
};

/// Weighted least squares for sum w (a_i + b_t - r)^2 with w = 1 / Y^2 from the full
/// (N T) x (N + T) design, minimum-norm solve, then shifted to mean(b) = 0.
inline DenseAcSolution ac_dense_oracle(const MatrixXd& x, const MatrixXd& y) {
  const Eigen::Index N = x.rows();
  const Eigen::Index T = x.cols();
  MatrixXd design = MatrixXd::Zero(N * T, N + T);
  VectorXd rhs(N * T);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index i = 0; i < N; ++i) {
      const Eigen::Index row = t * N + i;
      const double sw = 1.0 / std::abs(y(i, t));
      design(row, i) = sw;
      design(row, N + t) = sw;
      rhs(row) = sw * (y(i, t) - x(i, t));
    }
  const VectorXd theta = design.completeOrthogonalDecomposition().solve(rhs);
  DenseAcSolution s;
  s.a = theta.head(N);
  s.b = theta.tail(T);
  const double shift = s.b.mean();
  s.b.array() -= shift;
  s.a.array() += shift;
  s.objective = (design * theta - rhs).squaredNorm();
  return s;
}

}  // namespace hetcorr::oracle
