#pragma once

// Proximal operator of lambda * sum_j |v_j - v_{j-1}| (1-D total variation denoising).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hetcorr/core.hpp"

namespace hetcorr {

enum class TvSolver { direct, admm };

/// 0.5 * ||z - v||^2 + lambda * sum |v_j - v_{j-1}|.
inline double tv_objective(const VectorXd& z, const VectorXd& v, double lambda) {
  double tv = 0.0;
  for (Index j = 1; j < v.size(); ++j) tv += std::abs(v(j) - v(j - 1));
  return 0.5 * (z - v).squaredNorm() + lambda * tv;
}

namespace detail {

// Direct (taut-string type) scan: each segment keeps bounds [vmin, vmax] on its level and the
// running dual values; a jump is emitted as soon as the dual leaves [-lambda, lambda].
inline void tv_denoise_direct(const double* in, double* out, Index n, double lambda) {
  if (n <= 0) return;
  Index k = 0;
  Index k0 = 0;
  Index kplus = 0;
  Index kminus = 0;
  double umin = lambda;
  double umax = -lambda;
  double vmin = in[0] - lambda;
  double vmax = in[0] + lambda;
  const double twolambda = 2.0 * lambda;
  const double minlambda = -lambda;
  for (;;) {
    while (k == n - 1) {
      if (umin < 0.0) {
        do out[k0++] = vmin;
        while (k0 <= kminus);
        umax = (vmin = in[kminus = k = k0]) + (umin = lambda) - vmax;
      } else if (umax > 0.0) {
        do out[k0++] = vmax;
        while (k0 <= kplus);
        umin = (vmax = in[kplus = k = k0]) + (umax = minlambda) - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        do out[k0++] = vmin;
        while (k0 <= k);
        return;
      }
    }
    if ((umin += in[k + 1] - vmin) < minlambda) {
      do out[k0++] = vmin;
      while (k0 <= kminus);
      vmax = (vmin = in[kplus = kminus = k = k0]) + twolambda;
      umin = lambda;
      umax = minlambda;
    } else if ((umax += in[k + 1] - vmax) > lambda) {
      do out[k0++] = vmax;
      while (k0 <= kplus);
      vmin = (vmax = in[kplus = kminus = k = k0]) - twolambda;
      umin = lambda;
      umax = minlambda;
    } else {
      ++k;
      if (umin >= lambda) {
        vmin += (umin - lambda) / static_cast<double>((kminus = k) - k0 + 1);
        umin = lambda;
      }
      if (umax <= minlambda) {
        vmax += (umax + lambda) / static_cast<double>((kplus = k) - k0 + 1);
        umax = minlambda;
      }
    }
  }
}

}  // namespace detail

struct AdmmOptions {
  double rho = 1.0;
  double abs_tol = 1e-12;
  int max_iter = 100000;
};

/// ADMM on v, w = Dv with D the first-difference operator. Each v-update is a
/// tridiagonal solve of (I + rho D^T D) v = z + rho D^T (w - u).
inline VectorXd solve_tv_1d_admm(const VectorXd& z, double lambda, const AdmmOptions& opt = {}) {
  const Index n = z.size();
  if (n <= 1 || lambda == 0.0) return z;
  const double rho = opt.rho;
  const Index m = n - 1;

  // Tridiagonal system: diag 1 + rho * (1 or 2), off-diagonal -rho. Factor once (Thomas algorithm).
  std::vector<double> diag(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) diag[i] = 1.0 + rho * ((i == 0 || i == n - 1) ? 1.0 : 2.0);
  const double off = -rho;
  std::vector<double> cprime(static_cast<std::size_t>(n));
  std::vector<double> denom(static_cast<std::size_t>(n));
  denom[0] = diag[0];
  cprime[0] = off / denom[0];
  for (Index i = 1; i < n; ++i) {
    denom[i] = diag[i] - off * cprime[i - 1];
    cprime[i] = off / denom[i];
  }

  VectorXd v = z;
  VectorXd w = VectorXd::Zero(m);
  VectorXd u = VectorXd::Zero(m);
  VectorXd rhs(n);
  VectorXd dv(m);
  for (int it = 0; it < opt.max_iter; ++it) {
    // rhs = z + rho * D^T (w - u); (D^T y)_i = y_{i-1} - y_i.
    for (Index i = 0; i < n; ++i) {
      double dt = 0.0;
      if (i > 0) dt += w(i - 1) - u(i - 1);
      if (i < m) dt -= w(i) - u(i);
      rhs(i) = z(i) + rho * dt;
    }
    rhs(0) /= denom[0];
    for (Index i = 1; i < n; ++i) rhs(i) = (rhs(i) - off * rhs(i - 1)) / denom[i];
    for (Index i = n - 2; i >= 0; --i) rhs(i) -= cprime[i] * rhs(i + 1);
    v = rhs;

    for (Index i = 0; i < m; ++i) dv(i) = v(i + 1) - v(i);
    const VectorXd w_old = w;
    const double thr = lambda / rho;
    for (Index i = 0; i < m; ++i) {
      const double a = dv(i) + u(i);
      w(i) = a > thr ? a - thr : (a < -thr ? a + thr : 0.0);
    }
    u += dv - w;
    const double primal = (dv - w).norm();
    const double dual = rho * (w - w_old).norm();
    if (primal <= opt.abs_tol * std::sqrt(static_cast<double>(m)) &&
        dual <= opt.abs_tol * std::sqrt(static_cast<double>(n)))
      break;
  }
  return v;
}

/// Exact minimiser of 0.5 ||z - v||^2 + lambda * sum |v_j - v_{j-1}|.
inline VectorXd solve_tv_1d(const VectorXd& z, double lambda, TvSolver solver = TvSolver::direct) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be a finite nonnegative number");
  for (Index i = 0; i < z.size(); ++i)
    if (!std::isfinite(z(i))) throw DomainError("non-finite input at index " + std::to_string(i));
  if (z.size() <= 1 || lambda == 0.0) return z;
  if (solver == TvSolver::admm) return solve_tv_1d_admm(z, lambda);
  VectorXd v(z.size());
  detail::tv_denoise_direct(z.data(), v.data(), z.size(), lambda);
  return v;
}

}  // namespace hetcorr
