#pragma once

// Rank-K penalized matrix decomposition with a fused-lasso penalty on the temporal factors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "hetcorr/bounded_rank.hpp"
#include "hetcorr/core.hpp"
#include "hetcorr/tv.hpp"

namespace hetcorr {

struct FusedLassoOptions {
  double tol = 1e-6;   // on ||v_new - v_old||_2
  int max_iter = 200;
  TvSolver tv_solver = TvSolver::direct;
};

/// Working state of one deflation step.
struct PmdState {
  MatrixXd Z;  // deflated residual
  VectorXd u;  // unit left vector (zero for a null component)
  VectorXd v;  // unit temporal vector (zero for a null component)
  double d = 0.0;
  int k = 0;
  int iterations = 0;
  bool converged = false;

  bool is_null() const { return d == 0.0 && (u.size() == 0 || u.isZero(0.0)); }
};

namespace detail {

inline PmdState null_component(PmdState state) {
  state.u = VectorXd::Zero(state.Z.rows());
  state.v = VectorXd::Zero(state.Z.cols());
  state.d = 0.0;
  state.converged = true;
  return state;
}

// Right factor update: TV prox of Z^T u, rescaled to unit norm. Returns false if it vanishes.
inline bool update_right(const MatrixXd& Z, const VectorXd& u, double lambda, TvSolver solver, VectorXd& v) {
  const VectorXd ztu = Z.transpose() * u;
  VectorXd next = solve_tv_1d(ztu, lambda, solver);
  const double nrm = next.norm();
  if (!(nrm > 1e-14 * std::max(1.0, ztu.norm()))) return false;
  v = next / nrm;
  return true;
}

}  // namespace detail

/// Fits one rank-1 component of `state.Z` by alternating u <- Zv/||Zv||, v <- prox(Z^T u).
/// v starts from the top right singular vector of Z. On return d = u^T Z v with u recomputed
/// from the final v, so d = ||Zv|| >= 0.
inline PmdState pmd_component(PmdState state, double lambda, const FusedLassoOptions& opt = {}) {
  const MatrixXd& Z = state.Z;
  state.iterations = 0;
  state.converged = false;
  if (Z.size() == 0 || Z.isZero(0.0)) return detail::null_component(std::move(state));

  ThinSvd svd = thin_svd(Z);
  if (!(svd.singular_values(0) > 0.0)) return detail::null_component(std::move(state));
  VectorXd v = svd.V.col(0);
  VectorXd u(Z.rows());

  for (int it = 0; it < opt.max_iter; ++it) {
    const VectorXd zv = Z * v;
    const double zn = zv.norm();
    if (!(zn > 0.0)) return detail::null_component(std::move(state));
    u = zv / zn;
    VectorXd next;
    if (!detail::update_right(Z, u, lambda, opt.tv_solver, next)) {
      state.iterations = it + 1;
      return detail::null_component(std::move(state));
    }
    const double change = (next - v).norm();
    v = std::move(next);
    state.iterations = it + 1;
    if (change <= opt.tol) {
      state.converged = true;
      break;
    }
  }

  const VectorXd zv = Z * v;
  const double zn = zv.norm();
  if (!(zn > 0.0)) return detail::null_component(std::move(state));
  state.u = zv / zn;
  state.v = std::move(v);
  state.d = zn;
  return state;
}

/// Greedy deflation: K calls to pmd_component with Z^{k+1} = Z^k - d_k u_k v_k^T.
/// A(:, k) = d_k u_k, B(:, k) = v_k.
inline CorrectionModel fit_fused_lasso(const MatrixXd& d, Index rank, double lambda,
                                       const FusedLassoOptions& opt = {}) {
  const Index max_rank = std::min(d.rows(), d.cols());
  if (rank < 0 || rank > max_rank)
    throw ArgumentError("rank " + std::to_string(rank) + " outside [0, " + std::to_string(max_rank) + "]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be a finite nonnegative number");

  CorrectionModel model;
  model.method = Method::fused_lasso;
  model.hyper.rank = static_cast<int>(rank);
  model.hyper.lambda = lambda;
  model.A = MatrixXd::Zero(d.rows(), rank);
  model.B = MatrixXd::Zero(d.cols(), rank);

  PmdState state;
  state.Z = d;
  for (Index k = 0; k < rank; ++k) {
    state.k = static_cast<int>(k);
    state = pmd_component(std::move(state), lambda, opt);
    if (state.d > 0.0) {
      model.A.col(k) = state.d * state.u;
      model.B.col(k) = state.v;
      state.Z.noalias() -= state.d * state.u * state.v.transpose();
    }
  }
  canonicalize_signs(model.A, model.B);

  double tv = 0.0;
  if (model.B.rows() > 1)
    tv = (model.B.bottomRows(model.B.rows() - 1) - model.B.topRows(model.B.rows() - 1)).cwiseAbs().sum();
  model.objective_value = state.Z.squaredNorm() + lambda * tv;
  return model;
}

inline CorrectionModel fit_fused_lasso(const SignalMatrix& d, Index rank, double lambda,
                                       const FusedLassoOptions& opt = {}) {
  CorrectionModel model = fit_fused_lasso(d.values(), rank, lambda, opt);
  model.scale = d.scale();
  return model;
}

/// Count of first differences of B along time with |delta| > zero_tol.
inline std::int64_t count_jumps(const MatrixXd& B, double zero_tol = 1e-8) {
  std::int64_t jumps = 0;
  for (Index k = 0; k < B.cols(); ++k)
    for (Index t = 1; t < B.rows(); ++t)
      if (std::abs(B(t, k) - B(t - 1, k)) > zero_tol) ++jumps;
  return jumps;
}

/// K(N - 1) + ||Delta_t B||_0.
inline std::int64_t dof_fused_lasso(const CorrectionModel& model, double zero_tol = 1e-8) {
  if (model.method != Method::fused_lasso) throw ArgumentError("dof_fused_lasso requires a fused lasso model");
  const std::int64_t k = model.rank();
  const std::int64_t n = model.num_locations();
  return k * (n - 1) + count_jumps(model.B, zero_tol);
}

}  // namespace hetcorr
