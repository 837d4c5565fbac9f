#pragma once

// Rank-1 and two-way additive comparison models for checking the multiplicative assumption.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hetcorr/bounded_rank.hpp"
#include "hetcorr/core.hpp"

namespace hetcorr {

/// Per-location effect a_i plus per-day effect b_t, with mean(b) = 0.
struct AdditiveFactors {
  VectorXd a;
  VectorXd b;
  Scale space = Scale::log;
  double objective_value = 0.0;
  int sweeps = 0;

  MatrixXd correction() const {
    return a * VectorXd::Ones(b.size()).transpose() + VectorXd::Ones(a.size()) * b.transpose();
  }
  /// N + T parameters with one redundancy.
  std::int64_t dof() const { return static_cast<std::int64_t>(a.size() + b.size()) - 1; }
};

/// Rank-1 bounded rank model on log X, log Y.
inline CorrectionModel fit_br1(const SignalMatrix& log_x, const SignalMatrix& log_y) {
  return fit_bounded_rank(residual_matrix(log_x, log_y), 1);
}

/// Closed-form two-way additive least squares: b_t = colmean(D) - mean(D), a_i = rowmean(D).
inline AdditiveFactors fit_al(const MatrixXd& log_x, const MatrixXd& log_y) {
  if (log_x.rows() != log_y.rows() || log_x.cols() != log_y.cols()) throw ShapeError("fit_al: shapes differ");
  const MatrixXd d = log_y - log_x;
  AdditiveFactors f;
  f.space = Scale::log;
  f.a = d.rowwise().mean();
  f.b = d.colwise().mean().transpose().array() - d.mean();
  f.objective_value = (d - f.correction()).squaredNorm();
  return f;
}

inline AdditiveFactors fit_al(const SignalMatrix& log_x, const SignalMatrix& log_y) {
  check_aligned(log_x, log_y);
  return fit_al(log_x.values(), log_y.values());
}

struct AcOptions {
  double tol = 1e-10;        // on the objective decrease per sweep, relative to (1 + objective)
  double step_tol = 1e-13;   // on the largest parameter change per sweep, relative to (1 + max |param|)
  int max_sweeps = 1000000;
};

/// sum_{i,t} ((X + a_i + b_t) / Y - 1)^2 = sum w (a_i + b_t - (Y - X))^2 with w = 1 / Y^2,
/// by alternating exact block updates of a and b. Stops once both the objective decrease and
/// the parameter step of a sweep are below tolerance; the objective alone flattens out long
/// before the parameters settle when the weights are small.
inline AdditiveFactors fit_ac(const MatrixXd& x, const MatrixXd& y, const AcOptions& opt = {}) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw ShapeError("fit_ac: shapes differ");
  for (Index t = 0; t < y.cols(); ++t)
    for (Index i = 0; i < y.rows(); ++i)
      if (!(y(i, t) != 0.0))
        throw DomainError("guide value 0 at row " + std::to_string(i) + ", column " + std::to_string(t) +
                          "; the count-space additive model needs nonzero guides (add a pseudocount)");
  const Index N = x.rows();
  const Index T = x.cols();
  const MatrixXd r = y - x;
  const MatrixXd w = y.array().square().inverse().matrix();
  const MatrixXd wr = w.cwiseProduct(r);
  const VectorXd wr_rows = wr.rowwise().sum();
  const VectorXd wr_cols = wr.colwise().sum().transpose();
  const VectorXd row_w = w.rowwise().sum();
  const VectorXd col_w = w.colwise().sum().transpose();

  AdditiveFactors f;
  f.space = Scale::linear;
  f.a = VectorXd::Zero(N);
  f.b = VectorXd::Zero(T);
  auto objective = [&] {
    double s = 0.0;
    for (Index t = 0; t < T; ++t)
      for (Index i = 0; i < N; ++i) {
        const double e = f.a(i) + f.b(t) - r(i, t);
        s += w(i, t) * e * e;
      }
    return s;
  };
  double prev = objective();
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    VectorXd a = (wr_rows - w * f.b).cwiseQuotient(row_w);
    VectorXd b = (wr_cols - w.transpose() * a).cwiseQuotient(col_w);
    const double step = std::max((a - f.a).cwiseAbs().maxCoeff(), (b - f.b).cwiseAbs().maxCoeff());
    f.a = std::move(a);
    f.b = std::move(b);
    const double scale = 1.0 + std::max(f.a.cwiseAbs().maxCoeff(), f.b.cwiseAbs().maxCoeff());
    const double obj = objective();
    f.sweeps = sweep;
    const double change = prev - obj;
    prev = obj;
    if (change <= opt.tol * (1.0 + obj) && step <= opt.step_tol * scale) break;
  }
  const double shift = f.b.mean();
  f.b.array() -= shift;
  f.a.array() += shift;
  f.objective_value = objective();
  return f;
}

inline AdditiveFactors fit_ac(const SignalMatrix& x, const SignalMatrix& y, const AcOptions& opt = {}) {
  check_aligned(x, y);
  return fit_ac(x.values(), y.values(), opt);
}

struct BaselineRow {
  std::string model;  // "BR-1", "AL" or "AC"
  double mse = 0.0;   // mean over cells of (log Xt - log Y)^2 on the log(. + eps) scale
  double se = 0.0;    // sample sd of the squared errors / sqrt(N T)
  std::int64_t dof = 0;
};

struct BaselineReport {
  double pseudocount = 1.0;
  std::vector<BaselineRow> rows;
};

namespace detail {

inline BaselineRow score_log_error(std::string name, const MatrixXd& err, std::int64_t dof) {
  const double n = static_cast<double>(err.size());
  const Eigen::ArrayXXd sq = err.array().square();
  const double mse = sq.mean();
  const double var = err.size() > 1 ? (sq - mse).square().sum() / (n - 1.0) : 0.0;
  return {std::move(name), mse, std::sqrt(var) / std::sqrt(n), dof};
}

}  // namespace detail

/// Fits BR-1 and AL on log(. + eps) and AC on the shifted counts X + eps, Y + eps, then scores
/// each by the MSE between log(Xt + eps) and log(Y + eps). AC corrected values are floored at eps.
inline BaselineReport compare_baselines(const SignalMatrix& x, const SignalMatrix& y, double eps) {
  check_aligned(x, y);
  if (!(eps >= 0.0)) throw ArgumentError("pseudocount must be nonnegative");
  const Index N = x.rows();
  const Index T = x.cols();
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < N; ++i)
      if (x.values()(i, t) < 0.0 || y.values()(i, t) < 0.0)
        throw DomainError("negative count at row " + std::to_string(i) + ", column " + std::to_string(t));

  const MatrixXd xs = x.values().array() + eps;
  const MatrixXd ys = y.values().array() + eps;
  if ((xs.array() <= 0.0).any() || (ys.array() <= 0.0).any())
    throw DomainError("zero counts present; use a positive pseudocount");
  const MatrixXd lx = xs.array().log().matrix();
  const MatrixXd ly = ys.array().log().matrix();

  BaselineReport report;
  report.pseudocount = eps;

  const CorrectionModel br1 = fit_bounded_rank(MatrixXd(ly - lx), std::min<Index>(1, std::min(N, T)));
  report.rows.push_back(detail::score_log_error("BR-1", lx + br1.correction() - ly, N + T - 1));

  const AdditiveFactors al = fit_al(lx, ly);
  report.rows.push_back(detail::score_log_error("AL", lx + al.correction() - ly, al.dof()));

  const AdditiveFactors ac = fit_ac(xs, ys);
  MatrixXd corrected = xs + ac.correction();
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < N; ++i) {
      if (corrected(i, t) < eps) corrected(i, t) = eps;
      if (!(corrected(i, t) > 0.0))
        throw DomainError("AC correction is nonpositive at row " + std::to_string(i) + ", column " +
                          std::to_string(t) + "; use a positive pseudocount");
    }
  report.rows.push_back(detail::score_log_error("AC", corrected.array().log().matrix() - ly, ac.dof()));
  return report;
}

}  // namespace hetcorr
