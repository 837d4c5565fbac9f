#pragma once

// Clamped uniform B-spline bases (Cox-de Boor recursion) and the reduced-rank regression fit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hetcorr/bounded_rank.hpp"
#include "hetcorr/core.hpp"

namespace hetcorr {

/// Values of all degree-`degree` basis functions at `x`. Terms with a zero-width denominator are 0.
/// For x equal to the last knot the last non-degenerate span is treated as closed.
inline std::vector<double> bspline_values(std::span<const double> knots, int degree, double x) {
  const std::size_t nk = knots.size();
  if (nk < static_cast<std::size_t>(degree) + 2) throw ArgumentError("too few knots for the requested degree");
  const std::size_t nbasis = nk - static_cast<std::size_t>(degree) - 1;

  std::vector<double> s(nk - 1, 0.0);
  for (std::size_t i = 0; i + 1 < nk; ++i)
    if (knots[i] <= x && x < knots[i + 1]) s[i] = 1.0;
  if (x == knots[nk - 1]) {
    for (std::size_t i = nk - 1; i-- > 0;) {
      if (knots[i] < knots[i + 1]) {
        s[i] = 1.0;
        break;
      }
    }
  }

  for (int k = 1; k <= degree; ++k) {
    const std::size_t count = nk - 1 - static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < count; ++i) {
      double left = 0.0;
      const double dl = knots[i + k] - knots[i];
      if (dl > 0.0) left = (x - knots[i]) / dl * s[i];
      double right = 0.0;
      const double dr = knots[i + k + 1] - knots[i + 1];
      if (dr > 0.0) right = (knots[i + k + 1] - x) / dr * s[i + 1];
      s[i] = left + right;
    }
  }
  s.resize(nbasis);
  return s;
}

/// L x T matrix of basis values at days 1..T.
inline MatrixXd evaluate_spline_basis(std::span<const double> knots, int degree, Index num_times) {
  const Index nbasis = static_cast<Index>(knots.size()) - degree - 1;
  MatrixXd C(nbasis, num_times);
  for (Index t = 0; t < num_times; ++t) {
    const std::vector<double> col = bspline_values(knots, degree, static_cast<double>(t + 1));
    for (Index i = 0; i < nbasis; ++i) C(i, t) = col[static_cast<std::size_t>(i)];
  }
  return C;
}

/// Clamped uniform knots over the day axis [1, T + 1): interior knots at 1 + j h and boundary
/// knots repeated degree + 1 times, so day t falls in the span starting at 1 + floor((t-1)/h) h.
/// When degree >= 1 and the final span would hold a single day, that span is merged into its
/// neighbour so every basis function is positive on at least one day.
inline std::vector<double> uniform_clamped_knots(Index num_times, int degree, int knot_interval_days) {
  const Index h = knot_interval_days;
  Index spans = (num_times + h - 1) / h;
  if (degree >= 1 && spans > 1 && num_times - (spans - 1) * h == 1) --spans;

  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(spans + 2 * degree + 1));
  for (int r = 0; r < degree; ++r) knots.push_back(1.0);
  for (Index j = 0; j < spans; ++j) knots.push_back(static_cast<double>(1 + j * h));
  const double end = static_cast<double>(num_times + 1);
  for (int r = 0; r <= degree; ++r) knots.push_back(end);
  return knots;
}

inline SplineBasis build_spline_basis(Index num_times, int degree, int knot_interval_days) {
  if (num_times < 2) throw ArgumentError("spline basis needs at least two time points");
  if (degree < 0) throw ArgumentError("spline degree must be nonnegative");
  if (knot_interval_days < 1) throw ArgumentError("knot interval must be at least one day");
  if (knot_interval_days > num_times)
    throw ArgumentError("knot interval " + std::to_string(knot_interval_days) + " exceeds series length " +
                        std::to_string(num_times));
  SplineBasis basis;
  basis.degree = degree;
  basis.knots = uniform_clamped_knots(num_times, degree, knot_interval_days);
  basis.C = evaluate_spline_basis(basis.knots, degree, num_times);
  return basis;
}

/// Same knots, restricted to the listed day columns (0-based).
inline SplineBasis restrict_columns(const SplineBasis& basis, std::span<const Index> columns) {
  SplineBasis out;
  out.degree = basis.degree;
  out.knots = basis.knots;
  out.C.resize(basis.C.rows(), static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.C.col(static_cast<Index>(j)) = basis.C.col(columns[j]);
  return out;
}

struct SplineFitOptions {
  // Tikhonov term added to C C^T. Zero means a rank-deficient basis is an error.
  double ridge = 0.0;
};

/// Least-squares coefficients M (N x L) of D on the rows of C: M = D C^T (C C^T + ridge I)^{-1},
/// computed from a QR factorisation of C^T (augmented with sqrt(ridge) I when ridge > 0).
inline MatrixXd spline_ols(const MatrixXd& d, const MatrixXd& C, double ridge = 0.0) {
  const Index L = C.rows();
  const Index T = C.cols();
  if (ridge > 0.0) {
    MatrixXd design(T + L, L);
    design.topRows(T) = C.transpose();
    design.bottomRows(L) = std::sqrt(ridge) * MatrixXd::Identity(L, L);
    MatrixXd rhs = MatrixXd::Zero(T + L, d.rows());
    rhs.topRows(T) = d.transpose();
    return Eigen::HouseholderQR<MatrixXd>(design).solve(rhs).transpose();
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(C.transpose());
  if (qr.rank() < L)
    throw NumericalError("spline transformation matrix has rank " + std::to_string(qr.rank()) + " < " +
                         std::to_string(L) + "; C C^T is singular. Use a larger knot interval or a ridge jitter");
  return qr.solve(d.transpose()).transpose();
}

/// Reduced-rank regression of D on the spline basis: A = U_K, B^T = U_K^T M with U_K the top-K
/// left singular vectors of the least-squares fit M C.
inline CorrectionModel fit_basis_spline(const MatrixXd& d, const SplineBasis& basis, Index rank,
                                        const SplineFitOptions& opt = {}) {
  const MatrixXd& C = basis.C;
  if (C.cols() != d.cols())
    throw ShapeError("time axis: matrix has " + std::to_string(d.cols()) + " columns, basis has " +
                     std::to_string(C.cols()));
  const Index max_rank = std::min(d.rows(), C.rows());
  if (rank < 0 || rank > max_rank)
    throw ArgumentError("rank " + std::to_string(rank) + " outside [0, " + std::to_string(max_rank) + "]");

  CorrectionModel model;
  model.method = Method::basis_spline;
  model.hyper.rank = static_cast<int>(rank);
  model.hyper.spline_degree = basis.degree;
  model.spline = basis;

  const MatrixXd M = spline_ols(d, C, opt.ridge);
  if (rank == 0) {
    model.A = MatrixXd(d.rows(), 0);
    model.B = MatrixXd(C.rows(), 0);
    model.objective_value = d.squaredNorm();
    return model;
  }
  const MatrixXd fitted = M * C;
  ThinSvd svd = thin_svd(fitted);
  model.A = svd.U.leftCols(rank);
  model.B = M.transpose() * model.A;
  canonicalize_signs(model.A, model.B);
  model.objective_value = (d - model.correction()).squaredNorm();
  return model;
}

inline CorrectionModel fit_basis_spline(const SignalMatrix& d, const SplineBasis& basis, Index rank,
                                        const SplineFitOptions& opt = {}) {
  CorrectionModel model = fit_basis_spline(d.values(), basis, rank, opt);
  model.scale = d.scale();
  return model;
}

/// K(N + L - 1).
inline std::int64_t dof_basis_spline(const CorrectionModel& model) {
  if (model.method != Method::basis_spline || !model.spline)
    throw ArgumentError("dof_basis_spline requires a basis spline model");
  const std::int64_t k = model.rank();
  return k * (model.num_locations() + model.spline->size() - 1);
}

}  // namespace hetcorr
