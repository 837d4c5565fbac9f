#pragma once

#include <algorithm>
#include <string>

#include "hetcorr/core.hpp"

namespace hetcorr {

/// Thin SVD with singular values in decreasing order.
struct ThinSvd {
  MatrixXd U;
  VectorXd singular_values;
  MatrixXd V;
};

inline ThinSvd thin_svd(const MatrixXd& m) {
  if (m.size() == 0) return {MatrixXd(m.rows(), 0), VectorXd(0), MatrixXd(m.cols(), 0)};
  Eigen::BDCSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

inline VectorXd singular_values(const MatrixXd& m) {
  if (m.size() == 0) return VectorXd(0);
  return Eigen::BDCSVD<MatrixXd>(m).singularValues();
}

/// Best rank-K Frobenius approximation of `d`: A = U_K S_K, B = V_K.
inline CorrectionModel fit_bounded_rank(const MatrixXd& d, Index rank) {
  const Index max_rank = std::min(d.rows(), d.cols());
  if (rank < 0 || rank > max_rank)
    throw ArgumentError("rank " + std::to_string(rank) + " outside [0, " + std::to_string(max_rank) + "]");

  CorrectionModel model;
  model.method = Method::bounded_rank;
  model.hyper.rank = static_cast<int>(rank);
  if (rank == 0) {
    model.A = MatrixXd(d.rows(), 0);
    model.B = MatrixXd(d.cols(), 0);
    model.objective_value = d.squaredNorm();
    return model;
  }
  ThinSvd svd = thin_svd(d);
  model.A = svd.U.leftCols(rank) * svd.singular_values.head(rank).asDiagonal();
  model.B = svd.V.leftCols(rank);
  canonicalize_signs(model.A, model.B);
  model.objective_value = (d - model.A * model.B.transpose()).squaredNorm();
  return model;
}

inline CorrectionModel fit_bounded_rank(const SignalMatrix& d, Index rank) {
  CorrectionModel model = fit_bounded_rank(d.values(), rank);
  model.scale = d.scale();
  return model;
}

}  // namespace hetcorr
