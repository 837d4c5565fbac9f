#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "hetcorr/core.hpp"

namespace hetcorr {

enum class TransformKind { additive, multiplicative };

struct TransformSpec {
  TransformKind kind = TransformKind::additive;
  double pseudocount = 1.0;  // multiplicative only

  static TransformSpec additive() { return {TransformKind::additive, 0.0}; }
  static TransformSpec multiplicative(double eps = 1.0) { return {TransformKind::multiplicative, eps}; }
};

/// Identity for additive fits; log(x + eps) for multiplicative ones.
inline SignalMatrix to_fit_scale(const SignalMatrix& x, const TransformSpec& spec) {
  if (spec.kind == TransformKind::additive) return x;
  if (!(spec.pseudocount >= 0.0)) throw ArgumentError("pseudocount must be nonnegative");
  MatrixXd out(x.rows(), x.cols());
  for (Index t = 0; t < x.cols(); ++t) {
    for (Index i = 0; i < x.rows(); ++i) {
      const double v = x.values()(i, t);
      if (v < 0.0)
        throw DomainError("negative value " + std::to_string(v) + " at row " + std::to_string(i) + ", column " +
                          std::to_string(t) + " cannot be log-transformed");
      if (v + spec.pseudocount <= 0.0)
        throw DomainError("zero value at row " + std::to_string(i) + ", column " + std::to_string(t) +
                          " requires a positive pseudocount");
      out(i, t) = std::log(v + spec.pseudocount);
    }
  }
  return x.with_values(std::move(out), Scale::log);
}

struct BackTransformed {
  SignalMatrix values;
  std::size_t floored_cells = 0;  // cells raised to 0 after removing the pseudocount
};

/// Maps a correction fitted on the transformed scale back onto the original values.
/// Multiplicative: (X + eps) * exp(correction) - eps, so log(Xt + eps) = log(X + eps) + correction.
inline BackTransformed corrected_to_original_scale(const SignalMatrix& x_original, const CorrectionModel& model,
                                                   const TransformSpec& spec) {
  check_model_shape(x_original, model);
  if (spec.kind == TransformKind::additive) return {apply_correction(x_original, model), 0};

  const MatrixXd corr = model.correction();
  MatrixXd out(x_original.rows(), x_original.cols());
  std::size_t floored = 0;
  for (Index t = 0; t < out.cols(); ++t) {
    for (Index i = 0; i < out.rows(); ++i) {
      if (corr(i, t) == 0.0) {  // exact passthrough, avoids rounding in (x + eps) - eps
        out(i, t) = x_original.values()(i, t);
        continue;
      }
      const double shifted = x_original.values()(i, t) + spec.pseudocount;
      double v = shifted * std::exp(corr(i, t)) - spec.pseudocount;
      if (v < 0.0) {
        v = 0.0;
        ++floored;
      }
      out(i, t) = v;
    }
  }
  return {x_original.with_values(std::move(out), x_original.scale()), floored};
}

}  // namespace hetcorr
