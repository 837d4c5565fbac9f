#pragma once

// Shared data model: signal matrices on a daily axis and fitted low-rank corrections.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetcorr/dates.hpp"
#include "hetcorr/errors.hpp"

namespace hetcorr {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Scale { linear, log };

inline const char* to_string(Scale s) { return s == Scale::linear ? "linear" : "log"; }

/// N locations by T consecutive days. Immutable once constructed.
class SignalMatrix {
 public:
  SignalMatrix(MatrixXd values, std::vector<std::string> locations, std::vector<Date> dates,
               Scale scale = Scale::linear)
      : values_(std::move(values)), locations_(std::move(locations)), dates_(std::move(dates)), scale_(scale) {
    validate();
  }

  /// Labels "loc1".."locN" and consecutive days from `start`.
  static SignalMatrix with_default_labels(MatrixXd values, Date start = default_start_date(),
                                          Scale scale = Scale::linear) {
    std::vector<std::string> locs;
    locs.reserve(static_cast<std::size_t>(values.rows()));
    for (Index i = 0; i < values.rows(); ++i) locs.push_back("loc" + std::to_string(i + 1));
    std::vector<Date> dates;
    dates.reserve(static_cast<std::size_t>(values.cols()));
    for (Index t = 0; t < values.cols(); ++t) dates.push_back(start + std::chrono::days{t});
    return SignalMatrix(std::move(values), std::move(locs), std::move(dates), scale);
  }

  /// Same labels, new values.
  SignalMatrix with_values(MatrixXd values, Scale scale) const {
    return SignalMatrix(std::move(values), locations_, dates_, scale);
  }
  SignalMatrix with_values(MatrixXd values) const { return with_values(std::move(values), scale_); }

  const MatrixXd& values() const { return values_; }
  const std::vector<std::string>& locations() const { return locations_; }
  const std::vector<Date>& dates() const { return dates_; }
  Scale scale() const { return scale_; }
  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }

 private:
  void validate() const {
    if (static_cast<std::size_t>(values_.rows()) != locations_.size())
      throw ShapeError("row count " + std::to_string(values_.rows()) + " does not match " +
                       std::to_string(locations_.size()) + " locations");
    if (static_cast<std::size_t>(values_.cols()) != dates_.size())
      throw ShapeError("column count " + std::to_string(values_.cols()) + " does not match " +
                       std::to_string(dates_.size()) + " dates");
    for (std::size_t t = 1; t < dates_.size(); ++t) {
      if (dates_[t] - dates_[t - 1] != std::chrono::days{1})
        throw ArgumentError("dates must advance by exactly one day: " + format_date(dates_[t - 1]) +
                            " is followed by " + format_date(dates_[t]));
    }
    for (Index t = 0; t < values_.cols(); ++t)
      for (Index i = 0; i < values_.rows(); ++i)
        if (!std::isfinite(values_(i, t)))
          throw DomainError("non-finite value at row " + std::to_string(i) + ", column " + std::to_string(t));
  }

  MatrixXd values_;
  std::vector<std::string> locations_;
  std::vector<Date> dates_;
  Scale scale_;
};

enum class Method { bounded_rank, fused_lasso, basis_spline };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::bounded_rank: return "br";
    case Method::fused_lasso: return "fl";
    case Method::basis_spline: return "bs";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "br") return Method::bounded_rank;
  if (s == "fl") return Method::fused_lasso;
  if (s == "bs") return Method::basis_spline;
  throw ArgumentError("unknown method '" + s + "' (expected br, fl or bs)");
}

struct HyperParams {
  int rank = 0;
  double lambda = 0.0;         // fused lasso only
  int knot_interval_days = 1;  // basis spline only
  int spline_degree = 3;

  void validate() const {
    if (rank < 0) throw ArgumentError("rank must be nonnegative");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be a finite nonnegative number");
    if (knot_interval_days < 1) throw ArgumentError("knot interval must be at least one day");
    if (spline_degree < 0) throw ArgumentError("spline degree must be nonnegative");
  }
};

/// Clamped B-spline basis sampled on days 1..T.
struct SplineBasis {
  int degree = 3;
  std::vector<double> knots;  // full knot vector including repeated boundary knots
  MatrixXd C;                 // L x T, C(i, t) = S_{i,degree}(t + 1)

  Index size() const { return C.rows(); }
  Index num_times() const { return C.cols(); }
};

struct CorrectionModel {
  Method method = Method::bounded_rank;
  MatrixXd A;  // N x K
  MatrixXd B;  // T x K, or L x K spline coefficients
  std::optional<SplineBasis> spline;  // present iff method == basis_spline
  HyperParams hyper;
  double objective_value = 0.0;
  Scale scale = Scale::linear;

  Index rank() const { return A.cols(); }
  Index num_locations() const { return A.rows(); }
  Index num_times() const { return spline ? spline->num_times() : B.rows(); }

  /// K x T temporal factors: B^T, or B^T C for splines.
  MatrixXd temporal_correction() const {
    if (spline) return B.transpose() * spline->C;
    return B.transpose();
  }

  /// N x T additive correction A * temporal_correction().
  MatrixXd correction() const {
    if (rank() == 0) return MatrixXd::Zero(num_locations(), num_times());
    return A * temporal_correction();
  }
};

/// Flips factor column pairs so the largest-magnitude entry of each column of `B` is nonnegative.
inline void canonicalize_signs(MatrixXd& A, MatrixXd& B) {
  for (Index k = 0; k < B.cols(); ++k) {
    Index arg = 0;
    double best = -1.0;
    for (Index t = 0; t < B.rows(); ++t) {
      const double m = std::abs(B(t, k));
      if (m > best) {
        best = m;
        arg = t;
      }
    }
    if (B.rows() > 0 && B(arg, k) < 0.0) {
      B.col(k) = -B.col(k);
      A.col(k) = -A.col(k);
    }
  }
}

/// Keeps the first `rank` components. Fits in this library are nested, so this equals a refit at `rank`.
inline CorrectionModel truncate_rank(const CorrectionModel& model, Index rank, const MatrixXd& target) {
  if (rank < 0 || rank > model.rank()) throw ArgumentError("cannot truncate to rank " + std::to_string(rank));
  CorrectionModel out = model;
  out.A = model.A.leftCols(rank);
  out.B = model.B.leftCols(rank);
  out.hyper.rank = static_cast<int>(rank);
  double penalty = 0.0;
  if (model.method == Method::fused_lasso && out.B.rows() > 1)
    penalty = model.hyper.lambda *
              (out.B.bottomRows(out.B.rows() - 1) - out.B.topRows(out.B.rows() - 1)).cwiseAbs().sum();
  out.objective_value = (target - out.correction()).squaredNorm() + penalty;
  return out;
}

inline void check_model_shape(const SignalMatrix& x, const CorrectionModel& model) {
  if (model.rank() > 0 && x.rows() != model.num_locations())
    throw ShapeError("location axis: matrix has " + std::to_string(x.rows()) + " rows, model has " +
                     std::to_string(model.num_locations()));
  if (model.rank() > 0 && x.cols() != model.num_times())
    throw ShapeError("time axis: matrix has " + std::to_string(x.cols()) + " columns, model has " +
                     std::to_string(model.num_times()));
}

/// X + A * temporal_correction.
inline SignalMatrix apply_correction(const SignalMatrix& x, const CorrectionModel& model) {
  check_model_shape(x, model);
  if (model.rank() == 0) return x;
  return x.with_values(x.values() + model.correction());
}

inline void check_aligned(const SignalMatrix& a, const SignalMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("shape " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  for (std::size_t i = 0; i < a.locations().size(); ++i)
    if (a.locations()[i] != b.locations()[i])
      throw AlignmentError("location mismatch at row " + std::to_string(i) + ": '" + a.locations()[i] + "' vs '" +
                           b.locations()[i] + "'");
  for (std::size_t t = 0; t < a.dates().size(); ++t)
    if (a.dates()[t] != b.dates()[t])
      throw AlignmentError("date mismatch at column " + std::to_string(t) + ": " + format_date(a.dates()[t]) +
                           " vs " + format_date(b.dates()[t]));
  if (a.scale() != b.scale())
    throw AlignmentError(std::string("scale mismatch: ") + to_string(a.scale()) + " vs " + to_string(b.scale()));
}

/// D = Y - X.
inline SignalMatrix residual_matrix(const SignalMatrix& x, const SignalMatrix& y) {
  check_aligned(x, y);
  return x.with_values(y.values() - x.values());
}

struct Cell {
  Index row = 0;
  Index col = 0;
};

/// Mean of (xt - y)^2 over the listed cells.
inline double mse_on_mask(const MatrixXd& xt, const MatrixXd& y, std::span<const Cell> mask) {
  if (mask.empty()) throw ArgumentError("mask must not be empty");
  if (xt.rows() != y.rows() || xt.cols() != y.cols()) throw ShapeError("mse_on_mask: shapes differ");
  double sum = 0.0;
  for (const Cell& c : mask) {
    if (c.row < 0 || c.row >= xt.rows() || c.col < 0 || c.col >= xt.cols())
      throw ArgumentError("mask cell (" + std::to_string(c.row) + ", " + std::to_string(c.col) + ") out of range");
    const double e = xt(c.row, c.col) - y(c.row, c.col);
    sum += e * e;
  }
  return sum / static_cast<double>(mask.size());
}

inline double mse_on_mask(const SignalMatrix& xt, const SignalMatrix& y, std::span<const Cell> mask) {
  check_aligned(xt, y);
  return mse_on_mask(xt.values(), y.values(), mask);
}

}  // namespace hetcorr
