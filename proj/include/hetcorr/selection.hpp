#pragma once

// Blocked cross-validation over (method, rank, smoothing) grids and the one-standard-error rule.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hetcorr/bounded_rank.hpp"
#include "hetcorr/core.hpp"
#include "hetcorr/fused_lasso.hpp"
#include "hetcorr/spline.hpp"

namespace hetcorr {

struct GridSpec {
  std::vector<int> ranks;
  std::vector<double> lambdas;      // 0 selects the bounded rank model
  std::vector<int> knot_intervals;  // basis spline models; empty for none
  int spline_degree = 3;
  int folds = 6;
  int test_block_days = 10;
  int buffer_days = 5;

  /// Ranks {0..15, 20, 30, 40, 50} capped at min(N, T), lambdas {0, 0.1, 1, 10}, knots {5, 10, 20, 50}.
  static GridSpec defaults(Index N, Index T) {
    GridSpec g;
    const Index cap = std::min(N, T);
    for (int k : {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 20, 30, 40, 50})
      if (k <= cap) g.ranks.push_back(k);
    g.lambdas = {0.0, 0.1, 1.0, 10.0};
    g.knot_intervals = {5, 10, 20, 50};
    return g;
  }

  void validate() const {
    if (ranks.empty()) throw ArgumentError("grid needs at least one rank");
    for (int k : ranks)
      if (k < 0) throw ArgumentError("grid ranks must be nonnegative");
    for (double l : lambdas)
      if (!(l >= 0.0) || !std::isfinite(l)) throw ArgumentError("grid lambdas must be finite and nonnegative");
    for (int h : knot_intervals)
      if (h < 1) throw ArgumentError("grid knot intervals must be at least one day");
    if (lambdas.empty() && knot_intervals.empty()) throw ArgumentError("grid has no models (no lambdas, no knots)");
    if (folds < 1 || test_block_days < 1 || buffer_days < 0) throw ArgumentError("invalid fold geometry");
    if (spline_degree < 0) throw ArgumentError("spline degree must be nonnegative");
  }
};

/// Day indices here are 0-based column indices.
struct FoldLayout {
  int fold_index = 0;
  std::vector<Index> test_indices;
  std::vector<Index> buffer_indices;
  std::vector<Index> train_indices;
};

/// Test blocks of `test_block_days` repeat every folds * test_block_days days; fold f starts its
/// blocks at f * test_block_days. Only complete blocks are placed, so a short tail stays in
/// training for every fold. Buffers flank each block and are truncated at the series ends.
inline std::vector<FoldLayout> make_fold_layouts(Index T, const GridSpec& spec) {
  const Index block = spec.test_block_days;
  const Index period = static_cast<Index>(spec.folds) * block;
  if (spec.folds < 1 || block < 1 || spec.buffer_days < 0) throw ArgumentError("invalid fold geometry");
  if (T < period)
    throw ArgumentError("series of " + std::to_string(T) + " days is shorter than one fold cycle (" +
                        std::to_string(period) + " days)");
  std::vector<FoldLayout> layouts;
  for (int f = 0; f < spec.folds; ++f) {
    std::vector<char> role(static_cast<std::size_t>(T), 0);  // 0 train, 1 buffer, 2 test
    for (Index start = f * block; start + block <= T; start += period) {
      for (Index t = start; t < start + block; ++t) role[t] = 2;
      for (Index t = std::max<Index>(0, start - spec.buffer_days); t < start; ++t)
        if (role[t] == 0) role[t] = 1;
      for (Index t = start + block; t < std::min(T, start + block + spec.buffer_days); ++t)
        if (role[t] == 0) role[t] = 1;
    }
    FoldLayout layout;
    layout.fold_index = f;
    for (Index t = 0; t < T; ++t) {
      if (role[t] == 2) layout.test_indices.push_back(t);
      else if (role[t] == 1) layout.buffer_indices.push_back(t);
      else layout.train_indices.push_back(t);
    }
    layouts.push_back(std::move(layout));
  }
  return layouts;
}

struct CvOptions {
  FusedLassoOptions fused_lasso;
  // Relative ridge used when a training-column spline basis is rank deficient
  // (some basis function is supported only on held-out days); scaled by trace(C C^T) / L.
  double spline_ridge = 1e-8;
  // Evaluate B^T C on held-out days instead of interpolating it.
  bool spline_direct_evaluation = false;
  double dof_zero_tol = 1e-8;
  unsigned jobs = 0;  // 0: hardware concurrency
};

/// A fit on the training columns of one fold.
struct TrainedFold {
  CorrectionModel model;             // temporal axis = train_columns (spline basis restricted)
  std::vector<Index> train_columns;  // 0-based day indices
  std::optional<SplineBasis> full_basis;
};

inline MatrixXd select_columns(const MatrixXd& m, std::span<const Index> columns) {
  MatrixXd out(m.rows(), static_cast<Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) out.col(static_cast<Index>(j)) = m.col(columns[j]);
  return out;
}

namespace detail {

inline CorrectionModel fit_spline_with_fallback(const MatrixXd& d, const SplineBasis& basis, Index rank,
                                                double relative_ridge) {
  try {
    return fit_basis_spline(d, basis, rank);
  } catch (const NumericalError&) {
    if (!(relative_ridge > 0.0)) throw;
  }
  const double scale = basis.C.squaredNorm() / static_cast<double>(std::max<Index>(1, basis.size()));
  SplineFitOptions opt;
  opt.ridge = relative_ridge * scale;
  return fit_basis_spline(d, basis, rank, opt);
}

}  // namespace detail

/// Fits `method` on D restricted to the layout's training columns. For the fused lasso the
/// difference penalty links consecutive retained columns with unit weight, whatever the gap.
/// Spline bases are built on the full day axis and restricted to the training columns.
inline TrainedFold fit_on_training_columns(const MatrixXd& d, const FoldLayout& layout, Method method,
                                           const HyperParams& hyper, const CvOptions& opt = {}) {
  if (layout.train_indices.empty()) throw ArgumentError("fold has no training columns");
  hyper.validate();
  TrainedFold out;
  out.train_columns = layout.train_indices;
  const MatrixXd dtrain = select_columns(d, layout.train_indices);
  switch (method) {
    case Method::bounded_rank:
      out.model = fit_bounded_rank(dtrain, hyper.rank);
      break;
    case Method::fused_lasso:
      out.model = fit_fused_lasso(dtrain, hyper.rank, hyper.lambda, opt.fused_lasso);
      break;
    case Method::basis_spline: {
      SplineBasis full = build_spline_basis(d.cols(), hyper.spline_degree, hyper.knot_interval_days);
      const SplineBasis restricted = restrict_columns(full, layout.train_indices);
      out.model = detail::fit_spline_with_fallback(dtrain, restricted, hyper.rank, opt.spline_ridge);
      out.model.hyper.knot_interval_days = hyper.knot_interval_days;
      out.full_basis = std::move(full);
      break;
    }
  }
  return out;
}

/// Piecewise-linear fill of the held-out days of each row from the values at `known` columns
/// (increasing); runs before the first or after the last known column are held constant.
inline MatrixXd interpolate_rows(const MatrixXd& known_values, std::span<const Index> known, Index T) {
  const Index K = known_values.rows();
  MatrixXd out(K, T);
  if (known.empty()) throw ArgumentError("interpolation needs at least one known column");
  for (std::size_t j = 0; j < known.size(); ++j) out.col(known[j]) = known_values.col(static_cast<Index>(j));
  for (Index t = 0; t < known.front(); ++t) out.col(t) = known_values.col(0);
  for (Index t = known.back() + 1; t < T; ++t) out.col(t) = known_values.col(known_values.cols() - 1);
  for (std::size_t j = 0; j + 1 < known.size(); ++j) {
    const Index l = known[j];
    const Index r = known[j + 1];
    if (r - l <= 1) continue;
    const VectorXd vl = known_values.col(static_cast<Index>(j));
    const VectorXd vr = known_values.col(static_cast<Index>(j + 1));
    for (Index t = l + 1; t < r; ++t) {
      const double w = static_cast<double>(t - l) / static_cast<double>(r - l);
      out.col(t) = vl + w * (vr - vl);
    }
  }
  return out;
}

/// Full-length K x T temporal correction for a fold fit.
inline MatrixXd interpolate_temporal_correction(const TrainedFold& fit, Index T, bool spline_direct = false) {
  const CorrectionModel& m = fit.model;
  if (m.method == Method::basis_spline && spline_direct) {
    if (!fit.full_basis) throw ArgumentError("spline fold fit lacks its full basis");
    return m.B.transpose() * fit.full_basis->C;
  }
  return interpolate_rows(m.temporal_correction(), fit.train_columns, T);
}

struct CvRecord {
  Method method = Method::bounded_rank;
  HyperParams hyper;
  std::vector<double> fold_mses;
  double mean_mse = 0.0;
  double se_mse = 0.0;
  std::int64_t dof = 0;
};

/// K(N + T - 1).
inline std::int64_t dof_bounded_rank(std::int64_t rank, std::int64_t N, std::int64_t T) {
  return rank * (N + T - 1);
}

/// Fills mean and standard error (sample sd over folds / sqrt(F)).
inline void summarize_folds(CvRecord& r) {
  const double F = static_cast<double>(r.fold_mses.size());
  double sum = 0.0;
  for (double v : r.fold_mses) sum += v;
  r.mean_mse = sum / F;
  double ss = 0.0;
  for (double v : r.fold_mses) ss += (v - r.mean_mse) * (v - r.mean_mse);
  r.se_mse = r.fold_mses.size() > 1 ? std::sqrt(ss / (F - 1.0)) / std::sqrt(F) : 0.0;
}

namespace detail {

struct GridConfig {
  Method method;
  double lambda = 0.0;
  int knot_interval = 1;
};

inline std::vector<GridConfig> grid_configs(const GridSpec& grid) {
  std::vector<GridConfig> out;
  for (double l : grid.lambdas) {
    if (l == 0.0) out.push_back({Method::bounded_rank, 0.0, 1});
    else out.push_back({Method::fused_lasso, l, 1});
  }
  for (int h : grid.knot_intervals) out.push_back({Method::basis_spline, 0.0, h});
  return out;
}

/// Runs jobs [0, count) on a small pool; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// MSE on the test cells of each fold for every (config, rank) on the grid. Only ranks that are
/// feasible in every fold (K <= min(N, training days), or min(N, L) for splines) produce records.
/// Fits are nested in rank, so each (config, fold) is fitted once at its largest rank.
/// Records come out in grid order: configs (lambdas, then knot intervals) by increasing rank.
inline std::vector<CvRecord> cross_validate(const MatrixXd& d, const GridSpec& grid, const CvOptions& opt = {}) {
  grid.validate();
  for (Index t = 0; t < d.cols(); ++t)
    for (Index i = 0; i < d.rows(); ++i)
      if (!std::isfinite(d(i, t))) throw DomainError("difference matrix contains non-finite values");
  const Index N = d.rows();
  const Index T = d.cols();
  const std::vector<FoldLayout> layouts = make_fold_layouts(T, grid);
  const std::vector<detail::GridConfig> configs = detail::grid_configs(grid);

  std::vector<int> ranks = grid.ranks;
  std::sort(ranks.begin(), ranks.end());
  ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());

  Index min_train = T;
  for (const auto& l : layouts) min_train = std::min<Index>(min_train, static_cast<Index>(l.train_indices.size()));

  // Feasible ranks per config.
  std::vector<std::vector<int>> config_ranks(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    Index cap = std::min(N, min_train);
    if (configs[c].method == Method::basis_spline) {
      if (configs[c].knot_interval > T) continue;
      const auto knots = uniform_clamped_knots(T, grid.spline_degree, configs[c].knot_interval);
      const Index L = static_cast<Index>(knots.size()) - grid.spline_degree - 1;
      cap = std::min(N, L);
    }
    for (int k : ranks)
      if (k <= cap) config_ranks[c].push_back(k);
  }

  const std::size_t F = layouts.size();
  // fold_errors[c][f][r] for rank index r.
  std::vector<std::vector<std::vector<double>>> fold_errors(configs.size(), std::vector<std::vector<double>>(F));
  std::vector<std::int64_t> spline_basis_size(configs.size(), 0);
  std::vector<std::vector<std::int64_t>> fl_jumps(configs.size());

  struct Job {
    std::size_t config;
    std::size_t fold;  // F means full-data fused lasso refit for dof
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    if (config_ranks[c].empty()) continue;
    for (std::size_t f = 0; f < F; ++f) jobs.push_back({c, f});
    if (configs[c].method == Method::fused_lasso) jobs.push_back({c, F});
  }

  detail::parallel_for(jobs.size(), opt.jobs, [&](std::size_t j) {
    const Job job = jobs[j];
    const detail::GridConfig& cfg = configs[job.config];
    const std::vector<int>& rks = config_ranks[job.config];
    HyperParams hyper;
    hyper.rank = rks.back();
    hyper.lambda = cfg.lambda;
    hyper.knot_interval_days = cfg.knot_interval;
    hyper.spline_degree = grid.spline_degree;

    if (job.fold == F) {
      const CorrectionModel full = fit_fused_lasso(d, hyper.rank, cfg.lambda, opt.fused_lasso);
      std::vector<std::int64_t> jumps;
      for (int k : rks) jumps.push_back(count_jumps(full.B.leftCols(k), opt.dof_zero_tol));
      fl_jumps[job.config] = std::move(jumps);
      return;
    }

    const FoldLayout& layout = layouts[job.fold];
    const TrainedFold fit = fit_on_training_columns(d, layout, cfg.method, hyper, opt);
    if (cfg.method == Method::basis_spline) spline_basis_size[job.config] = fit.model.spline->size();
    const MatrixXd temporal = interpolate_temporal_correction(fit, T, opt.spline_direct_evaluation);
    const MatrixXd tc = select_columns(temporal, layout.test_indices);
    MatrixXd residual = -select_columns(d, layout.test_indices);  // correction - D on test cells
    const double cells = static_cast<double>(residual.size());

    std::vector<double> errs;
    Index done = 0;
    for (int k : rks) {
      for (; done < k; ++done) residual.noalias() += fit.model.A.col(done) * tc.row(done);
      errs.push_back(residual.squaredNorm() / cells);
    }
    fold_errors[job.config][job.fold] = std::move(errs);
  });

  std::vector<CvRecord> records;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const std::vector<int>& rks = config_ranks[c];
    for (std::size_t r = 0; r < rks.size(); ++r) {
      CvRecord rec;
      rec.method = configs[c].method;
      rec.hyper.rank = rks[r];
      rec.hyper.lambda = configs[c].lambda;
      rec.hyper.knot_interval_days = configs[c].knot_interval;
      rec.hyper.spline_degree = grid.spline_degree;
      for (std::size_t f = 0; f < F; ++f) rec.fold_mses.push_back(fold_errors[c][f][r]);
      summarize_folds(rec);
      switch (rec.method) {
        case Method::bounded_rank: rec.dof = dof_bounded_rank(rks[r], N, T); break;
        case Method::fused_lasso:
          rec.dof = static_cast<std::int64_t>(rks[r]) * (N - 1) + fl_jumps[c][r];
          break;
        case Method::basis_spline:
          rec.dof = static_cast<std::int64_t>(rks[r]) * (N + spline_basis_size[c] - 1);
          break;
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

inline std::vector<CvRecord> cross_validate(const SignalMatrix& d, const GridSpec& grid, const CvOptions& opt = {}) {
  return cross_validate(d.values(), grid, opt);
}

namespace detail {

inline int method_order(Method m) {
  switch (m) {
    case Method::bounded_rank: return 0;
    case Method::fused_lasso: return 1;
    case Method::basis_spline: return 2;
  }
  return 3;
}

// Parsimony order: fewer dof, then larger lambda, smaller rank, method order, larger knot interval.
inline bool more_parsimonious(const CvRecord& a, const CvRecord& b) {
  if (a.dof != b.dof) return a.dof < b.dof;
  if (a.hyper.lambda != b.hyper.lambda) return a.hyper.lambda > b.hyper.lambda;
  if (a.hyper.rank != b.hyper.rank) return a.hyper.rank < b.hyper.rank;
  if (method_order(a.method) != method_order(b.method)) return method_order(a.method) < method_order(b.method);
  return a.hyper.knot_interval_days > b.hyper.knot_interval_days;
}

}  // namespace detail

/// Index of the record with the smallest mean CV error (first one on exact ties).
inline std::size_t min_cv_index(const std::vector<CvRecord>& records) {
  if (records.empty()) throw ArgumentError("no cross-validation records");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].mean_mse < records[best].mean_mse) best = i;
  return best;
}

/// Most parsimonious record whose mean error is within one standard error of the minimum.
inline std::size_t one_se_index(const std::vector<CvRecord>& records) {
  const std::size_t star = min_cv_index(records);
  const double threshold = records[star].mean_mse + records[star].se_mse;
  std::size_t best = star;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].mean_mse > threshold) continue;
    if (detail::more_parsimonious(records[i], records[best])) best = i;
  }
  return best;
}

inline CvRecord one_se_select(const std::vector<CvRecord>& records) { return records[one_se_index(records)]; }

}  // namespace hetcorr
