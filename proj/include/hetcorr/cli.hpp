#pragma once

// The hetcorr command line: correct, cv, simulate, compare-baselines, components, fetch, pivot.
//
// Option values come from, in decreasing precedence: flags, HETERO_* environment variables,
// then a JSON file given with --config. Exit status is 0 on success, 1 for data or numerical
// errors and 2 for usage errors.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "hetcorr/baselines.hpp"
#include "hetcorr/bounded_rank.hpp"
#include "hetcorr/core.hpp"
#include "hetcorr/fused_lasso.hpp"
#include "hetcorr/io/fetch.hpp"
#include "hetcorr/io/http_transport.hpp"
#include "hetcorr/io/model_json.hpp"
#include "hetcorr/io/wide_csv.hpp"
#include "hetcorr/random.hpp"
#include "hetcorr/selection.hpp"
#include "hetcorr/simulation.hpp"
#include "hetcorr/spline.hpp"
#include "hetcorr/transforms.hpp"
#include "hetcorr/version.hpp"

namespace hetcorr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad combination of otherwise well-formed flags.
class UsageError : public Error {
 public:
  using Error::Error;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v) return std::nullopt;
  return std::string(v);
}

/// Environment variables and the options they feed.
inline const std::map<std::string, std::string>& env_options() {
  static const std::map<std::string, std::string> m = {{"HETERO_CACHE_DIR", "cache-dir"}, {"HETERO_JOBS", "jobs"}};
  return m;
}

namespace detail {

inline Date parse_date_flag(const std::string& flag, const std::string& text) {
  const auto d = parse_date(text);
  if (!d) throw UsageError("--" + flag + ": '" + text + "' is not a date (YYYY-MM-DD)");
  return *d;
}

inline TransformSpec transform_from(bool multiplicative, double eps) {
  return multiplicative ? TransformSpec::multiplicative(eps) : TransformSpec::additive();
}

inline std::string json_scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + json_scalar_text(v[i]);
    return s;
  }
  return v.dump();
}

/// First token naming a subcommand, and the long flags already given on the command line.
inline std::pair<std::string, std::set<std::string>> scan_args(const std::vector<std::string>& args) {
  std::string sub;
  std::set<std::string> given;
  for (const std::string& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos
                                                                                          : a.find('=') - 2));
    else if (sub.empty() && !a.empty() && a[0] != '-') sub = a;
  }
  return {sub, given};
}

inline std::optional<std::string> config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

/// Appends `--name value` for options that the command line leaves unset, taking values from
/// the environment first and the config file second.
inline void apply_defaults(std::vector<std::string>& args, CLI::App& app, const EnvLookup& env) {
  const auto [sub_name, given] = scan_args(args);
  if (sub_name.empty()) return;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(sub_name);
  } catch (const CLI::OptionNotFound&) {
    return;  // CLI11 reports the unknown subcommand
  }
  std::set<std::string> filled = given;
  auto push = [&](const std::string& name, const json& value) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + name);
    if (!opt) return false;
    if (filled.count(name)) return true;
    filled.insert(name);
    if (opt->get_expected_max() == 0) {  // flag
      if (value.is_boolean() ? value.get<bool>() : json_scalar_text(value) == "true") args.push_back("--" + name);
      return true;
    }
    args.push_back("--" + name);
    args.push_back(json_scalar_text(value));
    return true;
  };

  for (const auto& [var, name] : env_options())
    if (const auto v = env(var); v && !v->empty()) push(name, json(*v));

  const auto path = config_path(args);
  if (!path) return;
  std::ifstream in(*path);
  if (!in) throw UsageError("cannot open config file '" + *path + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw UsageError("config file '" + *path + "': " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file '" + *path + "' must hold a JSON object");
  // A block named after the subcommand wins over shared top-level keys.
  if (cfg.contains(sub_name) && cfg[sub_name].is_object())
    for (const auto& [key, value] : cfg[sub_name].items())
      if (!push(key, value)) throw UsageError("config file '" + *path + "': " + sub_name + " has no option '" + key + "'");
  for (const auto& [key, value] : cfg.items())
    if (!value.is_object()) push(key, value);  // options of other subcommands are skipped
}

struct DataOptions {
  std::string x;
  std::string y;
  bool multiplicative = false;
  double pseudocount = 1.0;
};

inline void add_data_options(CLI::App* sub, DataOptions& o, bool required) {
  auto* x = sub->add_option("--x", o.x, "Wide CSV of the signal to correct");
  auto* y = sub->add_option("--y", o.y, "Wide CSV of the guide signal");
  if (required) {
    x->required();
    y->required();
  }
  sub->add_flag("--multiplicative", o.multiplicative, "Fit on log(. + pseudocount) instead of raw values");
  sub->add_option("--pseudocount", o.pseudocount, "Pseudocount for --multiplicative")->capture_default_str();
}

inline std::pair<SignalMatrix, SignalMatrix> load_pair(const DataOptions& o) {
  SignalMatrix x = io::read_wide_csv(o.x);
  SignalMatrix y = io::read_wide_csv(o.y);
  check_aligned(x, y);
  return {std::move(x), std::move(y)};
}

inline SignalMatrix difference_on_fit_scale(const SignalMatrix& x, const SignalMatrix& y, const TransformSpec& t) {
  return residual_matrix(to_fit_scale(x, t), to_fit_scale(y, t));
}

inline fs::path sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return p.parent_path() / (p.stem().string() + suffix);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// ---- correct ----

struct CorrectOptions {
  DataOptions data;
  std::string method = "br";
  int rank = 0;
  double lambda = 1.0;
  int knot_interval = 10;
  int spline_degree = 3;
  bool admm = false;
  std::string out;
  std::string model_out;
  std::string config;
};

inline CorrectionModel fit_method(const MatrixXd& d, Method method, const HyperParams& h, bool admm) {
  switch (method) {
    case Method::bounded_rank: return fit_bounded_rank(d, h.rank);
    case Method::fused_lasso: {
      FusedLassoOptions opt;
      opt.tv_solver = admm ? TvSolver::admm : TvSolver::direct;
      return fit_fused_lasso(d, h.rank, h.lambda, opt);
    }
    case Method::basis_spline:
      return fit_basis_spline(d, build_spline_basis(d.cols(), h.spline_degree, h.knot_interval_days), h.rank);
  }
  throw ArgumentError("unknown method");
}

inline int run_correct(const CorrectOptions& o, std::ostream& out) {
  const auto [x, y] = load_pair(o.data);
  const TransformSpec transform = transform_from(o.data.multiplicative, o.data.pseudocount);
  const SignalMatrix d = difference_on_fit_scale(x, y, transform);
  HyperParams h;
  h.rank = o.rank;
  h.lambda = o.method == "fl" ? o.lambda : 0.0;
  h.knot_interval_days = o.method == "bs" ? o.knot_interval : 1;
  h.spline_degree = o.spline_degree;
  h.validate();
  CorrectionModel model = fit_method(d.values(), method_from_string(o.method), h, o.admm);
  model.scale = d.scale();
  const BackTransformed corrected = corrected_to_original_scale(x, model, transform);

  const fs::path out_path(o.out);
  const fs::path model_path = o.model_out.empty() ? sibling(o.out, ".model.json") : fs::path(o.model_out);
  ensure_parent(out_path);
  ensure_parent(model_path);
  io::write_wide_csv(out_path.string(), corrected.values);
  io::save_model(model_path.string(), {model, x.locations(), x.dates(), transform, std::nullopt});

  out << "method " << to_string(model.method) << ", rank " << model.rank() << ", objective "
      << io::format_double(model.objective_value) << '\n';
  if (corrected.floored_cells > 0)
    out << corrected.floored_cells << " corrected cells were negative and set to 0\n";
  out << "wrote " << out_path.string() << " and " << model_path.string() << '\n';
  return 0;
}

// ---- cv ----

struct CvCliOptions {
  DataOptions data;
  std::string diff;
  std::vector<int> ranks;
  std::vector<double> lambdas;
  std::vector<int> knot_intervals;
  bool no_splines = false;
  int spline_degree = 3;
  int folds = 6;
  int test_block = 10;
  int buffer = 5;
  unsigned jobs = 0;
  bool admm = false;
  bool spline_direct = false;
  std::string out;
  std::string traces;
  std::string config;
};

inline std::string cv_header(std::size_t folds) {
  std::string h = "method,rank,lambda,knot_interval";
  for (std::size_t f = 1; f <= folds; ++f) h += ",fold_mse_" + std::to_string(f);
  h += ",mean_mse,se_mse,dof,selected_min,selected_1se\n";
  return h;
}

inline std::string cv_table(const std::vector<CvRecord>& records, std::size_t min_i, std::size_t se_i) {
  std::ostringstream s;
  s << cv_header(records.empty() ? 0 : records.front().fold_mses.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const CvRecord& r = records[i];
    s << to_string(r.method) << ',' << r.hyper.rank << ',' << io::format_double(r.hyper.lambda) << ',';
    if (r.method == Method::basis_spline) s << r.hyper.knot_interval_days;
    for (double m : r.fold_mses) s << ',' << io::format_double(m);
    s << ',' << io::format_double(r.mean_mse) << ',' << io::format_double(r.se_mse) << ',' << r.dof << ','
      << (i == min_i ? 1 : 0) << ',' << (i == se_i ? 1 : 0) << '\n';
  }
  return s.str();
}

/// Per-fold temporal components of a selected configuration, filled in over held-out days.
inline std::string cv_traces(const MatrixXd& d, const std::vector<Date>& dates, const GridSpec& grid,
                             const CvOptions& opt, const std::vector<std::pair<std::string, CvRecord>>& picks) {
  std::ostringstream s;
  s << "selection,method,rank,fold,component,date,held_out,value\n";
  const auto layouts = make_fold_layouts(d.cols(), grid);
  for (const auto& [name, rec] : picks) {
    if (rec.hyper.rank == 0) continue;
    for (const FoldLayout& layout : layouts) {
      const TrainedFold fit = fit_on_training_columns(d, layout, rec.method, rec.hyper, opt);
      const MatrixXd traj = interpolate_temporal_correction(fit, d.cols(), opt.spline_direct_evaluation);
      std::vector<char> held(static_cast<std::size_t>(d.cols()), 1);
      for (Index t : layout.train_indices) held[static_cast<std::size_t>(t)] = 0;
      for (Index k = 0; k < traj.rows(); ++k)
        for (Index t = 0; t < traj.cols(); ++t)
          s << name << ',' << to_string(rec.method) << ',' << rec.hyper.rank << ',' << layout.fold_index + 1 << ','
            << k + 1 << ',' << format_date(dates[static_cast<std::size_t>(t)]) << ','
            << int(held[static_cast<std::size_t>(t)]) << ',' << io::format_double(traj(k, t)) << '\n';
    }
  }
  return s.str();
}

inline int run_cv(const CvCliOptions& o, std::ostream& out) {
  std::optional<SignalMatrix> d;
  if (!o.diff.empty()) {
    if (!o.data.x.empty() || !o.data.y.empty()) throw UsageError("give either --diff or --x/--y, not both");
    d = io::read_wide_csv(o.diff);
  } else {
    if (o.data.x.empty() || o.data.y.empty()) throw UsageError("cv needs --x and --y (or --diff)");
    const auto [x, y] = load_pair(o.data);
    d = difference_on_fit_scale(x, y, transform_from(o.data.multiplicative, o.data.pseudocount));
  }

  GridSpec grid = GridSpec::defaults(d->rows(), d->cols());
  if (!o.ranks.empty()) grid.ranks = o.ranks;
  if (!o.lambdas.empty()) grid.lambdas = o.lambdas;
  if (!o.knot_intervals.empty()) grid.knot_intervals = o.knot_intervals;
  if (o.no_splines) grid.knot_intervals.clear();
  grid.spline_degree = o.spline_degree;
  grid.folds = o.folds;
  grid.test_block_days = o.test_block;
  grid.buffer_days = o.buffer;

  CvOptions opt;
  opt.jobs = o.jobs;
  opt.fused_lasso.tv_solver = o.admm ? TvSolver::admm : TvSolver::direct;
  opt.spline_direct_evaluation = o.spline_direct;

  const std::vector<CvRecord> records = cross_validate(*d, grid, opt);
  if (records.empty()) throw ArgumentError("no grid point is feasible for a " + std::to_string(d->rows()) + "x" +
                                           std::to_string(d->cols()) + " matrix");
  const std::size_t min_i = min_cv_index(records);
  const std::size_t se_i = one_se_index(records);

  const fs::path out_path(o.out);
  const fs::path traces_path = o.traces.empty() ? sibling(o.out, ".traces.csv") : fs::path(o.traces);
  ensure_parent(out_path);
  ensure_parent(traces_path);
  write_text(out_path, cv_table(records, min_i, se_i));
  write_text(traces_path, cv_traces(d->values(), d->dates(), grid, opt,
                                    {{"min", records[min_i]}, {"1se", records[se_i]}}));

  auto describe = [](const CvRecord& r) {
    std::string s = to_string(r.method) + std::string(" rank ") + std::to_string(r.hyper.rank);
    if (r.method == Method::fused_lasso) s += " lambda " + io::format_double(r.hyper.lambda);
    if (r.method == Method::basis_spline) s += " knot interval " + std::to_string(r.hyper.knot_interval_days);
    return s + " (cv mse " + io::format_double(r.mean_mse) + ", se " + io::format_double(r.se_mse) + ", dof " +
           std::to_string(r.dof) + ")";
  };
  out << records.size() << " grid points, " << grid.folds << " folds\n";
  out << "min cv: " << describe(records[min_i]) << '\n';
  out << "one-se: " << describe(records[se_i]) << '\n';
  out << "wrote " << out_path.string() << " and " << traces_path.string() << '\n';
  return 0;
}

// ---- simulate ----

struct SimulateOptions {
  SimulationSpec spec;
  std::string start = "2020-03-01";
  std::string out;
  std::string config;
};

inline std::vector<std::string> factor_header(Index k) {
  std::vector<std::string> h;
  for (Index j = 1; j <= k; ++j) h.push_back("component_" + std::to_string(j));
  return h;
}

inline int run_simulate(const SimulateOptions& o, std::ostream& out) {
  const Date start = parse_date_flag("start", o.start);
  const SimulatedInstance inst = simulate_difference(o.spec, start);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const SignalMatrix zeros = inst.D.with_values(MatrixXd::Zero(inst.D.rows(), inst.D.cols()));
  io::write_wide_csv((dir / "X.csv").string(), zeros);
  io::write_wide_csv((dir / "Y.csv").string(), inst.D);
  io::write_wide_csv((dir / "D.csv").string(), inst.D);
  io::write_wide_csv((dir / "C_true.csv").string(), inst.D.with_values(inst.C_true));
  io::write_matrix_csv((dir / "A_true.csv").string(), inst.A_true, factor_header(inst.A_true.cols()));
  io::write_matrix_csv((dir / "B_true.csv").string(), inst.B_true, factor_header(inst.B_true.cols()));
  json meta = {{"N", o.spec.N},
               {"T", o.spec.T},
               {"rank", o.spec.true_rank},
               {"pieces", o.spec.pieces},
               {"sigma", o.spec.noise_sigma},
               {"seed", o.spec.seed},
               {"start", format_date(start)},
               {"rng", Rng::kName},
               {"software_version", kVersion},
               {"files", {{"X", "X.csv"}, {"Y", "Y.csv"}, {"D", "D.csv"}, {"C_true", "C_true.csv"},
                          {"A_true", "A_true.csv"}, {"B_true", "B_true.csv"}}}};
  write_text(dir / "metadata.json", meta.dump(2) + "\n");
  out << "simulated " << o.spec.N << "x" << o.spec.T << " rank " << o.spec.true_rank << " into " << dir.string()
      << '\n';
  return 0;
}

// ---- compare-baselines ----

struct BaselineOptions {
  DataOptions data;
  std::string out;
  std::string config;
};

inline int run_compare_baselines(const BaselineOptions& o, std::ostream& out) {
  const auto [x, y] = load_pair(o.data);
  const BaselineReport r = compare_baselines(x, y, o.data.pseudocount);
  std::ostringstream s;
  s << "model,mse,se,dof\n";
  for (const auto& row : r.rows)
    s << row.model << ',' << io::format_double(row.mse) << ',' << io::format_double(row.se) << ',' << row.dof << '\n';
  out << s.str();
  if (!o.out.empty()) {
    ensure_parent(o.out);
    write_text(o.out, s.str());
  }
  return 0;
}

// ---- components ----

struct ComponentOptions {
  std::string model;
  std::string out;
  std::string loadings;
  std::string config;
};

inline int run_components(const ComponentOptions& o, std::ostream& out) {
  const io::StoredModel s = io::load_model(o.model);
  const MatrixXd traj = s.model.temporal_correction();
  std::ostringstream t;
  t << "date";
  for (Index k = 1; k <= traj.rows(); ++k) t << ",component_" << k;
  t << '\n';
  for (std::size_t d = 0; d < s.dates.size(); ++d) {
    t << format_date(s.dates[d]);
    for (Index k = 0; k < traj.rows(); ++k) t << ',' << io::format_double(traj(k, static_cast<Index>(d)));
    t << '\n';
  }
  ensure_parent(o.out);
  write_text(o.out, t.str());
  if (!o.loadings.empty()) {
    std::ostringstream l;
    l << "geo_id";
    for (Index k = 1; k <= s.model.A.cols(); ++k) l << ",component_" << k;
    l << '\n';
    for (std::size_t i = 0; i < s.locations.size(); ++i) {
      l << io::csv_field(s.locations[i]);
      for (Index k = 0; k < s.model.A.cols(); ++k) l << ',' << io::format_double(s.model.A(static_cast<Index>(i), k));
      l << '\n';
    }
    ensure_parent(o.loadings);
    write_text(o.loadings, l.str());
  }
  out << traj.rows() << " components over " << s.dates.size() << " days written to " << o.out << '\n';
  return 0;
}

// ---- fetch / pivot ----

struct FetchOptions {
  std::string base_url;
  std::string signal;
  std::string start;
  std::string end;
  std::string cache_dir;
  int timeout = 30;
  std::string out;
  std::string config;
};

inline int run_fetch(const FetchOptions& o, std::ostream& out, io::Transport& transport) {
  io::FetchSpec spec;
  spec.base_url = o.base_url;
  spec.signal_name = o.signal;
  spec.start = parse_date_flag("start", o.start);
  spec.end = parse_date_flag("end", o.end);
  spec.cache_dir = o.cache_dir;
  spec.timeout_seconds = o.timeout;
  const SignalMatrix m = io::fetch_signal(spec, transport);
  ensure_parent(o.out);
  io::write_wide_csv(o.out, m);
  out << "fetched " << m.rows() << " locations x " << m.cols() << " days into " << o.out << '\n';
  return 0;
}

struct PivotOptions {
  std::string in;
  std::string start;
  std::string end;
  std::string out;
  std::string config;
};

inline int run_pivot(const PivotOptions& o, std::ostream& out) {
  std::ifstream in(o.in, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + o.in + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::optional<Date> first;
  std::optional<Date> last;
  if (!o.start.empty()) first = parse_date_flag("start", o.start);
  if (!o.end.empty()) last = parse_date_flag("end", o.end);
  const SignalMatrix m = io::pivot_long(io::parse_long_payload(ss.str()), first, last);
  ensure_parent(o.out);
  io::write_wide_csv(o.out, m);
  out << "pivoted " << m.rows() << " locations x " << m.cols() << " days into " << o.out << '\n';
  return 0;
}

}  // namespace detail

/// Builds the transport used by `fetch`; tests substitute a stub.
using TransportFactory = std::function<std::unique_ptr<io::Transport>()>;

inline std::unique_ptr<io::Transport> default_transport() { return std::make_unique<io::HttpTransport>(); }

/// Runs one command. `args` excludes the program name.
inline int cli_main(std::vector<std::string> args, std::ostream& out, std::ostream& err,
                    const EnvLookup& env = process_env, const TransportFactory& transport = default_transport) {
  using namespace detail;
  CLI::App app{"Heterogeneity correction for panel signals (locations x days)", "hetcorr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CorrectOptions correct;
  auto* c = app.add_subcommand("correct", "Fit a correction model and write the corrected signal");
  add_data_options(c, correct.data, true);
  c->add_option("--method", correct.method, "br, fl or bs")->check(CLI::IsMember({"br", "fl", "bs"}))
      ->capture_default_str();
  c->add_option("--rank", correct.rank, "Number of components")->required();
  c->add_option("--lambda", correct.lambda, "Fused lasso penalty")->capture_default_str();
  c->add_option("--knot-interval", correct.knot_interval, "Spline knot spacing in days")->capture_default_str();
  c->add_option("--spline-degree", correct.spline_degree, "Spline degree")->capture_default_str();
  c->add_flag("--admm", correct.admm, "Solve the fused lasso subproblems by ADMM");
  c->add_option("--out", correct.out, "Corrected wide CSV")->required();
  c->add_option("--model", correct.model_out, "Model JSON (default: <out>.model.json)");
  c->add_option("--config", correct.config, "JSON file of option values");

  CvCliOptions cv;
  auto* v = app.add_subcommand("cv", "Blocked cross-validation over a model grid");
  add_data_options(v, cv.data, false);
  v->add_option("--diff", cv.diff, "Wide CSV of the difference matrix (instead of --x/--y)");
  v->add_option("--ranks", cv.ranks, "Ranks (comma separated)")->delimiter(',');
  v->add_option("--lambdas", cv.lambdas, "Penalties; 0 is the bounded rank model")->delimiter(',');
  v->add_option("--knot-intervals", cv.knot_intervals, "Spline knot spacings in days")->delimiter(',');
  v->add_flag("--no-splines", cv.no_splines, "Leave spline models out of the grid");
  v->add_option("--spline-degree", cv.spline_degree, "Spline degree")->capture_default_str();
  v->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
  v->add_option("--test-block", cv.test_block, "Days per held-out block")->capture_default_str();
  v->add_option("--buffer", cv.buffer, "Days dropped on each side of a held-out block")->capture_default_str();
  v->add_option("--jobs", cv.jobs, "Worker threads (0: all cores)")->capture_default_str();
  v->add_flag("--admm", cv.admm, "Solve the fused lasso subproblems by ADMM");
  v->add_flag("--spline-direct", cv.spline_direct, "Evaluate splines on held-out days instead of interpolating");
  v->add_option("--out", cv.out, "Results CSV")->required();
  v->add_option("--traces", cv.traces, "Component traces CSV (default: <out>.traces.csv)");
  v->add_option("--config", cv.config, "JSON file of option values");

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Write a synthetic low-rank piecewise-constant instance");
  s->add_option("--n", sim.spec.N, "Locations")->capture_default_str();
  s->add_option("--t", sim.spec.T, "Days")->capture_default_str();
  s->add_option("--rank", sim.spec.true_rank, "True rank")->capture_default_str();
  s->add_option("--pieces", sim.spec.pieces, "Constant pieces per component")->capture_default_str();
  s->add_option("--sigma", sim.spec.noise_sigma, "Noise standard deviation")->capture_default_str();
  s->add_option("--seed", sim.spec.seed, "Random seed")->capture_default_str();
  s->add_option("--start", sim.start, "First date")->capture_default_str();
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--config", sim.config, "JSON file of option values");

  BaselineOptions base;
  auto* b = app.add_subcommand("compare-baselines", "Score the BR-1, AL and AC comparison models");
  b->add_option("--x", base.data.x, "Wide CSV of counts to correct")->required();
  b->add_option("--y", base.data.y, "Wide CSV of guide counts")->required();
  b->add_option("--pseudocount", base.data.pseudocount, "Pseudocount")->capture_default_str();
  b->add_option("--out", base.out, "Also write the table to this CSV");
  b->add_option("--config", base.config, "JSON file of option values");

  ComponentOptions comp;
  auto* k = app.add_subcommand("components", "Export the temporal components of a saved model");
  k->add_option("--model", comp.model, "Model JSON")->required();
  k->add_option("--out", comp.out, "Components CSV")->required();
  k->add_option("--loadings", comp.loadings, "Also write the location loadings to this CSV");
  k->add_option("--config", comp.config, "JSON file of option values");

  FetchOptions fetch;
  auto* f = app.add_subcommand("fetch", "Download a long-format signal and pivot it to wide CSV");
  f->add_option("--base-url", fetch.base_url, "Endpoint, optionally with {signal} {start} {end} placeholders")
      ->required();
  f->add_option("--signal", fetch.signal, "Signal name")->required();
  f->add_option("--start", fetch.start, "First date")->required();
  f->add_option("--end", fetch.end, "Last date")->required();
  f->add_option("--cache-dir", fetch.cache_dir, "Payload cache directory");
  f->add_option("--timeout", fetch.timeout, "Seconds")->capture_default_str();
  f->add_option("--out", fetch.out, "Wide CSV")->required();
  f->add_option("--config", fetch.config, "JSON file of option values");

  PivotOptions piv;
  auto* p = app.add_subcommand("pivot", "Convert a long-format CSV or JSON file to wide CSV");
  p->add_option("--in", piv.in, "Long-format file (geo, date, value)")->required();
  p->add_option("--start", piv.start, "First date (default: earliest record)");
  p->add_option("--end", piv.end, "Last date (default: latest record)");
  p->add_option("--out", piv.out, "Wide CSV")->required();
  p->add_option("--config", piv.config, "JSON file of option values");

  try {
    apply_defaults(args, app, env);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (c->parsed()) return run_correct(correct, out);
    if (v->parsed()) return run_cv(cv, out);
    if (s->parsed()) return run_simulate(sim, out);
    if (b->parsed()) return run_compare_baselines(base, out);
    if (k->parsed()) return run_components(comp, out);
    if (f->parsed()) {
      const auto t = transport();
      return run_fetch(fetch, out, *t);
    }
    if (p->parsed()) return run_pivot(piv, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

inline int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return cli_main(std::move(args), std::cout, std::cerr);
}

}  // namespace hetcorr::cli
