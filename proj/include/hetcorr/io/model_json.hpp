#pragma once

// Model JSON: {method, hyper, locations, dates, A, B, spline: {degree, knots} | null,
// objective, scale, transform, software_version, seed?}.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetcorr/core.hpp"
#include "hetcorr/spline.hpp"
#include "hetcorr/transforms.hpp"
#include "hetcorr/version.hpp"

namespace hetcorr::io {

using nlohmann::json;

/// A model together with the labels and transform it was fitted under.
struct StoredModel {
  CorrectionModel model;
  std::vector<std::string> locations;
  std::vector<Date> dates;
  TransformSpec transform = TransformSpec::additive();
  std::optional<std::uint64_t> seed;
};

inline json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline MatrixXd matrix_from_json(const json& j, Index rows, Index cols, const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw ParseError(std::string("model field ") + name + ": expected " + std::to_string(rows) + " rows");
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw ParseError(std::string("model field ") + name + ": row " + std::to_string(i) + " must have " +
                       std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline json model_to_json(const StoredModel& s) {
  const CorrectionModel& m = s.model;
  json j;
  j["method"] = to_string(m.method);
  j["hyper"] = {{"rank", m.hyper.rank},
                {"lambda", m.hyper.lambda},
                {"knot_interval_days", m.hyper.knot_interval_days},
                {"spline_degree", m.hyper.spline_degree}};
  j["locations"] = s.locations;
  json dates = json::array();
  for (const Date& d : s.dates) dates.push_back(format_date(d));
  j["dates"] = std::move(dates);
  j["A"] = matrix_to_json(m.A);
  j["B"] = matrix_to_json(m.B);
  if (m.spline) j["spline"] = {{"degree", m.spline->degree}, {"knots", m.spline->knots}};
  else j["spline"] = nullptr;
  j["objective"] = m.objective_value;
  j["scale"] = to_string(m.scale);
  j["transform"] = {{"kind", s.transform.kind == TransformKind::additive ? "additive" : "multiplicative"},
                    {"pseudocount", s.transform.pseudocount}};
  j["software_version"] = kVersion;
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

inline StoredModel model_from_json(const json& j) {
  try {
    StoredModel s;
    CorrectionModel& m = s.model;
    m.method = method_from_string(j.at("method").get<std::string>());
    const json& h = j.at("hyper");
    m.hyper.rank = h.at("rank").get<int>();
    m.hyper.lambda = h.at("lambda").get<double>();
    m.hyper.knot_interval_days = h.at("knot_interval_days").get<int>();
    m.hyper.spline_degree = h.at("spline_degree").get<int>();
    m.hyper.validate();
    s.locations = j.at("locations").get<std::vector<std::string>>();
    for (const auto& d : j.at("dates")) {
      const auto parsed = parse_date(d.get<std::string>());
      if (!parsed) throw ParseError("model dates: bad date '" + d.get<std::string>() + "'");
      s.dates.push_back(*parsed);
    }
    const Index N = static_cast<Index>(s.locations.size());
    const Index T = static_cast<Index>(s.dates.size());
    const Index K = m.hyper.rank;
    m.A = matrix_from_json(j.at("A"), N, K, "A");
    Index brows = T;
    if (m.method == Method::basis_spline) {
      const json& sp = j.at("spline");
      if (sp.is_null()) throw ParseError("basis spline model needs a spline block");
      SplineBasis basis;
      basis.degree = sp.at("degree").get<int>();
      basis.knots = sp.at("knots").get<std::vector<double>>();
      basis.C = evaluate_spline_basis(basis.knots, basis.degree, T);
      brows = basis.C.rows();
      m.spline = std::move(basis);
    }
    m.B = matrix_from_json(j.at("B"), brows, K, "B");
    m.objective_value = j.at("objective").get<double>();
    m.scale = j.value("scale", std::string("linear")) == "log" ? Scale::log : Scale::linear;
    if (j.contains("transform")) {
      const json& tr = j.at("transform");
      s.transform.kind =
          tr.at("kind").get<std::string>() == "multiplicative" ? TransformKind::multiplicative : TransformKind::additive;
      s.transform.pseudocount = tr.at("pseudocount").get<double>();
    }
    if (j.contains("seed") && !j.at("seed").is_null()) s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

inline void save_model(const std::string& path, const StoredModel& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << model_to_json(s).dump(2) << '\n';
}

inline StoredModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hetcorr::io
