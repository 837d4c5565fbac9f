#pragma once

// Wide CSV: header "geo_id,<date>,<date>,..." then one row per location.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hetcorr/core.hpp"

namespace hetcorr::io {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

/// Splits one CSV record; double quotes may wrap a field and "" escapes a quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

inline SignalMatrix parse_wide_csv(std::istream& in, Scale scale = Scale::linear) {
  const std::vector<std::string> lines = read_lines(in);
  if (lines.empty()) throw ParseError("empty file");
  const std::vector<std::string> header = split_csv_line(lines[0]);
  if (header.empty() || header[0] != "geo_id") throw ParseError("line 1: first header field must be 'geo_id'");
  if (header.size() < 2) throw ParseError("line 1: no date columns");

  std::vector<Date> dates;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto d = parse_date(header[c]);
    if (!d) throw ParseError("line 1, column " + std::to_string(c + 1) + ": '" + header[c] + "' is not a date");
    if (!dates.empty()) {
      if (*d <= dates.back())
        throw ParseError("line 1, column " + std::to_string(c + 1) + ": dates must increase");
      if (*d - dates.back() != std::chrono::days{1})
        throw ParseError("line 1, column " + std::to_string(c + 1) + ": gap in dates between " +
                         format_date(dates.back()) + " and " + format_date(*d) + " (missing " +
                         format_date(dates.back() + std::chrono::days{1}) + ")");
    }
    dates.push_back(*d);
  }

  const std::size_t ncols = dates.size();
  MatrixXd values(static_cast<Index>(lines.size() - 1), static_cast<Index>(ncols));
  std::vector<std::string> locs;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> fields = split_csv_line(lines[r]);
    const std::string where = "line " + std::to_string(r + 1);
    if (fields.size() != ncols + 1)
      throw ParseError(where + ": expected " + std::to_string(ncols + 1) + " fields, found " +
                       std::to_string(fields.size()));
    if (fields[0].empty()) throw ParseError(where + ", column 1: empty geo_id");
    if (!seen.insert(fields[0]).second) throw ParseError(where + ": duplicate geo_id '" + fields[0] + "'");
    locs.push_back(fields[0]);
    for (std::size_t c = 0; c < ncols; ++c) {
      double v = 0.0;
      if (!parse_double(fields[c + 1], v))
        throw ParseError(where + ", column " + std::to_string(c + 2) + ": '" + fields[c + 1] + "' is not a number");
      if (!std::isfinite(v))
        throw ParseError(where + ", column " + std::to_string(c + 2) + ": non-finite value");
      values(static_cast<Index>(r - 1), static_cast<Index>(c)) = v;
    }
  }
  if (locs.empty()) throw ParseError("no location rows");
  return SignalMatrix(std::move(values), std::move(locs), std::move(dates), scale);
}

inline SignalMatrix read_wide_csv(const std::string& path, Scale scale = Scale::linear) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return parse_wide_csv(in, scale);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_wide_csv(std::ostream& out, const SignalMatrix& m) {
  out << "geo_id";
  for (const Date& d : m.dates()) out << ',' << format_date(d);
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    out << csv_field(m.locations()[static_cast<std::size_t>(i)]);
    for (Index t = 0; t < m.cols(); ++t) out << ',' << format_double(m.values()(i, t));
    out << '\n';
  }
}

inline void write_wide_csv(const std::string& path, const SignalMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_wide_csv(out, m);
  if (!out) throw Error("write failed for '" + path + "'");
}

/// Unlabelled numeric matrix (factor exports).
inline void write_matrix_csv(const std::string& path, const MatrixXd& m, const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << csv_field(header[j]);
  if (!header.empty()) out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

struct LongRecord {
  std::string geo;
  Date date;
  double value = 0.0;
};

/// Pivots (geo, date, value) records to a wide matrix covering `first..last` (or the observed
/// range when not given). Every (geo, date) pair must occur exactly once.
inline SignalMatrix pivot_long(const std::vector<LongRecord>& records, std::optional<Date> first = std::nullopt,
                               std::optional<Date> last = std::nullopt, Scale scale = Scale::linear) {
  if (records.empty()) throw AlignmentError("no records to pivot");
  Date lo = records.front().date;
  Date hi = records.front().date;
  std::set<std::string> geos;
  for (const auto& r : records) {
    lo = std::min(lo, r.date);
    hi = std::max(hi, r.date);
    geos.insert(r.geo);
  }
  if (first) lo = *first;
  if (last) hi = *last;
  if (hi < lo) throw ArgumentError("pivot range is empty");
  const std::vector<std::string> locs(geos.begin(), geos.end());
  std::map<std::string, Index> row;
  for (std::size_t i = 0; i < locs.size(); ++i) row[locs[i]] = static_cast<Index>(i);
  const Index T = (hi - lo).count() + 1;
  const Index N = static_cast<Index>(locs.size());
  MatrixXd values = MatrixXd::Constant(N, T, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> filled(static_cast<std::size_t>(N * T), 0);
  for (const auto& r : records) {
    if (r.date < lo || r.date > hi) continue;
    const Index i = row[r.geo];
    const Index t = (r.date - lo).count();
    char& f = filled[static_cast<std::size_t>(i * T + t)];
    if (f) throw AlignmentError("duplicate record for (" + r.geo + ", " + format_date(r.date) + ")");
    f = 1;
    if (!std::isfinite(r.value))
      throw AlignmentError("non-finite value for (" + r.geo + ", " + format_date(r.date) + ")");
    values(i, t) = r.value;
  }
  std::vector<std::string> missing;
  std::size_t missing_count = 0;
  for (Index i = 0; i < N; ++i)
    for (Index t = 0; t < T; ++t)
      if (!filled[static_cast<std::size_t>(i * T + t)]) {
        ++missing_count;
        if (missing.size() < 20) missing.push_back("(" + locs[i] + ", " + format_date(lo + std::chrono::days{t}) + ")");
      }
  if (missing_count > 0) {
    std::string msg = "non-rectangular data: " + std::to_string(missing_count) + " missing (geo, date) pairs:";
    for (const auto& m : missing) msg += " " + m;
    if (missing_count > missing.size()) msg += " ...";
    throw AlignmentError(msg);
  }
  std::vector<Date> dates;
  for (Index t = 0; t < T; ++t) dates.push_back(lo + std::chrono::days{t});
  return SignalMatrix(std::move(values), locs, std::move(dates), scale);
}

namespace detail {

inline int find_column(const std::vector<std::string>& header, std::initializer_list<const char*> names) {
  for (const char* n : names)
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == n) return static_cast<int>(j);
  return -1;
}

}  // namespace detail

/// Long CSV with a header naming geo (geo_value | geo_id | geo), date (time_value | date) and value columns.
inline std::vector<LongRecord> parse_long_csv(std::istream& in) {
  const std::vector<std::string> lines = read_lines(in);
  if (lines.empty()) throw ParseError("empty long-format payload");
  const std::vector<std::string> header = split_csv_line(lines[0]);
  const int gc = detail::find_column(header, {"geo_value", "geo_id", "geo"});
  const int dc = detail::find_column(header, {"time_value", "date"});
  const int vc = detail::find_column(header, {"value"});
  if (gc < 0 || dc < 0 || vc < 0) throw ParseError("line 1: long format needs geo, date and value columns");
  std::vector<LongRecord> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = split_csv_line(lines[r]);
    const std::string where = "line " + std::to_string(r + 1);
    if (f.size() != header.size()) throw ParseError(where + ": ragged row");
    const auto d = parse_date(f[static_cast<std::size_t>(dc)]);
    if (!d) throw ParseError(where + ", column " + std::to_string(dc + 1) + ": bad date");
    double v = 0.0;
    if (!parse_double(f[static_cast<std::size_t>(vc)], v) || !std::isfinite(v))
      throw ParseError(where + ", column " + std::to_string(vc + 1) + ": bad value");
    out.push_back({f[static_cast<std::size_t>(gc)], *d, v});
  }
  return out;
}

}  // namespace hetcorr::io
