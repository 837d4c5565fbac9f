#pragma once

// Generic signal download: GET a long-format CSV or JSON payload, cache it on disk, pivot it wide.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetcorr/core.hpp"
#include "hetcorr/io/wide_csv.hpp"

namespace hetcorr::io {

struct FetchSpec {
  // May contain {signal}, {start}, {end} (ISO dates) and {start_compact}, {end_compact}
  // (YYYYMMDD). Without placeholders the query string signal=..&start=..&end=.. is appended.
  std::string base_url;
  std::string signal_name;
  Date start{};
  Date end{};
  std::filesystem::path cache_dir;
  int timeout_seconds = 30;

  void validate() const {
    if (base_url.empty()) throw ArgumentError("fetch needs a base URL");
    if (end < start) throw ArgumentError("fetch range: start " + format_date(start) + " is after end " + format_date(end));
  }
};

/// Issues GET requests. Implementations throw FetchError on failure.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string get(const std::string& url, int timeout_seconds) = 0;
};

inline std::string compact_date(Date d) {
  std::string s = format_date(d);
  s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
  return s;
}

inline std::string request_url(const FetchSpec& spec) {
  std::string url = spec.base_url;
  auto replace_all = [&url](const std::string& key, const std::string& value) {
    bool hit = false;
    for (std::size_t pos; (pos = url.find(key)) != std::string::npos;) {
      url.replace(pos, key.size(), value);
      hit = true;
    }
    return hit;
  };
  bool templated = false;
  templated |= replace_all("{signal}", spec.signal_name);
  templated |= replace_all("{start_compact}", compact_date(spec.start));
  templated |= replace_all("{end_compact}", compact_date(spec.end));
  templated |= replace_all("{start}", format_date(spec.start));
  templated |= replace_all("{end}", format_date(spec.end));
  if (!templated) {
    url += url.find('?') == std::string::npos ? '?' : '&';
    url += "signal=" + spec.signal_name + "&start=" + format_date(spec.start) + "&end=" + format_date(spec.end);
  }
  return url;
}

/// FNV-1a over (base_url, signal, start, end).
inline std::string cache_key(const FetchSpec& spec) {
  const std::string material =
      spec.base_url + '\n' + spec.signal_name + '\n' + format_date(spec.start) + '\n' + format_date(spec.end);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : material) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Records from a JSON array of objects, or an object holding one under "epidata" or "data".
inline std::vector<LongRecord> parse_long_json(const std::string& payload) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::exception& e) {
    throw ParseError(std::string("JSON payload: ") + e.what());
  }
  const json* rows = &j;
  if (j.is_object()) {
    if (j.contains("epidata")) rows = &j["epidata"];
    else if (j.contains("data")) rows = &j["data"];
    else throw ParseError("JSON payload has no 'epidata' or 'data' array");
  }
  if (!rows->is_array()) throw ParseError("JSON payload rows must be an array");
  auto field = [](const json& r, std::initializer_list<const char*> names) -> const json* {
    for (const char* n : names)
      if (r.contains(n)) return &r.at(n);
    return nullptr;
  };
  std::vector<LongRecord> out;
  std::size_t idx = 0;
  for (const json& r : *rows) {
    const std::string where = "record " + std::to_string(idx++);
    const json* g = field(r, {"geo_value", "geo_id", "geo"});
    const json* d = field(r, {"time_value", "date"});
    const json* v = field(r, {"value"});
    if (!g || !d || !v) throw ParseError(where + ": needs geo, date and value fields");
    const std::string dtext = d->is_string() ? d->get<std::string>() : std::to_string(d->get<std::int64_t>());
    const auto date = parse_date(dtext);
    if (!date) throw ParseError(where + ": bad date '" + dtext + "'");
    if (!v->is_number()) throw ParseError(where + ": value is not a number");
    out.push_back({g->is_string() ? g->get<std::string>() : g->dump(), *date, v->get<double>()});
  }
  return out;
}

inline std::vector<LongRecord> parse_long_payload(const std::string& payload) {
  const auto pos = payload.find_first_not_of(" \t\r\n");
  if (pos != std::string::npos && (payload[pos] == '{' || payload[pos] == '[')) return parse_long_json(payload);
  std::istringstream in(payload);
  return parse_long_csv(in);
}

/// Downloads (or reads from cache) and pivots to a wide matrix over spec.start..spec.end.
inline SignalMatrix fetch_signal(const FetchSpec& spec, Transport& transport) {
  spec.validate();
  std::filesystem::path cached;
  std::string payload;
  bool hit = false;
  if (!spec.cache_dir.empty()) {
    cached = spec.cache_dir / (cache_key(spec) + ".payload");
    if (std::filesystem::exists(cached)) {
      std::ifstream in(cached, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      payload = ss.str();
      hit = true;
    }
  }
  if (!hit) {
    payload = transport.get(request_url(spec), spec.timeout_seconds);
    if (!spec.cache_dir.empty()) {
      std::filesystem::create_directories(spec.cache_dir);
      const std::filesystem::path tmp = cached.string() + ".tmp";
      {
        std::ofstream out(tmp, std::ios::binary);
        out << payload;
      }
      std::filesystem::rename(tmp, cached);
    }
  }
  return pivot_long(parse_long_payload(payload), spec.start, spec.end);
}

}  // namespace hetcorr::io
