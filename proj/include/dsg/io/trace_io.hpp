#pragma once

// Trace serialization. CSV columns:
//   k, q_k, r_k, s_k, sigma_z, Az_norm, c, y_0..y_{m-1}, x_0..x_{n-1}, certified
// Reals are written with 17 significant digits, so parse(emit(t)) == t
// bit-for-bit. JSON Lines uses the same flat keys, one record per line.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "dsg/deflected_subgradient.hpp"

namespace dsg::io {

enum class TraceFormat { Csv, JsonLines };

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  if (b < e && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) throw Error(ErrorCode::IoError, context + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> trace_columns(std::size_t m, std::size_t n) {
  std::vector<std::string> cols{"k", "q_k", "r_k", "s_k", "sigma_z", "Az_norm", "c"};
  for (std::size_t i = 0; i < m; ++i) cols.push_back("y_" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i) cols.push_back("x_" + std::to_string(i));
  cols.push_back("certified");
  return cols;
}

namespace detail {

inline std::vector<std::string> record_fields(const IterationRecord& r) {
  std::vector<std::string> f{std::to_string(r.k),       format_double(r.q_k), format_double(r.r_k),     format_double(r.s_k),
                             format_double(r.sigma_z), format_double(r.Az_norm), format_double(r.c)};
  for (double v : r.y) f.push_back(format_double(v));
  for (double v : r.x) f.push_back(format_double(v));
  f.push_back(r.certified ? "1" : "0");
  return f;
}

}  // namespace detail

/// m and n are needed for the header of an empty trace.
inline std::string render_trace(const Trace& trace, std::size_t m, std::size_t n, TraceFormat format) {
  const auto cols = trace_columns(m, n);
  std::string out;
  if (format == TraceFormat::Csv) {
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += '\n';
  }
  for (const auto& r : trace) {
    if (r.y.size() != m || r.x.size() != n) throw Error(ErrorCode::DimensionMismatch, "trace record has inconsistent dimensions");
    const auto f = detail::record_fields(r);
    if (format == TraceFormat::Csv) {
      for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    } else {
      out += '{';
      for (std::size_t i = 0; i < f.size(); ++i) {
        out += (i ? ",\"" : "\"") + cols[i] + "\":";
        out += i + 1 == f.size() ? (r.certified ? "true" : "false") : f[i];
      }
      out += '}';
    }
    out += '\n';
  }
  return out;
}

/// Writes to `path` via a sibling temporary file and a rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    os << contents;
    os.flush();
    if (!os) throw Error(ErrorCode::IoError, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " to " + path.string());
  }
}

inline void emit_trace(const RunOutcome& outcome, std::size_t m, std::size_t n, const std::filesystem::path& path,
                       TraceFormat format) {
  write_atomic(path, render_trace(outcome.trace, m, n, format));
}

struct ParsedTrace {
  Trace trace;
  std::size_t m = 0;
  std::size_t n = 0;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline void dims_from_columns(const std::vector<std::string>& cols, std::size_t& m, std::size_t& n, const std::string& ctx) {
  m = n = 0;
  for (const auto& c : cols) {
    if (c.rfind("y_", 0) == 0) ++m;
    if (c.rfind("x_", 0) == 0) ++n;
  }
  if (cols != trace_columns(m, n)) throw Error(ErrorCode::IoError, ctx + ": unexpected trace columns");
}

inline IterationRecord record_from_values(const std::vector<double>& v, bool certified, std::size_t m, std::size_t n) {
  IterationRecord r;
  r.k = static_cast<std::size_t>(v[0]);
  r.q_k = v[1];
  r.r_k = v[2];
  r.s_k = v[3];
  r.sigma_z = v[4];
  r.Az_norm = v[5];
  r.c = v[6];
  r.y.assign(v.begin() + 7, v.begin() + 7 + static_cast<std::ptrdiff_t>(m));
  r.x.assign(v.begin() + 7 + static_cast<std::ptrdiff_t>(m), v.begin() + 7 + static_cast<std::ptrdiff_t>(m + n));
  r.certified = certified;
  return r;
}

}  // namespace detail

inline ParsedTrace parse_trace(const std::string& text, TraceFormat format, const std::string& ctx = "trace") {
  ParsedTrace out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  if (format == TraceFormat::Csv) {
    if (!std::getline(is, line)) throw Error(ErrorCode::IoError, ctx + ": missing header");
    ++lineno;
    std::vector<std::string> cols;
    for (auto c : detail::split(line, ',')) cols.emplace_back(c);
    detail::dims_from_columns(cols, out.m, out.n, ctx);
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = detail::split(line, ',');
      const std::string where = ctx + ":" + std::to_string(lineno);
      if (f.size() != cols.size()) throw Error(ErrorCode::IoError, where + ": expected " + std::to_string(cols.size()) + " fields");
      std::vector<double> v;
      for (std::size_t i = 0; i + 1 < f.size(); ++i) v.push_back(parse_double(f[i], where));
      if (f.back() != "0" && f.back() != "1") throw Error(ErrorCode::IoError, where + ": certified must be 0 or 1");
      out.trace.push_back(detail::record_from_values(v, f.back() == "1", out.m, out.n));
    }
    return out;
  }
  bool dims_known = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = ctx + ":" + std::to_string(lineno);
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::IoError, where + ": " + e.what());
    }
    std::vector<std::string> cols;
    for (auto it = j.begin(); it != j.end(); ++it) cols.push_back(it.key());
    std::size_t m = 0, n = 0;
    detail::dims_from_columns(cols, m, n, where);
    if (dims_known && (m != out.m || n != out.n)) throw Error(ErrorCode::IoError, where + ": dimensions change mid-trace");
    out.m = m;
    out.n = n;
    dims_known = true;
    std::vector<double> v;
    for (std::size_t i = 0; i + 1 < cols.size(); ++i) {
      if (!j[cols[i]].is_number()) throw Error(ErrorCode::IoError, where + ": field " + cols[i] + " is not a number");
      v.push_back(j[cols[i]].get<double>());
    }
    if (!j["certified"].is_boolean()) throw Error(ErrorCode::IoError, where + ": certified must be a boolean");
    out.trace.push_back(detail::record_from_values(v, j["certified"].get<bool>(), m, n));
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline TraceFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".json" ? TraceFormat::JsonLines : TraceFormat::Csv;
}

}  // namespace dsg::io
