#pragma once
#ifndef LFPSQP_TRACE_HPP
#define LFPSQP_TRACE_HPP

#include "lfpsqp/types.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lfpsqp {

/// One row per outer iteration; row 0 describes the starting point.
struct TraceRecord {
  long iter = 0;
  double f = 0.0;
  double proj_grad_norm = 0.0;
  double constraint_viol_inf = 0.0;
  double step_norm = 0.0;
  double alpha = 0.0;
  std::string direction_kind = "initial";
  long cg_iters = 0;
  long retract_inner_iters = 0;
  long cum_f_evals = 0;
  long cum_grad_evals = 0;
  long cum_jac_evals = 0;
  long cum_w_actions = 0;

  bool operator==(const TraceRecord&) const = default;
};

enum class TraceFormat { csv, json };

inline constexpr std::array<std::string_view, 13> kTraceColumns = {
    "iter",           "f",          "proj_grad_norm", "constraint_viol_inf", "step_norm",
    "alpha",          "direction_kind", "cg_iters",   "retract_inner_iters", "cum_f_evals",
    "cum_grad_evals", "cum_jac_evals",  "cum_w_actions"};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  // strtod handles inf/nan spellings written by %.17g
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error(Errc::invalid_argument, "bad number in trace: " + s);
  return v;
}

inline long parse_long(const std::string& s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(Errc::invalid_argument, "bad integer in trace: " + s);
  return v;
}

}  // namespace detail

inline std::string csv_header() {
  std::string out;
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) {
    if (i) out += ',';
    out += kTraceColumns[i];
  }
  return out;
}

inline std::string to_csv_row(const TraceRecord& r) {
  using detail::format_double;
  std::ostringstream os;
  os << r.iter << ',' << format_double(r.f) << ',' << format_double(r.proj_grad_norm) << ','
     << format_double(r.constraint_viol_inf) << ',' << format_double(r.step_norm) << ','
     << format_double(r.alpha) << ',' << r.direction_kind << ',' << r.cg_iters << ','
     << r.retract_inner_iters << ',' << r.cum_f_evals << ',' << r.cum_grad_evals << ','
     << r.cum_jac_evals << ',' << r.cum_w_actions;
  return os.str();
}

inline std::string to_csv(const std::vector<TraceRecord>& records) {
  std::string out = csv_header() + '\n';
  for (const auto& r : records) out += to_csv_row(r) + '\n';
  return out;
}

inline nlohmann::json to_json(const TraceRecord& r) {
  // Doubles go through nlohmann's shortest round-trip formatting.
  return nlohmann::json{{"iter", r.iter},
                        {"f", r.f},
                        {"proj_grad_norm", r.proj_grad_norm},
                        {"constraint_viol_inf", r.constraint_viol_inf},
                        {"step_norm", r.step_norm},
                        {"alpha", r.alpha},
                        {"direction_kind", r.direction_kind},
                        {"cg_iters", r.cg_iters},
                        {"retract_inner_iters", r.retract_inner_iters},
                        {"cum_f_evals", r.cum_f_evals},
                        {"cum_grad_evals", r.cum_grad_evals},
                        {"cum_jac_evals", r.cum_jac_evals},
                        {"cum_w_actions", r.cum_w_actions}};
}

inline std::string to_json_text(const std::vector<TraceRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr.dump(1) + '\n';
}

inline std::vector<TraceRecord> parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != csv_header())
    throw Error(Errc::invalid_argument, "trace CSV header mismatch");
  std::vector<TraceRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != kTraceColumns.size())
      throw Error(Errc::invalid_argument, "trace CSV row has " + std::to_string(fields.size()) + " fields");
    TraceRecord r;
    r.iter = detail::parse_long(fields[0]);
    r.f = detail::parse_double(fields[1]);
    r.proj_grad_norm = detail::parse_double(fields[2]);
    r.constraint_viol_inf = detail::parse_double(fields[3]);
    r.step_norm = detail::parse_double(fields[4]);
    r.alpha = detail::parse_double(fields[5]);
    r.direction_kind = fields[6];
    r.cg_iters = detail::parse_long(fields[7]);
    r.retract_inner_iters = detail::parse_long(fields[8]);
    r.cum_f_evals = detail::parse_long(fields[9]);
    r.cum_grad_evals = detail::parse_long(fields[10]);
    r.cum_jac_evals = detail::parse_long(fields[11]);
    r.cum_w_actions = detail::parse_long(fields[12]);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<TraceRecord> parse_json(const std::string& text) {
  const nlohmann::json arr = nlohmann::json::parse(text);
  if (!arr.is_array()) throw Error(Errc::invalid_argument, "trace JSON must be an array");
  std::vector<TraceRecord> out;
  for (const auto& o : arr) {
    TraceRecord r;
    r.iter = o.at("iter").get<long>();
    r.f = o.at("f").get<double>();
    r.proj_grad_norm = o.at("proj_grad_norm").get<double>();
    r.constraint_viol_inf = o.at("constraint_viol_inf").get<double>();
    r.step_norm = o.at("step_norm").get<double>();
    r.alpha = o.at("alpha").get<double>();
    r.direction_kind = o.at("direction_kind").get<std::string>();
    r.cg_iters = o.at("cg_iters").get<long>();
    r.retract_inner_iters = o.at("retract_inner_iters").get<long>();
    r.cum_f_evals = o.at("cum_f_evals").get<long>();
    r.cum_grad_evals = o.at("cum_grad_evals").get<long>();
    r.cum_jac_evals = o.at("cum_jac_evals").get<long>();
    r.cum_w_actions = o.at("cum_w_actions").get<long>();
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string format_trace(const std::vector<TraceRecord>& records, TraceFormat format) {
  return format == TraceFormat::csv ? to_csv(records) : to_json_text(records);
}

inline std::vector<TraceRecord> parse_trace(const std::string& text, TraceFormat format) {
  return format == TraceFormat::csv ? parse_csv(text) : parse_json(text);
}

/// Writes the whole trace, replacing any existing file.
inline void write_trace(const std::vector<TraceRecord>& records, const std::string& path, TraceFormat format) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::invalid_argument, "cannot open trace file " + path);
  os << format_trace(records, format);
  if (!os) throw Error(Errc::invalid_argument, "failed writing trace file " + path);
}

}  // namespace lfpsqp

#endif  // LFPSQP_TRACE_HPP
