#pragma once
#ifndef LFPSQP_CLI_HPP
#define LFPSQP_CLI_HPP

#include "lfpsqp/bench.hpp"
#include "lfpsqp/solver.hpp"
#include "lfpsqp/trace.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lfpsqp::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kMaxIter = 2, kLineSearchFailed = 3 };

struct RunConfig {
  std::string problem;
  Index n = 100;
  std::uint64_t seed = 0;
  double density = 0.02;
  SolveOptions solve;
  std::string trace_path;
  TraceFormat trace_format = TraceFormat::csv;
  std::string x0_path;
};

/// Whitespace-separated decimals; the count must equal n.
inline Vec read_vector_file(const std::string& path, Index n) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::invalid_argument, "cannot open " + path);
  std::vector<double> vals;
  std::string tok;
  while (is >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw Error(Errc::invalid_argument, "bad number '" + tok + "' in " + path);
    vals.push_back(v);
  }
  if (static_cast<Index>(vals.size()) != n)
    throw Error(Errc::invalid_argument, path + " holds " + std::to_string(vals.size()) + " values, expected " +
                                            std::to_string(n));
  return Eigen::Map<const Vec>(vals.data(), n);
}

inline int exit_code_for(SolveStatus s) {
  if (is_converged(s)) return kOk;
  return s == SolveStatus::max_iter ? kMaxIter : kLineSearchFailed;
}

inline std::string summary_line(const SolveResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "status=%s iterations=%ld f_final=%.17g proj_grad_norm=%.6e feasibility=%.6e",
                std::string(to_string(r.status)).c_str(), r.iterations, r.f_final, r.proj_grad_norm,
                r.constraint_violation);
  return buf;
}

/// Solves one configured problem; returns the process exit code.
inline int run_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const bench::BenchProblem* entry = bench::find_problem(cfg.problem);
  if (!entry) {
    err << "error: unknown problem '" << cfg.problem << "'; valid problems: " << bench::registry_names() << '\n';
    return kUsage;
  }
  std::vector<TraceRecord> rows;
  auto flush_partial = [&]() {
    if (cfg.trace_path.empty()) return;
    try {
      write_trace(rows, cfg.trace_path, cfg.trace_format);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
    }
  };
  try {
    bench::BenchInstance inst = entry->build({cfg.n, cfg.seed, cfg.density});
    Vec x0 = cfg.x0_path.empty() ? inst.x0 : read_vector_file(cfg.x0_path, inst.spec.n);
    SolveOptions opts = cfg.solve;
    opts.on_record = [&rows](const TraceRecord& r) { rows.push_back(r); };
    SolveResult result = solve(inst.spec, x0, opts);
    if (!cfg.trace_path.empty()) write_trace(result.trace, cfg.trace_path, cfg.trace_format);
    out << summary_line(result) << '\n';
    return exit_code_for(result.status);
  } catch (const Error& e) {
    flush_partial();
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kUsage;
  }
}

/// Parses argv and dispatches subcommands. `solve` is the only subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Feasible SQP solver for the bundled benchmark problems", "lfpsqp"};
  app.require_subcommand(1);
  CLI::App* sub = app.add_subcommand("solve", "solve a benchmark problem");

  RunConfig cfg;
  SolveOptions& so = cfg.solve;
  std::string direction = "newton";
  std::string retraction = "projection";
  std::string linesearch = "armijo";
  std::string trace_format = "csv";

  sub->add_option("--problem", cfg.problem, "benchmark name (" + bench::registry_names() + ")")->required();
  sub->add_option("--n", cfg.n, "problem dimension")->check(CLI::PositiveNumber);
  sub->add_option("--seed", cfg.seed, "random seed");
  sub->add_option("--density", cfg.density, "sparse matrix density")->check(CLI::Range(1e-12, 2.0));
  sub->add_option("--direction", direction, "gradient or newton")
      ->check(CLI::IsMember({"gradient", "newton"}));
  sub->add_option("--retraction", retraction, "projection or quasi-newton")
      ->check(CLI::IsMember({"projection", "quasi-newton"}));
  sub->add_option("--linesearch", linesearch, "armijo or golden")->check(CLI::IsMember({"armijo", "golden"}));
  sub->add_option("--alpha0", so.linesearch.alpha0, "initial step length")->check(CLI::PositiveNumber);
  sub->add_option("--eps-c", so.eps_c, "constraint tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--eps-rank", so.eps_rank, "relative rank tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--kappa", so.kappa, "inexact-Newton forcing constant")->check(CLI::PositiveNumber);
  sub->add_option("--mu0", so.mu0, "initial penalty of the projection retraction")->check(CLI::PositiveNumber);
  sub->add_option("--ftol", so.ftol, "objective change tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--gtol", so.gtol, "projected gradient tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--xtol", so.xtol, "step length tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--max-iter", so.max_iter, "outer iteration limit")->check(CLI::NonNegativeNumber);
  sub->add_option("--trace", cfg.trace_path, "trace output path");
  sub->add_option("--trace-format", trace_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--x0", cfg.x0_path, "file of whitespace-separated starting values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  so.direction = direction == "gradient" ? DirectionMethod::gradient : DirectionMethod::newton;
  so.retraction = retraction == "quasi-newton" ? RetractionVariant::quasi_newton : RetractionVariant::projection;
  so.linesearch.method = linesearch == "golden" ? LineSearchMethod::golden : LineSearchMethod::armijo;
  cfg.trace_format = trace_format == "json" ? TraceFormat::json : TraceFormat::csv;
  return run_solve(cfg, out, err);
}

}  // namespace lfpsqp::cli

#endif  // LFPSQP_CLI_HPP
