// dsg: run the deflected subgradient method from a JSON config, verify
// traces, list the problem catalog, and report duality gaps.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsg/io/config.hpp"
#include "dsg/io/report.hpp"
#include "dsg/io/trace_io.hpp"
#include "dsg/verify.hpp"

namespace {

using namespace dsg;
using namespace dsg::io;

std::optional<std::uint64_t> seed_from_env() {
  const char* s = std::getenv("DSG_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (errno != 0 || *end != '\0' || s[0] == '-') throw Error(ErrorCode::ConfigError, "DSG_SEED: expected a nonnegative integer, got '" + std::string(s) + "'");
  return static_cast<std::uint64_t>(v);
}

AugmentedLagrangian build(const RunConfig& cfg) {
  auto [A, sigma] = make_lagrangian(cfg.lagrangian, cfg.problem.instance.constraint_dimension(), cfg.seed);
  return AugmentedLagrangian(cfg.problem.instance, std::move(A), std::move(sigma));
}

/// Throws ConfigError naming the first failed assumption.
void require_assumptions(const AugmentedLagrangian& L, std::uint64_t seed) {
  const auto rep = validate_assumptions(L.problem(), L.deflection(), L.sigma(), 10'000, seed);
  for (const auto& c : rep.checks)
    if (!c.passed)
      throw Error(ErrorCode::ConfigError, "$.lagrangian: assumption " + c.name + " fails for this (A, sigma) pair (worst " +
                                              std::to_string(c.worst) + ")" + (c.detail.empty() ? "" : "; " + c.detail));
}

std::optional<InitReport> init_advisory(const RunConfig& cfg, const AugmentedLagrangian& L) {
  if (L.sigma().coercivity == Coercivity::Coercive) return validate_init(L.sigma(), cfg.dsg.c0, {cfg.init.c_hat, 0.0, 0.0, std::nullopt, 0.0});
  const auto s_level = cfg.init.s_level ? cfg.init.s_level : cfg.problem.analytic_MP;
  if (!s_level) return std::nullopt;
  const double q00 = oracle_value(L, {cfg.dsg.y0, cfg.init.c_hat}, verification_oracle(cfg));
  return validate_init(L.sigma(), cfg.dsg.c0, {cfg.init.c_hat, q00, *s_level, std::nullopt, cfg.dsg.r.at(0)});
}

void write_report(const std::optional<std::string>& path, const OrderedJson& report) {
  const std::string text = report.dump(2) + "\n";
  if (path) write_atomic(*path, text);
  else std::cout << text;
}

int cmd_run(const std::string& config_path) {
  const RunConfig cfg = load_config(config_path, seed_from_env());
  const AugmentedLagrangian L = build(cfg);
  require_assumptions(L, cfg.seed);

  const auto init = init_advisory(cfg, L);
  if (init && !init->passes) std::cerr << "warning: " << init->message << "\n";

  const RunOutcome outcome = run(L, cfg.dsg, cfg.subsolver);
  if (cfg.output.trace_path)
    emit_trace(outcome, L.problem().constraint_dimension(), L.problem().dimension(), *cfg.output.trace_path, cfg.output.format);

  const auto verdicts = run_checks(cfg.checks, outcome, L, cfg);
  const int code = exit_code(outcome.status, verdicts);
  const auto report = run_report(cfg.problem.id, outcome, init, verdicts, code);
  if (cfg.output.report_path) write_report(cfg.output.report_path, report);

  std::cerr << to_string(outcome.status) << " after " << outcome.trace.size() << " iterations; best objective "
            << format_double(outcome.best_objective) << "\n";
  for (const auto& v : verdicts)
    std::cerr << "  " << v.claim_id << ": " << (v.holds ? "holds" : "FAILS") << (v.downgraded ? " (downgraded)" : "")
              << ", worst violation " << format_double(v.worst_violation) << "\n";
  return code;
}

int cmd_verify(const std::string& trace_path, const std::vector<std::string>& checks, const std::optional<std::string>& config_path,
               double alpha, const std::optional<std::string>& report_path) {
  const auto parsed = parse_trace(read_file(trace_path), format_for_path(trace_path), trace_path);
  RunOutcome outcome;
  outcome.trace = parsed.trace;

  for (const auto& id : checks)
    if (std::find(known_checks().begin(), known_checks().end(), id) == known_checks().end())
      throw Error(ErrorCode::ConfigError, "--checks: unknown check '" + id + "'");

  std::vector<ClaimVerdict> verdicts;
  if (!config_path) {
    for (const auto& id : checks) {
      if (id != "telescoping") throw Error(ErrorCode::ConfigError, "--checks: '" + id + "' needs --config for problem context");
      verdicts.push_back(check_telescoping(outcome.trace, Schedule::constant(alpha)));
    }
  } else {
    const RunConfig cfg = load_config(*config_path, seed_from_env());
    const AugmentedLagrangian L = build(cfg);
    if (parsed.m != L.problem().constraint_dimension() || parsed.n != L.problem().dimension())
      throw Error(ErrorCode::ConfigError, "trace dimensions do not match the configured problem");
    const bool stopped = !outcome.trace.empty() && outcome.trace.back().s_k == 0.0 && outcome.trace.back().sigma_z <= cfg.dsg.feas_tol;
    outcome.status = stopped ? RunStatus::StoppedEpsilonOptimal : RunStatus::MaxIterReached;
    verdicts = run_checks(checks, outcome, L, cfg);
  }
  const int code = certified_failure(verdicts) ? kExitCheckFailed : kExitOk;
  write_report(report_path, run_report(trace_path, std::nullopt, std::nullopt, verdicts, code));
  return code;
}

int cmd_catalog() {
  for (const auto& p : catalog()) {
    std::cout << p.id << "  n=" << p.instance.dimension() << " m=" << p.instance.constraint_dimension()
              << "  M_P=" << (p.analytic_MP ? format_double(*p.analytic_MP) : std::string("grid")) << "  grid_step=" << format_double(p.grid_step)
              << "\n    " << p.notes << "\n";
  }
  return kExitOk;
}

std::vector<double> parse_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_double(item, flag));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, e.message());
    }
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, flag + ": empty list");
  return out;
}

int cmd_gap(const std::string& problem_id, const std::string& c_grid, const std::optional<std::string>& y, std::optional<double> step,
            const std::string& penalty, bool classical) {
  NamedProblem p = find_problem(problem_id);
  LagrangianSpec spec;
  spec.penalty = penalty;
  const std::size_t m = p.instance.constraint_dimension();
  auto [A, sigma] = make_lagrangian(spec, m, 0);
  const AugmentedLagrangian L(p.instance, std::move(A), std::move(sigma));
  OracleConfig oracle;
  oracle.grid_step = step.value_or(p.grid_step);
  const Vector y_probe = y ? parse_list(*y, "--y") : Vector(m, 0.0);
  if (y_probe.size() != m) throw Error(ErrorCode::ConfigError, "--y: expected " + std::to_string(m) + " entries");
  const auto rep = duality_gap_report(L, parse_list(c_grid, "--c-grid"), y_probe, oracle, classical);

  OrderedJson j;
  j["problem"] = p.id;
  j["y_probe"] = to_json(y_probe);
  j["c_grid"] = to_json(rep.c_grid);
  j["q_values"] = to_json(rep.q_values);
  j["sup_q"] = real(rep.sup_q);
  j["M_P_grid"] = real(rep.M_P_grid);
  j["gap"] = real(rep.gap);
  if (rep.classical_sup) {
    j["classical_sup"] = real(*rep.classical_sup);
    j["classical_argmax_y"] = to_json(rep.classical_argmax);
    j["classical_gap"] = real(*rep.classical_gap);
  }
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deflected subgradient method for equality-constrained nonconvex problems"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run DSG from a JSON config");
  run_cmd->add_option("--config", config_path, "Config file")->required();

  std::string trace_path;
  std::vector<std::string> checks;
  std::optional<std::string> verify_config, report_path;
  double alpha = 1.0;
  auto* verify_cmd = app.add_subcommand("verify", "Check claims against a saved trace");
  verify_cmd->add_option("--trace", trace_path, "Trace file (.csv or .jsonl)")->required();
  verify_cmd->add_option("--checks", checks, "Check ids")->delimiter(',')->required();
  verify_cmd->add_option("--config", verify_config, "Config that produced the trace");
  verify_cmd->add_option("--alpha", alpha, "Constant alpha_k used by the run (without --config)");
  verify_cmd->add_option("--report", report_path, "Report output path (default stdout)");

  app.add_subcommand("catalog", "List bundled problems");

  std::string problem_id, c_grid;
  std::optional<std::string> y_probe;
  std::optional<double> step;
  std::string penalty = "sharp-p2";
  bool no_classical = false;
  auto* gap_cmd = app.add_subcommand("gap", "Dual values over a c grid versus the grid optimum");
  gap_cmd->add_option("--problem", problem_id, "Problem id")->required();
  gap_cmd->add_option("--c-grid", c_grid, "Comma-separated increasing c values")->required();
  gap_cmd->add_option("--y", y_probe, "Comma-separated multiplier (default 0)");
  gap_cmd->add_option("--step", step, "Oracle grid step");
  gap_cmd->add_option("--penalty", penalty, "Augmenting function tag");
  gap_cmd->add_flag("--no-classical", no_classical, "Skip the c = 0 multiplier scan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(config_path);
    if (*verify_cmd) return cmd_verify(trace_path, checks, verify_config, alpha, report_path);
    if (*gap_cmd) return cmd_gap(problem_id, c_grid, y_probe, step, penalty, !no_classical);
    return cmd_catalog();
  } catch (const Error& e) {
    std::cerr << "dsg: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::UnknownProblem ? kExitConfig : kExitOther;
  } catch (const std::exception& e) {
    std::cerr << "dsg: " << e.what() << "\n";
    return kExitOther;
  }
}
