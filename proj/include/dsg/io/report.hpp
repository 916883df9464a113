#pragma once

// Runs the configured claim checks and renders the report document.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsg/io/config.hpp"
#include "dsg/verify.hpp"

namespace dsg::io {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitOther = 1, kExitMaxIter = 2, kExitCheckFailed = 3, kExitConfig = 4 };

/// Grid oracle used for verification: the run's own oracle, or one at the
/// problem's default resolution when the run used multistart.
inline OracleConfig verification_oracle(const RunConfig& cfg) {
  if (const auto* o = std::get_if<OracleConfig>(&cfg.subsolver)) return *o;
  OracleConfig o;
  o.grid_step = cfg.problem.grid_step;
  return o;
}

/// Fejer witness: configured, else cataloged (sharp 2-norm pairing only),
/// else the best point of a coarse scan.
inline DualPoint fejer_witness(const RunConfig& cfg, const AugmentedLagrangian& L, const OracleConfig& oracle) {
  if (cfg.verify.dual_solution) return *cfg.verify.dual_solution;
  if (cfg.problem.known_dual_solution && cfg.lagrangian.penalty == "sharp-p2" && cfg.lagrangian.deflection == "identity")
    return *cfg.problem.known_dual_solution;
  const std::size_t m = L.problem().constraint_dimension();
  if (m > 2) throw Error(ErrorCode::InvalidDualSolution, "no dual solution configured and m > 2 is too large to scan");
  const auto ygrid = dsg::detail::make_grid(Vector(m, -3.0), Vector(m, 3.0), 0.5);
  std::vector<Vector> ys;
  dsg::detail::for_each_point(ygrid, 0, ygrid.axes[0].size(), [&](std::span<const double> y) { ys.emplace_back(y.begin(), y.end()); });
  std::vector<double> cs;
  for (int i = 0; i <= 16; ++i) cs.push_back(0.5 * i);
  return find_dual_solution(L, oracle, ys, cs);
}

inline ClaimVerdict run_check(const std::string& id, const RunOutcome& outcome, const AugmentedLagrangian& L, const RunConfig& cfg) {
  const OracleConfig oracle = verification_oracle(cfg);
  if (id == "weak_duality") return check_weak_duality(outcome.trace, L, oracle);
  if (id == "supergradient") return check_supergradient(outcome.trace, L, oracle, cfg.verify.probes, cfg.seed, cfg.verify.probe_radius);
  if (id == "monotone_increase") return check_monotone_increase(outcome.trace, L, oracle);
  if (id == "telescoping") return check_telescoping(outcome.trace, cfg.dsg.alpha);
  if (id == "fejer") {
    std::optional<DualPoint> fin;
    if (!outcome.final_dual.y.empty()) fin = outcome.final_dual;
    return check_fejer(outcome.trace, L, oracle, fejer_witness(cfg, L, oracle), fin, cfg.dsg.feas_tol);
  }
  if (id == "stop_optimality") return check_stop_optimality(outcome, L, cfg.dsg.epsilon, oracle);
  if (id == "lagrangian_estimates") return check_lagrangian_estimates(outcome.trace, L, cfg.dsg.alpha, oracle);
  throw Error(ErrorCode::ConfigError, "unknown check '" + id + "'");
}

inline std::vector<ClaimVerdict> run_checks(const std::vector<std::string>& ids, const RunOutcome& outcome,
                                            const AugmentedLagrangian& L, const RunConfig& cfg) {
  std::vector<ClaimVerdict> out;
  for (const auto& id : ids) out.push_back(run_check(id, outcome, L, cfg));
  return out;
}

inline bool certified_failure(const std::vector<ClaimVerdict>& verdicts) {
  for (const auto& v : verdicts)
    if (!v.holds && !v.downgraded) return true;
  return false;
}

inline int exit_code(std::optional<RunStatus> status, const std::vector<ClaimVerdict>& verdicts) {
  if (certified_failure(verdicts)) return kExitCheckFailed;
  if (!status || *status == RunStatus::StoppedEpsilonOptimal) return kExitOk;
  if (*status == RunStatus::MaxIterReached) return kExitMaxIter;
  return kExitOther;
}

using OrderedJson = nlohmann::ordered_json;

/// Non-finite reals become null.
inline OrderedJson real(double v) { return std::isfinite(v) ? OrderedJson(v) : OrderedJson(nullptr); }

inline OrderedJson to_json(const ClaimVerdict& v) {
  OrderedJson j;
  j["claim_id"] = v.claim_id;
  j["holds"] = v.holds;
  j["worst_violation"] = real(v.worst_violation);
  j["iterations_checked"] = v.iterations_checked;
  j["downgraded"] = v.downgraded;
  OrderedJson metrics = OrderedJson::object();
  for (const auto& [k, x] : v.metrics) metrics[k] = real(x);
  j["metrics"] = metrics;
  return j;
}

inline OrderedJson to_json(const Vector& v) {
  OrderedJson j = OrderedJson::array();
  for (double x : v) j.push_back(real(x));
  return j;
}

inline OrderedJson to_json(const InitReport& r) {
  OrderedJson j;
  j["passes"] = r.passes;
  j["coercivity"] = r.coercivity == Coercivity::Coercive ? "coercive" : "conditionally-coercive";
  j["c0_threshold"] = real(r.c0_threshold);
  j["alpha0_s0_threshold"] = r.alpha0_s0_threshold ? real(*r.alpha0_s0_threshold) : OrderedJson(nullptr);
  j["message"] = r.message;
  return j;
}

inline OrderedJson run_report(const std::string& problem_id, const std::optional<RunOutcome>& outcome,
                              const std::optional<InitReport>& init, const std::vector<ClaimVerdict>& verdicts, int code) {
  OrderedJson j;
  j["problem"] = problem_id;
  if (outcome) {
    j["status"] = std::string(to_string(outcome->status));
    j["iterations"] = outcome->trace.size();
    j["best_objective"] = real(outcome->best_objective);
    j["best_primal"] = to_json(outcome->best_primal);
    j["final_dual"] = {{"y", to_json(outcome->final_dual.y)}, {"c", real(outcome->final_dual.c)}};
    if (!outcome->message.empty()) j["message"] = outcome->message;
  }
  if (init) j["init_advisory"] = to_json(*init);
  OrderedJson arr = OrderedJson::array();
  for (const auto& v : verdicts) arr.push_back(to_json(v));
  j["verdicts"] = arr;
  j["exit_code"] = code;
  return j;
}

}  // namespace dsg::io
