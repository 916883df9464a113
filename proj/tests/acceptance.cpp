// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "dsg/dsg.hpp"
#include "dsg/io/config.hpp"
#include "dsg/io/report.hpp"
#include "dsg/io/trace_io.hpp"

using namespace dsg;
using namespace dsg::io;
namespace fs = std::filesystem;

namespace {

AugmentedLagrangian build(const RunConfig& cfg) {
  auto [A, sigma] = make_lagrangian(cfg.lagrangian, cfg.problem.instance.constraint_dimension(), cfg.seed);
  return AugmentedLagrangian(cfg.problem.instance, std::move(A), std::move(sigma));
}

struct Case {
  explicit Case(const std::string& name)
      : cfg(load_config(fs::path(DSG_CONFIG_DIR) / (name + ".json"))),
        L(build(cfg)),
        oracle(verification_oracle(cfg)),
        outcome(run(L, cfg.dsg, cfg.subsolver)) {}

  RunConfig cfg;
  AugmentedLagrangian L;
  OracleConfig oracle;
  RunOutcome outcome;
};

std::vector<std::string> bundled_configs() {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(DSG_CONFIG_DIR))
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

/// Runs `body`, turning an escaped exception into a FAIL line.
template <class F>
void criterion(int id, F body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  std::map<std::string, Case> cases;
  auto get = [&](const std::string& name) -> Case& {
    auto it = cases.find(name);
    if (it == cases.end()) it = cases.emplace(name, Case(name)).first;
    return it->second;
  };

  criterion(1, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (const char* name : {"p1_sharp_dsg1", "p2_sharp_dsg1", "p3_sharp_dsg1", "p4_sharp_dsg1"}) {
      Case& c = get(name);
      const auto v = check_weak_duality(c.outcome.trace, c.L, c.oracle);
      ok = ok && v.holds && !v.downgraded;
      detail += std::string(name) + " worst " + fmt(v.worst_violation) + "; ";
    }
    const double t = seconds_since(t0);
    report(1, ok && t < 60.0, "weak duality on P1-P4: " + detail + "time " + fmt(t) + " s");
  });

  criterion(2, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    Case& c = get("p2_sharp_dsg1");
    std::vector<double> cs;
    for (int i = 0; i <= 16; ++i) cs.push_back(0.5 * i);
    const auto rep = duality_gap_report(c.L, cs, {0.0}, c.oracle);
    const double classical_gap = *c.cfg.problem.analytic_MP - *rep.classical_sup;
    const double t = seconds_since(t0);
    const bool ok = std::abs(rep.sup_q - *c.cfg.problem.analytic_MP) <= 1e-2 && classical_gap >= 0.1 && t < 30.0;
    report(2, ok,
           "P2 sup_c q((0), c) = " + fmt(rep.sup_q) + ", classical sup " + fmt(*rep.classical_sup) + ", classical gap " +
               fmt(classical_gap) + ", time " + fmt(t) + " s");
  });

  criterion(3, [&] {
    bool ok = true;
    std::string detail;
    for (const char* name : {"p1_sharp_dsg1", "p1_sharp_dsg2", "p2_sharp_dsg1", "p2_sharp_dsg2"}) {
      Case& c = get(name);
      const auto v = check_monotone_increase(c.outcome.trace, c.L, c.oracle);
      ok = ok && v.holds && !v.downgraded;
      detail += std::string(name) + " min increase " + fmt(v.metric("min_increase")) + "; ";
    }
    report(3, ok, "monotone dual increase: " + detail);
  });

  criterion(4, [&] {
    Case& c = get("p1_sharp_dsg1");
    const auto v = check_supergradient(c.outcome.trace, c.L, c.oracle, 50, 0);
    report(4, v.holds && !v.downgraded,
           "P1 supergradient, " + std::to_string(v.iterations_checked) + " probes, worst " + fmt(v.worst_violation));
  });

  criterion(5, [&] {
    bool ok = true;
    std::string detail;
    for (const auto& name : bundled_configs()) {
      Case& c = get(name);
      const auto v = check_telescoping(c.outcome.trace, c.cfg.dsg.alpha);
      if (!v.holds) detail += name + " fails; ";
      ok = ok && v.holds;
    }
    Case& pen = get("p1_penalty");
    bool constant_y = pen.outcome.final_dual.y == pen.cfg.dsg.y0;
    for (const auto& r : pen.outcome.trace) constant_y = constant_y && r.y == pen.cfg.dsg.y0;
    report(5, ok && constant_y,
           "telescoping on " + std::to_string(bundled_configs().size()) + " configs" + (detail.empty() ? "" : ": " + detail) +
               (constant_y ? "; penalty run keeps y fixed" : "; penalty run moved y"));
  });

  criterion(6, [&] {
    Case& p1 = get("p1_sharp_dsg1");
    const auto v1 = check_fejer(p1.outcome.trace, p1.L, p1.oracle, {{1.0}, 0.0}, p1.outcome.final_dual);
    std::vector<Vector> ys;
    for (int i = -6; i <= 6; ++i) ys.push_back({0.5 * i});
    std::vector<double> cs;
    for (int i = 0; i <= 16; ++i) cs.push_back(0.5 * i);
    bool ok = v1.holds && !v1.downgraded;
    std::string detail = "P1 at ((1), 0) worst " + fmt(v1.worst_violation);
    for (const char* name : {"p2_sharp_dsg1", "p2_sharp_dsg2"}) {
      Case& c = get(name);
      const DualPoint bar = find_dual_solution(c.L, c.oracle, ys, cs);
      const auto v = check_fejer(c.outcome.trace, c.L, c.oracle, bar, c.outcome.final_dual);
      ok = ok && v.holds && !v.downgraded;
      detail += "; " + std::string(name) + " at ((" + fmt(bar.y[0]) + "), " + fmt(bar.c) + ") worst " + fmt(v.worst_violation);
    }
    report(6, ok, "Fejer inequality: " + detail);
  });

  criterion(7, [&] {
    bool ok = true;
    std::size_t stopped = 0;
    std::string detail;
    for (const auto& name : bundled_configs()) {
      Case& c = get(name);
      if (!c.outcome.stopped()) continue;
      ++stopped;
      const auto v = check_stop_optimality(c.outcome, c.L, 1e-3, c.oracle);
      if (!v.holds) detail += name + " fails; ";
      ok = ok && v.holds;
    }
    report(7, ok && stopped > 0, "stop optimality on " + std::to_string(stopped) + " stopped runs" + (detail.empty() ? "" : ": " + detail));
  });

  criterion(8, [&] {
    Case& c = get("p1_dual_start");
    const bool ok = c.outcome.stopped() && c.outcome.trace.back().k <= 1;
    report(8, ok, "P1 from ((1), 0): " + std::string(to_string(c.outcome.status)) + " at k = " + std::to_string(c.outcome.trace.back().k));
  });

  criterion(9, [&] {
    bool ok = true;
    std::string detail;
    for (const char* name : {"p1_sharp_dsg1", "p1_sharp_dsg2", "p2_sharp_dsg1", "p2_sharp_dsg2"}) {
      Case& c = get(name);
      const double d = dsg::detail::distance(c.outcome.best_primal, *c.cfg.problem.analytic_solution);
      ok = ok && c.outcome.stopped() && d <= 1e-2;
      detail += std::string(name) + " distance " + fmt(d) + "; ";
    }
    Case& p3 = get("p3_sharp_dsg1");
    const double h = dsg::detail::norm2(p3.cfg.problem.instance.constraint(p3.outcome.best_primal));
    ok = ok && h <= 1e-4;
    report(9, ok, "primal recovery: " + detail + "P3 ||h|| = " + fmt(h));
  });

  criterion(10, [&] {
    Case& c = get("p1_gamma0");
    const double tail = dual_tail_increment(c.outcome);
    const double q_final = oracle_value(c.L, c.outcome.final_dual, c.oracle);
    const double mp = grid_optimal_value(c.L.problem(), c.oracle);
    const double slack = grid_slack(c.L, c.outcome.final_dual, c.oracle.grid_step);
    const bool ok = tail < 1e-4 && std::abs(q_final - mp) <= slack;
    report(10, ok,
           "P1 with the r_k clamp: " + std::string(to_string(c.outcome.status)) + " after " + std::to_string(c.outcome.trace.size()) +
               " records, tail increment " + fmt(tail) + ", q(final dual) " + fmt(q_final) + " vs M_P_grid " + fmt(mp) +
               " (slack " + fmt(slack) + ")");
  });

  criterion(11, [&] {
    Case& c = get("p2_saturating");
    const double q00 = oracle_value(c.L, {c.cfg.dsg.y0, c.cfg.init.c_hat}, c.oracle);
    const InitInputs in{c.cfg.init.c_hat, q00, *c.cfg.init.s_level, std::nullopt, c.cfg.dsg.r.at(0)};
    const auto good = validate_init(c.L.sigma(), c.cfg.dsg.c0, in);
    const auto low = validate_init(c.L.sigma(), 2.0, in);
    DsgConfig low_cfg = c.cfg.dsg;
    low_cfg.c0 = 2.0;
    const auto low_run = run(c.L, low_cfg, c.cfg.subsolver);
    const bool ok = std::abs(good.c0_threshold - 6.0) <= 1e-9 && good.passes && c.outcome.stopped() && !low.passes;
    report(11, ok,
           "saturating sigma: threshold " + fmt(good.c0_threshold) + "; c0 = " + fmt(c.cfg.dsg.c0) + " " +
               std::string(to_string(c.outcome.status)) + " after " + std::to_string(c.outcome.trace.size()) + " records; c0 = 2 " +
               (low.passes ? "not flagged" : "flagged") + ", then " + std::string(to_string(low_run.status)) + " after " +
               std::to_string(low_run.trace.size()) + " records with best objective " + fmt(low_run.best_objective) +
               " at sigma " + fmt(low_run.best_sigma));
  });

  criterion(12, [&] {
    const fs::path base = fs::temp_directory_path() / ("dsg_acceptance_" + std::to_string(::getpid()));
    bool ok = true;
    std::string detail;
    std::size_t compared = 0;
    for (const auto& name : bundled_configs()) {
      const auto cfg = load_config(fs::path(DSG_CONFIG_DIR) / (name + ".json"));
      std::string traces[2];
      for (int rep = 0; rep < 2; ++rep) {
        const fs::path dir = base / (name + "_" + std::to_string(rep));
        fs::create_directories(dir);
        const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(DSG_CLI_PATH) + "' run --config '" +
                                (fs::path(DSG_CONFIG_DIR) / (name + ".json")).string() + "' > /dev/null 2>&1";
        const int rc = std::system(cmd.c_str());
        (void)rc;
        const fs::path trace = dir / *cfg.output.trace_path;
        traces[rep] = fs::exists(trace) ? read_file(trace) : std::string();
      }
      if (traces[0].empty() || traces[0] != traces[1]) {
        ok = false;
        detail += name + " differs; ";
      }
      ++compared;
    }
    fs::remove_all(base);
    report(12, ok, "byte-identical traces across two CLI runs of " + std::to_string(compared) + " configs" +
                       (detail.empty() ? "" : ": " + detail));
  });

  return failures == 0 ? 0 : 1;
}
