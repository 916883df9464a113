#pragma once

// Checkers for the inequalities a DSG trace must satisfy. Each takes a
// finished trace plus grid-oracle access and returns one verdict per claim.
//
// Oracle values are exact minima over a fixed grid, so every inequality is
// tested with slack = L_est * grid_step * sqrt(n), where L_est is a sampled
// Lipschitz estimate of x -> l(x, y, c) at the dual point in question.
// A verdict holds iff worst_violation <= 0, where the violation already
// subtracts the slack. Traces containing uncertified records yield
// downgraded verdicts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dsg/core.hpp"
#include "dsg/deflected_subgradient.hpp"
#include "dsg/subsolver.hpp"

namespace dsg {

struct ClaimVerdict {
  std::string claim_id;
  bool holds = true;
  double worst_violation = 0.0;  // max over checks of lhs - rhs - slack
  std::size_t iterations_checked = 0;
  bool downgraded = false;
  std::vector<std::pair<std::string, double>> metrics;

  double metric(const std::string& name) const {
    for (const auto& [k, v] : metrics)
      if (k == name) return v;
    throw Error(ErrorCode::InvalidArgument, "no metric named " + name);
  }
};

/// Max over samples of |l(x + d) - l(x)| / |d| with |d| = step, times 1.5.
inline double lipschitz_estimate(const AugmentedLagrangian& L, const DualPoint& dual, double step, std::size_t samples = 256,
                                 std::uint64_t seed = 0) {
  const Box& box = L.problem().box();
  const std::size_t n = L.problem().dimension();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto eval = L.evaluator(dual);
  double est = 0.0;
  Vector x(n);
  for (std::size_t i = 0; i < samples; ++i) {
    for (std::size_t j = 0; j < n; ++j) x[j] = box.lower[j] + (box.upper[j] - box.lower[j]) * u01(rng);
    Vector d = detail::random_in_ball(rng, n, step);
    Vector xp = x;
    for (std::size_t j = 0; j < n; ++j) xp[j] = std::clamp(x[j] + d[j], box.lower[j], box.upper[j]);
    const double dist = detail::distance(x, xp);
    if (!(dist > 0.0)) continue;
    const double a = eval(x), b = eval(xp);
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    est = std::max(est, std::abs(a - b) / dist);
  }
  return 1.5 * est;
}

inline double grid_slack(const AugmentedLagrangian& L, const DualPoint& dual, double step, std::uint64_t seed = 0) {
  return lipschitz_estimate(L, dual, step, 256, seed) * step * std::sqrt(static_cast<double>(L.problem().dimension()));
}

/// M_P_grid: perturbation_beta(0) on the oracle grid.
inline double grid_optimal_value(const ProblemInstance& problem, const OracleConfig& oracle) {
  const Vector zero(problem.constraint_dimension(), 0.0);
  const auto v = perturbation_beta(problem, zero, oracle.grid_step, std::nullopt, oracle.max_evaluations);
  if (!v) throw Error(ErrorCode::InvalidArgument, "no grid point is near-feasible at this resolution");
  return *v;
}

inline double oracle_value(const AugmentedLagrangian& L, const DualPoint& dual, const OracleConfig& oracle) {
  return grid_oracle_minimize(L, dual, oracle).q_estimate;
}

namespace detail {

inline ClaimVerdict verdict(std::string id) {
  ClaimVerdict v;
  v.claim_id = std::move(id);
  return v;
}

inline DualPoint dual_of(const IterationRecord& r) { return {r.y, r.c}; }

inline bool any_uncertified(const Trace& trace) {
  return std::any_of(trace.begin(), trace.end(), [](const IterationRecord& r) { return !r.certified; });
}

inline void record(ClaimVerdict& v, double violation) {
  v.worst_violation = v.iterations_checked == 0 ? violation : std::max(v.worst_violation, violation);
  ++v.iterations_checked;
}

inline ClaimVerdict finish(ClaimVerdict v) {
  if (v.iterations_checked == 0) v.worst_violation = 0.0;
  v.holds = v.worst_violation <= 0.0;
  return v;
}

/// z_k = h(x_k), recomputed so traces parsed from disk carry the same data.
inline Vector z_of(const AugmentedLagrangian& L, const IterationRecord& r) {
  return r.z.size() == L.problem().constraint_dimension() ? r.z : L.problem().constraint(r.x);
}

}  // namespace detail

/// q_k <= M_P_grid + slack for every k.
inline ClaimVerdict check_weak_duality(const Trace& trace, const AugmentedLagrangian& L, const OracleConfig& oracle) {
  ClaimVerdict v = detail::verdict("weak_duality");
  v.downgraded = detail::any_uncertified(trace);
  const double mp = grid_optimal_value(L.problem(), oracle);
  double max_gap = -kInf;
  for (const auto& r : trace) {
    const double slack = grid_slack(L, detail::dual_of(r), oracle.grid_step, r.k);
    max_gap = std::max(max_gap, r.q_k - mp);
    detail::record(v, r.q_k - mp - slack);
  }
  v.metrics = {{"M_P_grid", mp}, {"max_gap", trace.empty() ? 0.0 : max_gap}};
  return detail::finish(std::move(v));
}

/// For `probes` random (y', c') within `radius` of (y_k, c_k), c' >= 0:
/// q(y', c') <= q_k - <A(z_k), y' - y_k> + (c' - c_k) sigma(z_k) + r_k + slack.
inline ClaimVerdict check_supergradient(const Trace& trace, const AugmentedLagrangian& L, const OracleConfig& oracle,
                                        std::size_t probes, std::uint64_t seed, double radius = 1.0) {
  ClaimVerdict v = detail::verdict("supergradient");
  v.downgraded = detail::any_uncertified(trace);
  const std::size_t m = L.problem().constraint_dimension();
  std::mt19937_64 rng(seed);
  for (const auto& r : trace) {
    const Vector z = detail::z_of(L, r);
    const Vector az = L.deflection()(z);
    const double sz = L.sigma()(z);
    const double slack = grid_slack(L, detail::dual_of(r), oracle.grid_step, r.k);
    for (std::size_t p = 0; p < probes; ++p) {
      const Vector step = detail::random_in_ball(rng, m + 1, radius);
      DualPoint probe{r.y, std::max(0.0, r.c + step[m])};
      for (std::size_t i = 0; i < m; ++i) probe.y[i] += step[i];
      double linear = (probe.c - r.c) * sz;
      for (std::size_t i = 0; i < m; ++i) linear -= az[i] * (probe.y[i] - r.y[i]);
      const double q_probe = oracle_value(L, probe, oracle);
      detail::record(v, q_probe - (r.q_k + linear + r.r_k) - slack);
    }
  }
  v.metrics = {{"probes_per_iteration", static_cast<double>(probes)}};
  return detail::finish(std::move(v));
}

/// q_{k+1} > q_k - slack for consecutive records. Downgraded unless every
/// record is certified with r_k = 0.
inline ClaimVerdict check_monotone_increase(const Trace& trace, const AugmentedLagrangian& L, const OracleConfig& oracle) {
  ClaimVerdict v = detail::verdict("monotone_increase");
  v.downgraded = detail::any_uncertified(trace) ||
                 std::any_of(trace.begin(), trace.end(), [](const IterationRecord& r) { return r.r_k != 0.0; });
  double min_increase = kInf;
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
    const double slack = grid_slack(L, detail::dual_of(trace[k]), oracle.grid_step, trace[k].k);
    const double drop = trace[k].q_k - trace[k + 1].q_k;
    min_increase = std::min(min_increase, -drop);
    // Strict: a drop of exactly `slack` already fails.
    detail::record(v, drop - slack + (drop >= slack ? 1e-300 : 0.0));
  }
  v.metrics = {{"min_increase", trace.size() < 2 ? 0.0 : min_increase}};
  return detail::finish(std::move(v));
}

/// c_K - c_0 = sum_{j<K} (alpha_j + 1) s_j sigma(z_j) to 1e-10 relative and
/// ||y_K - y_0|| <= sum_{j<K} s_j sigma(z_j) + 1e-10 for every prefix K.
/// Pure update arithmetic: never downgraded.
inline ClaimVerdict check_telescoping(const Trace& trace, const Schedule& alpha) {
  ClaimVerdict v = detail::verdict("telescoping");
  constexpr double kTol = 1e-10;
  if (trace.empty()) return detail::finish(std::move(v));
  const auto& first = trace.front();
  double c_sum = 0.0, s_sum = 0.0, worst_c = 0.0, worst_y = 0.0;
  for (std::size_t K = 1; K < trace.size(); ++K) {
    const auto& prev = trace[K - 1];
    c_sum += (alpha.at(prev.k) + 1.0) * prev.s_k * prev.sigma_z;
    s_sum += prev.s_k * prev.sigma_z;
    const auto& cur = trace[K];
    const double c_err = std::abs((cur.c - first.c) - c_sum) - kTol * std::max(1.0, std::abs(cur.c));
    const double y_err = detail::distance(cur.y, first.y) - s_sum - kTol * std::max(1.0, s_sum);
    worst_c = std::max(worst_c, std::abs((cur.c - first.c) - c_sum));
    worst_y = std::max(worst_y, detail::distance(cur.y, first.y) - s_sum);
    detail::record(v, std::max(c_err, y_err));
  }
  // Bounded-c proxy: growth of c over the last 20% of the horizon.
  const std::size_t tail_start = trace.size() - std::max<std::size_t>(1, trace.size() / 5);
  const double tail_growth = trace.back().c - trace[tail_start].c;
  v.metrics = {{"partial_sum_s_sigma", s_sum},
               {"c_identity_error", worst_c},
               {"y_drift_excess", worst_y},
               {"c_tail_growth", tail_growth},
               {"c_bounded", tail_growth <= 1e-6 * (1.0 + std::abs(trace.back().c)) ? 1.0 : 0.0}};
  return detail::finish(std::move(v));
}

/// Picks the scan point with the largest oracle value (first in scan order
/// on ties, c outer ascending, y inner lexicographic) and accepts it when
/// that value is within slack of M_P_grid.
inline DualPoint find_dual_solution(const AugmentedLagrangian& L, const OracleConfig& oracle, const std::vector<Vector>& y_values,
                                    const std::vector<double>& c_values) {
  const double mp = grid_optimal_value(L.problem(), oracle);
  std::optional<DualPoint> best;
  double best_q = -kInf;
  for (double c : c_values)
    for (const auto& y : y_values) {
      const DualPoint d{y, c};
      const double q = oracle_value(L, d, oracle);
      if (q > best_q) {
        best_q = q;
        best = d;
      }
    }
  if (!best) throw Error(ErrorCode::InvalidDualSolution, "empty dual scan");
  const double slack = grid_slack(L, *best, oracle.grid_step);
  if (std::abs(best_q - mp) > slack)
    throw Error(ErrorCode::InvalidDualSolution, "no scanned dual point reaches M_P_grid = " + std::to_string(mp) +
                                                    " (best " + std::to_string(best_q) + ")");
  return *best;
}

/// ||y_{k+1} - yb||^2 <= ||y_k - yb||^2
///   + 2 s_k sigma_k [s_k sigma_k / 2 + (q_k - qb + r_k) / sigma_k + cb - c_k]
/// for every k with sigma(z_k) > feas_tol, qb the oracle value at (yb, cb).
/// y_{k+1} comes from the next record, or from `final_dual` for the last one.
inline ClaimVerdict check_fejer(const Trace& trace, const AugmentedLagrangian& L, const OracleConfig& oracle,
                                const DualPoint& dual_solution, std::optional<DualPoint> final_dual = std::nullopt,
                                double feas_tol = 1e-8) {
  L.check_dual(dual_solution);
  const double mp = grid_optimal_value(L.problem(), oracle);
  const double qb = oracle_value(L, dual_solution, oracle);
  const double slack_bar = grid_slack(L, dual_solution, oracle.grid_step);
  if (std::abs(qb - mp) > slack_bar)
    throw Error(ErrorCode::InvalidDualSolution, "oracle value " + std::to_string(qb) + " at the supplied dual point differs from M_P_grid = " +
                                                    std::to_string(mp) + " beyond slack " + std::to_string(slack_bar));
  ClaimVerdict v = detail::verdict("fejer");
  v.downgraded = detail::any_uncertified(trace);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto& r = trace[k];
    if (r.sigma_z <= feas_tol || r.s_k == 0.0) continue;
    const Vector* next = nullptr;
    if (k + 1 < trace.size()) next = &trace[k + 1].y;
    else if (final_dual) next = &final_dual->y;
    if (!next) continue;
    const double lhs = std::pow(detail::distance(*next, dual_solution.y), 2);
    const double before = std::pow(detail::distance(r.y, dual_solution.y), 2);
    const double ss = r.s_k * r.sigma_z;
    const double rhs = before + 2.0 * ss * (ss / 2.0 + (r.q_k - qb + r.r_k) / r.sigma_z + dual_solution.c - r.c);
    const double slack = 2.0 * r.s_k * grid_slack(L, detail::dual_of(r), oracle.grid_step, r.k) + 1e-12 * (1.0 + std::abs(rhs));
    detail::record(v, lhs - rhs - slack);
  }
  v.metrics = {{"q_bar", qb}, {"M_P_grid", mp}};
  return detail::finish(std::move(v));
}

/// On a stopped run: phi(x_final) <= M_P_grid + eps + slack and
/// q_final >= M_P_grid - eps - slack. Vacuous otherwise.
inline ClaimVerdict check_stop_optimality(const RunOutcome& outcome, const AugmentedLagrangian& L, double epsilon,
                                          const OracleConfig& oracle) {
  ClaimVerdict v = detail::verdict("stop_optimality");
  v.downgraded = detail::any_uncertified(outcome.trace);
  if (!outcome.stopped() || outcome.trace.empty()) return detail::finish(std::move(v));
  const auto& last = outcome.trace.back();
  const double mp = grid_optimal_value(L.problem(), oracle);
  const double slack = grid_slack(L, detail::dual_of(last), oracle.grid_step, last.k);
  const double phi = L.problem().objective(last.x);
  detail::record(v, std::max(phi - (mp + epsilon) - slack, (mp - epsilon) - last.q_k - slack));
  v.metrics = {{"phi_final", phi}, {"q_final", last.q_k}, {"M_P_grid", mp}, {"slack", slack}};
  return detail::finish(std::move(v));
}

/// For k >= 1:
///   phi(x_k) - <A(z_k), y_0> <= q_k + r_k + slack
///   sigma(z_k) sum_{j<k} alpha_j s_j sigma(z_j) <= q_k - q_0 + r_k + slack.
inline ClaimVerdict check_lagrangian_estimates(const Trace& trace, const AugmentedLagrangian& L, const Schedule& alpha,
                                               const OracleConfig& oracle) {
  ClaimVerdict v = detail::verdict("lagrangian_estimates");
  v.downgraded = detail::any_uncertified(trace);
  if (trace.empty()) return detail::finish(std::move(v));
  const Vector& y0 = trace.front().y;
  const double q0 = trace.front().q_k;
  double weighted = 0.0;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const auto& prev = trace[k - 1];
    weighted += alpha.at(prev.k) * prev.s_k * prev.sigma_z;
    const auto& r = trace[k];
    const Vector z = detail::z_of(L, r);
    const double f_term = L.problem().objective(r.x) - detail::dot(L.deflection()(z), y0);
    const double slack = grid_slack(L, detail::dual_of(r), oracle.grid_step, r.k) + 1e-12 * (1.0 + std::abs(r.q_k));
    const double e1 = f_term - (r.q_k + r.r_k) - slack;
    const double e2 = r.sigma_z * weighted - (r.q_k - q0 + r.r_k) - slack;
    detail::record(v, std::max(e1, e2));
  }
  return detail::finish(std::move(v));
}

// ---------------------------------------------------------------------------
// Duality gap and dual convergence diagnostics.

struct GapReport {
  std::vector<double> c_grid;
  std::vector<double> q_values;  // q(y_probe, c) per c
  double sup_q = -kInf;
  double M_P_grid = 0.0;
  double gap = 0.0;  // M_P_grid - sup_q
  /// Classical comparison: c = 0 and y scanned over [-10, 10]^m.
  std::optional<double> classical_sup;
  Vector classical_argmax;
  std::optional<double> classical_gap;
};

inline GapReport duality_gap_report(const AugmentedLagrangian& L, const std::vector<double>& c_grid, const Vector& y_probe,
                                    const OracleConfig& oracle, bool classical = true, double y_step = 0.1) {
  for (std::size_t i = 1; i < c_grid.size(); ++i)
    if (!(c_grid[i] > c_grid[i - 1])) throw Error(ErrorCode::InvalidArgument, "c grid must be strictly increasing");
  GapReport rep;
  rep.c_grid = c_grid;
  rep.M_P_grid = grid_optimal_value(L.problem(), oracle);
  for (double c : c_grid) {
    const double q = oracle_value(L, {y_probe, c}, oracle);
    rep.q_values.push_back(q);
    rep.sup_q = std::max(rep.sup_q, q);
  }
  rep.gap = rep.M_P_grid - rep.sup_q;
  if (classical) {
    const std::size_t m = L.problem().constraint_dimension();
    const Vector lo(m, -10.0), hi(m, 10.0);
    const auto ygrid = detail::make_grid(lo, hi, y_step);
    if (ygrid.size() > 100'000) throw Error(ErrorCode::GridTooLarge, "classical y-scan too large");
    double best = -kInf;
    Vector arg;
    detail::for_each_point(ygrid, 0, ygrid.axes[0].size(), [&](std::span<const double> y) {
      const double q = oracle_value(L, {Vector(y.begin(), y.end()), 0.0}, oracle);
      if (q > best) {
        best = q;
        arg.assign(y.begin(), y.end());
      }
    });
    rep.classical_sup = best;
    rep.classical_argmax = arg;
    rep.classical_gap = rep.M_P_grid - best;
  }
  return rep;
}

/// max over k in the last `fraction` of the dual sequence of
/// ||(y_last, c_last) - (y_k, c_k)||. The sequence is the recorded duals
/// followed by the final dual.
inline double dual_tail_increment(const RunOutcome& outcome, double fraction = 0.2) {
  std::vector<DualPoint> seq;
  for (const auto& r : outcome.trace) seq.push_back({r.y, r.c});
  if (!outcome.final_dual.y.empty() || outcome.trace.empty()) seq.push_back(outcome.final_dual);
  if (seq.size() < 2) return 0.0;
  const std::size_t window = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(seq.size()))));
  const auto& last = seq.back();
  double worst = 0.0;
  for (std::size_t k = seq.size() - 1 - std::min(window, seq.size() - 1); k < seq.size(); ++k) {
    const double dy = detail::distance(seq[k].y, last.y);
    worst = std::max(worst, std::sqrt(dy * dy + (seq[k].c - last.c) * (seq[k].c - last.c)));
  }
  return worst;
}

}  // namespace dsg
