#pragma once

// Inexact deflected subgradient (DSG) method for the augmented Lagrangian
// dual. Each outer iteration solves the subproblem at (y_k, c_k) to
// tolerance r_k, stops once h(x_k) = 0 and r_k <= epsilon, and otherwise
// moves
//
//     y_{k+1} = y_k - s_k A(z_k)
//     c_{k+1} = c_k + (alpha_k + 1) s_k sigma(z_k).
//
// Two step-size families are provided: DSG-1 (s_k in [eta_k, beta_k] with
// eta_k = min{eta, ||A z_k|| + ||z_k||}, beta_k = max{beta, sigma(z_k) + ||z_k||})
// and DSG-2 (s_k sigma(z_k) in [theta_k, beta]).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dsg/core.hpp"
#include "dsg/subsolver.hpp"

namespace dsg {

/// A parameter sequence k -> value.
struct Schedule {
  enum class Kind { Constant, Geometric, Harmonic };

  Kind kind = Kind::Constant;
  double value = 0.0;  // constant value, initial value, or harmonic scale
  double ratio = 1.0;  // geometric ratio

  static Schedule constant(double v) { return {Kind::Constant, v, 1.0}; }
  static Schedule geometric(double initial, double ratio) { return {Kind::Geometric, initial, ratio}; }
  /// scale / (k + 1)
  static Schedule harmonic(double scale) { return {Kind::Harmonic, scale, 1.0}; }

  double at(std::size_t k) const {
    switch (kind) {
      case Kind::Constant: return value;
      case Kind::Geometric: return value * std::pow(ratio, static_cast<double>(k));
      case Kind::Harmonic: return value / static_cast<double>(k + 1);
    }
    return value;
  }

  double supremum() const {
    if (kind == Kind::Geometric && ratio > 1.0 && value > 0.0) return kInf;
    return std::max(value, 0.0);
  }

  double infimum() const {
    switch (kind) {
      case Kind::Constant: return value;
      case Kind::Geometric: return ratio < 1.0 ? std::min(0.0, value) : value;
      case Kind::Harmonic: return std::min(0.0, value);
    }
    return value;
  }

  bool tends_to_zero() const {
    switch (kind) {
      case Kind::Constant: return value == 0.0;
      case Kind::Geometric: return value == 0.0 || std::abs(ratio) < 1.0;
      case Kind::Harmonic: return true;
    }
    return false;
  }

  bool divergent_sum() const {
    switch (kind) {
      case Kind::Constant: return value > 0.0;
      case Kind::Geometric: return value > 0.0 && ratio >= 1.0;
      case Kind::Harmonic: return value > 0.0;
    }
    return false;
  }
};

enum class Placement { Lower, Midpoint, Upper };

struct Dsg1Rule {
  double eta = 0.01;
  double beta = 2.0;
  Placement placement = Placement::Midpoint;
};

struct Dsg2Rule {
  double beta = 2.0;
  Schedule theta = Schedule::harmonic(1.0);
  Placement placement = Placement::Midpoint;
};

using StepSizeRule = std::variant<Dsg1Rule, Dsg2Rule>;

struct DsgConfig {
  Vector y0;
  double c0 = 0.0;
  double epsilon = 1e-3;
  double delta = 0.5;  // shrink factor for r_k once z_k is feasible
  Schedule alpha = Schedule::constant(1.0);
  double alpha_max = 2.0;
  Schedule r = Schedule::geometric(1e-2, 0.5);
  StepSizeRule rule = Dsg1Rule{};
  std::size_t max_iter = 500;
  double feas_tol = 1e-8;
  std::optional<double> gamma0_R;
  bool nonmonotone_check = true;

  void validate(std::size_t m) const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw Error(ErrorCode::InvalidArgument, "dsg." + field + ": " + why);
    };
    if (y0.size() != m) fail("y0", "length " + std::to_string(y0.size()) + " does not match m = " + std::to_string(m));
    if (!detail::all_finite(y0)) fail("y0", "entries must be finite");
    if (!(c0 >= 0.0) || !std::isfinite(c0)) fail("c0", "must be finite and >= 0");
    if (!(epsilon > 0.0)) fail("epsilon", "must be positive");
    if (!(delta > 0.0 && delta < 1.0)) fail("delta", "must lie in (0, 1)");
    if (!(alpha_max > 0.0)) fail("alpha_max", "must be positive");
    if (!(alpha.value > 0.0)) fail("alpha", "values must be positive");
    if (alpha.kind == Schedule::Kind::Geometric && !(alpha.ratio > 0.0)) fail("alpha", "geometric ratio must be positive");
    if (!(alpha.supremum() <= alpha_max)) fail("alpha", "values must not exceed alpha_max");
    if (!(r.value >= 0.0)) fail("r", "values must be nonnegative");
    if (r.kind == Schedule::Kind::Geometric && !(r.ratio >= 0.0 && r.ratio <= 1.0)) fail("r", "geometric ratio must lie in [0, 1]");
    if (!r.tends_to_zero()) fail("r", "schedule must tend to zero");
    if (max_iter == 0) fail("max_iter", "must be positive");
    if (!(feas_tol > 0.0)) fail("feas_tol", "must be positive");
    if (gamma0_R && !(*gamma0_R > 0.0)) fail("gamma0_R", "must be positive");
    if (const auto* d1 = std::get_if<Dsg1Rule>(&rule)) {
      if (!(d1->eta > 0.0)) fail("rule.eta", "must be positive");
      if (!(d1->beta > d1->eta)) fail("rule.beta", "must exceed eta");
    } else {
      const auto& d2 = std::get<Dsg2Rule>(rule);
      if (!(d2.beta > 0.0)) fail("rule.beta", "must be positive");
      if (!(d2.theta.infimum() >= 0.0)) fail("rule.theta", "values must be nonnegative");
      if (d2.theta.kind == Schedule::Kind::Geometric && !(d2.theta.ratio >= 0.0)) fail("rule.theta", "ratio must be nonnegative");
      if (!(d2.theta.supremum() <= d2.beta)) fail("rule.theta", "values must not exceed beta");
      if (!d2.theta.divergent_sum()) fail("rule.theta", "partial sums must be unbounded");
    }
  }
};

struct IterationRecord {
  std::size_t k = 0;
  PrimalPoint x;
  ConstraintValue z;
  double sigma_z = 0.0;
  double Az_norm = 0.0;
  double q_k = 0.0;
  double r_k = 0.0;
  double s_k = 0.0;  // 0 on the stopping record (no dual update)
  Vector y;
  double c = 0.0;
  bool certified = false;
};

using Trace = std::vector<IterationRecord>;

enum class RunStatus { StoppedEpsilonOptimal, MaxIterReached, SubsolverFailure };

constexpr std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::StoppedEpsilonOptimal: return "StoppedEpsilonOptimal";
    case RunStatus::MaxIterReached: return "MaxIterReached";
    case RunStatus::SubsolverFailure: return "SubsolverFailure";
  }
  return "Unknown";
}

struct RunOutcome {
  RunStatus status = RunStatus::MaxIterReached;
  Trace trace;
  PrimalPoint best_primal;
  double best_objective = kInf;
  double best_sigma = kInf;
  DualPoint final_dual;
  std::string message;

  bool stopped() const { return status == RunStatus::StoppedEpsilonOptimal; }
};

struct StepBounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline double place(const StepBounds& b, Placement p) {
  switch (p) {
    case Placement::Lower: return b.lower;
    case Placement::Midpoint: return 0.5 * (b.lower + b.upper);
    case Placement::Upper: return b.upper;
  }
  return b.lower;
}

/// [eta_k, beta_k] for DSG-1.
inline StepBounds stepsize_bounds_dsg1(std::span<const double> z, const DeflectionMap& A, const AugmentingFunction& sigma,
                                       double eta, double beta, double feas_tol = 1e-8) {
  const double s = sigma(z);
  if (s <= feas_tol) throw Error(ErrorCode::DegenerateZ, "step size undefined at z = 0 (sigma(z) <= feas_tol)");
  const double nz = detail::norm2(z);
  const double naz = detail::norm2(A(z));
  return {std::min(eta, naz + nz), std::max(beta, s + nz)};
}

/// [theta_k / sigma(z_k), beta / sigma(z_k)] for DSG-2.
inline StepBounds stepsize_bounds_dsg2(std::span<const double> z, const AugmentingFunction& sigma, double theta_k, double beta,
                                       double feas_tol = 1e-8) {
  const double s = sigma(z);
  if (s <= feas_tol) throw Error(ErrorCode::DegenerateZ, "step size undefined at z = 0 (sigma(z) <= feas_tol)");
  if (!(theta_k >= 0.0) || theta_k > beta)
    throw Error(ErrorCode::ScheduleViolation, "theta_k = " + std::to_string(theta_k) + " must lie in [0, beta]");
  return {theta_k / s, beta / s};
}

inline DualPoint dsg_update(const DualPoint& dual, std::span<const double> z, const DeflectionMap& A,
                            const AugmentingFunction& sigma, double s_k, double alpha_k) {
  if (!(s_k > 0.0)) throw Error(ErrorCode::InvalidArgument, "step size must be positive");
  if (!(alpha_k > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha_k must be positive");
  if (z.size() != dual.y.size()) throw Error(ErrorCode::DimensionMismatch, "z and y lengths differ");
  DualPoint next = dual;
  const Vector az = A(z);
  for (std::size_t i = 0; i < next.y.size(); ++i) next.y[i] -= s_k * az[i];
  next.c += (alpha_k + 1.0) * s_k * sigma(z);
  return next;
}

// ---------------------------------------------------------------------------
// Initialization advice.

struct InitReport {
  bool passes = false;
  Coercivity coercivity = Coercivity::Coercive;
  double c0_threshold = 0.0;  // c0 must exceed this
  /// Lower bound alpha_0 s_0 must exceed for {z_k} to stay bounded
  /// (conditionally coercive sigma, only when sigma(z_0) is supplied).
  std::optional<double> alpha0_s0_threshold;
  std::string message;
};

struct InitInputs {
  double c_hat = 0.0;    // q(y0, c_hat) > -inf
  double q00 = 0.0;      // certified value of q(y0, c_hat)
  double s_level = 0.0;  // any upper bound on the primal optimal value
  std::optional<double> sigma_z0;
  double r_tilde = 0.0;  // upper bound on the r_k schedule
};

/// Coercive sigma: c0 > c_hat. Conditionally coercive sigma:
/// c0 > c_hat + (s_level - q00) / K_sigma. Advisory; never throws on failure.
inline InitReport validate_init(const AugmentingFunction& sigma, double c0, const InitInputs& in) {
  InitReport rep;
  rep.coercivity = sigma.coercivity;
  if (sigma.coercivity == Coercivity::Coercive) {
    rep.c0_threshold = in.c_hat;
  } else {
    rep.c0_threshold = in.c_hat + (in.s_level - in.q00) / sigma.k_sigma;
    if (in.sigma_z0 && *in.sigma_z0 > 0.0)
      rep.alpha0_s0_threshold = (in.s_level - in.q00 + in.r_tilde) / (sigma.k_sigma * *in.sigma_z0);
  }
  rep.passes = c0 > rep.c0_threshold;
  rep.message = rep.passes ? "c0 = " + std::to_string(c0) + " exceeds the threshold " + std::to_string(rep.c0_threshold)
                           : "c0 = " + std::to_string(c0) + " does not exceed the threshold " + std::to_string(rep.c0_threshold) +
                                 "; the exact method may be ill-defined";
  return rep;
}

// ---------------------------------------------------------------------------
// The outer loop.

namespace detail {

inline std::size_t shrink_passes(double r, double epsilon, double delta) {
  if (r <= epsilon) return 0;
  return static_cast<std::size_t>(std::ceil(std::log(epsilon / r) / std::log(delta)));
}

inline void fill_best(RunOutcome& out, const AugmentedLagrangian& L, double feas_tol) {
  for (const auto& rec : out.trace) {
    const double phi = L.problem().objective(rec.x);
    const bool feasible = rec.sigma_z <= feas_tol;
    const bool best_feasible = out.best_sigma <= feas_tol;
    bool take = false;
    if (feasible) take = !best_feasible || phi < out.best_objective;
    else if (!best_feasible) take = rec.sigma_z <= out.best_sigma;
    if (take) {
      out.best_primal = rec.x;
      out.best_objective = phi;
      out.best_sigma = rec.sigma_z;
    }
  }
}

}  // namespace detail

inline RunOutcome run(const AugmentedLagrangian& L, const DsgConfig& cfg, const SubsolverStrategy& strategy) {
  const std::size_t m = L.problem().constraint_dimension();
  cfg.validate(m);
  const auto& A = L.deflection();
  const auto& sigma = L.sigma();

  RunOutcome out;
  DualPoint dual{cfg.y0, cfg.c0};
  out.status = RunStatus::MaxIterReached;

  for (std::size_t k = 0; k < cfg.max_iter; ++k) {
    double r_k = cfg.r.at(k);

    SubproblemSolution sol;
    try {
      sol = solve_subproblem(L, dual, r_k, strategy);
    } catch (const Error& e) {
      out.status = RunStatus::SubsolverFailure;
      out.message = e.what();
      break;
    }

    IterationRecord rec;
    rec.k = k;
    rec.sigma_z = sigma(sol.z);
    rec.Az_norm = detail::norm2(A(sol.z));
    rec.q_k = sol.q_estimate;
    rec.y = dual.y;
    rec.c = dual.c;
    rec.certified = sol.certified;

    if (cfg.gamma0_R && rec.sigma_z > cfg.feas_tol) r_k = std::min(r_k, *cfg.gamma0_R * rec.sigma_z);

    if (cfg.nonmonotone_check && sol.certified && !out.trace.empty() && out.trace.back().certified) {
      const auto& prev = out.trace.back();
      const double floor = prev.q_k - prev.r_k - r_k - 1e-12 * (1.0 + std::abs(prev.q_k));
      if (rec.q_k < floor)
        throw Error(ErrorCode::NonmonotoneDualCertified, "certified dual value dropped from " + std::to_string(prev.q_k) + " to " +
                                                            std::to_string(rec.q_k) + " at iteration " + std::to_string(k));
    }

    if (rec.sigma_z <= cfg.feas_tol) {
      // Feasible z with r_k > epsilon: both subsolvers return the same point at
      // any tolerance, so re-solving would only tighten r_k; the pass count is bounded.
      const std::size_t passes = detail::shrink_passes(r_k, cfg.epsilon, cfg.delta);
      for (std::size_t i = 0; i < passes && r_k > cfg.epsilon; ++i) r_k *= cfg.delta;
      r_k = std::min(r_k, cfg.epsilon);
      rec.r_k = r_k;
      rec.s_k = 0.0;
      rec.x = std::move(sol.x);
      rec.z = std::move(sol.z);
      out.trace.push_back(std::move(rec));
      out.status = RunStatus::StoppedEpsilonOptimal;
      break;
    }

    StepBounds bounds;
    if (const auto* d1 = std::get_if<Dsg1Rule>(&cfg.rule)) {
      bounds = stepsize_bounds_dsg1(sol.z, A, sigma, d1->eta, d1->beta, cfg.feas_tol);
      rec.s_k = place(bounds, d1->placement);
    } else {
      const auto& d2 = std::get<Dsg2Rule>(cfg.rule);
      bounds = stepsize_bounds_dsg2(sol.z, sigma, d2.theta.at(k), d2.beta, cfg.feas_tol);
      rec.s_k = place(bounds, d2.placement);
    }
    if (!(rec.s_k > 0.0))
      throw Error(ErrorCode::ScheduleViolation, "step size at iteration " + std::to_string(k) + " is not positive");

    const double alpha_k = cfg.alpha.at(k);
    dual = dsg_update(dual, sol.z, A, sigma, rec.s_k, alpha_k);
    rec.r_k = r_k;
    rec.x = std::move(sol.x);
    rec.z = std::move(sol.z);
    out.trace.push_back(std::move(rec));
  }

  out.final_dual = dual;
  detail::fill_best(out, L, cfg.feas_tol);
  return out;
}

}  // namespace dsg
