#pragma once

// Domain types for equality-constrained problems
//
//     min phi(x)  s.t.  h(x) = 0,  x in box,
//
// and the augmented Lagrangian
//
//     l(x, y, c) = phi(x) - <A(h(x)), y> + c * sigma(h(x)),
//
// obtained from the dualizing parameterization f(x, z) = phi(x) if h(x) = z
// and +inf otherwise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsg/detail/grid.hpp"
#include "dsg/detail/linalg.hpp"
#include "dsg/error.hpp"

namespace dsg {

using PrimalPoint = Vector;
using ConstraintValue = Vector;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using ObjectiveFn = std::function<double(std::span<const double>)>;
/// Writes h(x) (length m) into the second argument.
using ConstraintFn = std::function<void(std::span<const double>, std::span<double>)>;

struct Box {
  Vector lower;
  Vector upper;

  std::size_t dimension() const { return lower.size(); }

  bool contains(std::span<const double> x) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
    return true;
  }

  double min_width() const {
    double w = kInf;
    for (std::size_t i = 0; i < lower.size(); ++i) w = std::min(w, upper[i] - lower[i]);
    return w;
  }

  double max_width() const {
    double w = 0.0;
    for (std::size_t i = 0; i < lower.size(); ++i) w = std::max(w, upper[i] - lower[i]);
    return w;
  }

  PrimalPoint clamp(PrimalPoint x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
  }
};

/// A finite-dimensional instance: objective phi, constraint map h and a
/// compact box domain. phi may return +inf; -inf or NaN is rejected on
/// evaluation.
class ProblemInstance {
 public:
  ProblemInstance(std::size_t n, std::size_t m, ObjectiveFn objective, ConstraintFn constraint, Box box,
                  std::optional<double> known_optimum = std::nullopt)
      : n_(n),
        m_(m),
        objective_(std::move(objective)),
        constraint_(std::move(constraint)),
        box_(std::move(box)),
        known_optimum_(known_optimum) {
    if (n_ == 0 || m_ == 0) throw Error(ErrorCode::InvalidArgument, "problem dimensions must be positive");
    if (!objective_ || !constraint_) throw Error(ErrorCode::InvalidArgument, "objective and constraint are required");
    if (box_.lower.size() != n_ || box_.upper.size() != n_)
      throw Error(ErrorCode::DimensionMismatch, "box bounds must have length n = " + std::to_string(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      if (!std::isfinite(box_.lower[i]) || !std::isfinite(box_.upper[i]))
        throw Error(ErrorCode::InvalidArgument, "box bounds must be finite");
      if (box_.lower[i] > box_.upper[i])
        throw Error(ErrorCode::InvalidArgument, "empty box: lower > upper in coordinate " + std::to_string(i));
    }
  }

  std::size_t dimension() const { return n_; }
  std::size_t constraint_dimension() const { return m_; }
  const Box& box() const { return box_; }
  const std::optional<double>& known_optimum() const { return known_optimum_; }

  double objective(std::span<const double> x) const {
    const double v = objective_(x);
    if (std::isnan(v) || v == -kInf) throw Error(ErrorCode::ImproperValue, "objective returned NaN or -inf");
    return v;
  }

  void constraint(std::span<const double> x, std::span<double> out) const {
    constraint_(x, out);
    if (!detail::all_finite(out)) throw Error(ErrorCode::ImproperValue, "constraint map returned a non-finite value");
  }

  ConstraintValue constraint(std::span<const double> x) const {
    ConstraintValue z(m_);
    constraint(x, z);
    return z;
  }

 private:
  std::size_t n_;
  std::size_t m_;
  ObjectiveFn objective_;
  ConstraintFn constraint_;
  Box box_;
  std::optional<double> known_optimum_;
};

enum class Coercivity { Coercive, ConditionallyCoercive };

/// The augmenting function sigma. For conditionally coercive functions,
/// `k_sigma` is a level for which {z : sigma(z) <= k_sigma} is bounded.
struct AugmentingFunction {
  std::string name;
  std::function<double(std::span<const double>)> eval;
  Coercivity coercivity = Coercivity::Coercive;
  double k_sigma = 0.0;

  double operator()(std::span<const double> z) const {
    const double v = eval(z);
    if (std::isnan(v) || v < 0.0) throw Error(ErrorCode::ImproperValue, "augmenting function " + name + " returned a negative or NaN value");
    return v;
  }
};

/// The deflection map A : R^m -> R^m used in the linear term.
struct DeflectionMap {
  std::string name;
  std::function<void(std::span<const double>, std::span<double>)> eval;

  void apply(std::span<const double> z, std::span<double> out) const { eval(z, out); }

  ConstraintValue operator()(std::span<const double> z) const {
    ConstraintValue out(z.size());
    eval(z, out);
    return out;
  }
};

struct DualPoint {
  Vector y;
  double c = 0.0;
};

/// Bundles a problem with its (A, sigma) pair so the Lagrangian can be
/// evaluated without re-checking dimensions at every point.
class AugmentedLagrangian {
 public:
  AugmentedLagrangian(ProblemInstance problem, DeflectionMap deflection, AugmentingFunction sigma)
      : problem_(std::move(problem)), deflection_(std::move(deflection)), sigma_(std::move(sigma)) {
    if (!deflection_.eval || !sigma_.eval) throw Error(ErrorCode::InvalidArgument, "deflection map and augmenting function are required");
  }

  const ProblemInstance& problem() const { return problem_; }
  const DeflectionMap& deflection() const { return deflection_; }
  const AugmentingFunction& sigma() const { return sigma_; }

  void check_dual(const DualPoint& dual) const {
    if (dual.y.size() != problem_.constraint_dimension())
      throw Error(ErrorCode::DimensionMismatch, "multiplier has length " + std::to_string(dual.y.size()) + ", expected m = " +
                                                    std::to_string(problem_.constraint_dimension()));
    if (!(dual.c >= 0.0) || !std::isfinite(dual.c) || !detail::all_finite(dual.y))
      throw Error(ErrorCode::InvalidArgument, "dual point must be finite with c >= 0");
  }

  void check_primal(std::span<const double> x) const {
    if (x.size() != problem_.dimension())
      throw Error(ErrorCode::DimensionMismatch, "primal point has length " + std::to_string(x.size()) + ", expected n = " +
                                                    std::to_string(problem_.dimension()));
  }

  /// Allocation-free evaluator for hot loops; one per thread.
  class Evaluator {
   public:
    Evaluator(const AugmentedLagrangian& L, DualPoint dual)
        : L_(&L), dual_(std::move(dual)), z_(L.problem().constraint_dimension()), az_(z_.size()) {}

    double operator()(std::span<const double> x) {
      const double phi = L_->problem_.objective(x);
      if (phi == kInf) return kInf;
      L_->problem_.constraint(x, z_);
      L_->deflection_.apply(z_, az_);
      return phi - detail::dot(az_, dual_.y) + dual_.c * L_->sigma_(z_);
    }

    const DualPoint& dual() const { return dual_; }

   private:
    const AugmentedLagrangian* L_;
    DualPoint dual_;
    Vector z_;
    Vector az_;
  };

  Evaluator evaluator(const DualPoint& dual) const {
    check_dual(dual);
    return Evaluator(*this, dual);
  }

  double operator()(std::span<const double> x, const DualPoint& dual) const {
    check_primal(x);
    auto e = evaluator(dual);
    return e(x);
  }

 private:
  ProblemInstance problem_;
  DeflectionMap deflection_;
  AugmentingFunction sigma_;
};

/// l(x, y, c) = phi(x) - <A(h(x)), y> + c sigma(h(x)); +inf iff phi(x) = +inf.
inline double lagrangian_eval(const ProblemInstance& problem, const DeflectionMap& A, const AugmentingFunction& sigma,
                              std::span<const double> x, const DualPoint& dual) {
  const AugmentedLagrangian L(problem, A, sigma);
  return L(x, dual);
}

/// Minimum of phi over grid points whose constraint value lies within
/// `slice_tolerance` of `z`. Returns nullopt when that slice is empty, and
/// +inf when phi is +inf on every point of a nonempty slice. The default
/// tolerance is 1.5 times the diagonal of one grid cell.
inline std::optional<double> perturbation_beta(const ProblemInstance& problem, std::span<const double> z, double resolution,
                                               std::optional<double> slice_tolerance = std::nullopt,
                                               std::size_t max_evaluations = 10'000'000) {
  if (z.size() != problem.constraint_dimension())
    throw Error(ErrorCode::DimensionMismatch, "perturbation target has wrong length");
  if (!(resolution > 0.0)) throw Error(ErrorCode::InvalidArgument, "resolution must be positive");
  const auto grid = detail::make_grid(problem.box().lower, problem.box().upper, resolution);
  if (grid.size() > max_evaluations)
    throw Error(ErrorCode::GridTooLarge, "grid of " + std::to_string(grid.size()) + " points exceeds the cap");
  const double tol = slice_tolerance.value_or(1.5 * grid.cell_diagonal());
  if (!(tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "slice tolerance must be nonnegative");

  bool any = false;
  Vector hz(problem.constraint_dimension());
  auto best = detail::grid_argmin(grid, [&] {
    return [&](std::span<const double> x) {
      problem.constraint(x, hz);
      if (detail::distance(hz, z) > tol) return kInf;
      any = true;
      return problem.objective(x);
    };
  });
  if (!any) return std::nullopt;
  return best.value;
}

// ---------------------------------------------------------------------------
// Assumption validation by sampling.

struct AssumptionCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // most violating sampled quantity (<= 0 means satisfied)
  std::string detail;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  std::optional<double> level_set_radius;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }

  const AssumptionCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct ValidationOptions {
  double radius = 10.0;         // sampling region for z
  double far_radius = 1e6;      // probe distance for level-set boundedness
  double tolerance = 1e-12;
};

namespace detail {

inline Vector random_in_ball(std::mt19937_64& rng, std::size_t m, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector z(m);
  double nz = 0.0;
  while (nz == 0.0) {
    for (auto& v : z) v = normal(rng);
    nz = norm2(z);
  }
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(m));
  for (auto& v : z) v *= r / nz;
  return z;
}

inline Vector unit(Vector z) {
  const double nz = norm2(z);
  for (auto& v : z) v /= nz;
  return z;
}

inline Vector random_direction(std::mt19937_64& rng, std::size_t m) { return unit(random_in_ball(rng, m, 1.0)); }

}  // namespace detail

/// Checks sigma(0) = 0, argmin sigma = {0}, A(0) = 0, sigma >= ||A(.)|| and
/// (for conditionally coercive sigma) boundedness of {sigma <= K} on
/// `samples` pseudo-random points; also sanity-checks phi and h on the box.
/// Failures on samples are conclusive; passes are evidence only.
inline ValidationReport validate_assumptions(const ProblemInstance& problem, const DeflectionMap& A,
                                             const AugmentingFunction& sigma, std::size_t samples, std::uint64_t seed,
                                             const ValidationOptions& opts = {}) {
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  const std::size_t m = problem.constraint_dimension();
  const std::size_t n = problem.dimension();
  std::mt19937_64 rng(seed);
  ValidationReport report;

  const Vector zero(m, 0.0);
  {
    const double s0 = sigma.eval(zero);
    report.checks.push_back({"sigma_zero_at_origin", std::abs(s0) <= opts.tolerance, std::abs(s0), "sigma(0) = " + std::to_string(s0)});
    const double a0 = detail::norm2(A(zero));
    report.checks.push_back({"deflection_zero_at_origin", a0 <= opts.tolerance, a0, "||A(0)|| = " + std::to_string(a0)});
  }

  AssumptionCheck positive{"sigma_positive_off_origin", true, -kInf, ""};
  AssumptionCheck dom{"sigma_dominates_deflection", true, -kInf, ""};
  for (std::size_t i = 0; i < samples; ++i) {
    // Mix of scales so that both small and large |z| are covered.
    const double scale = opts.radius * std::pow(10.0, -static_cast<double>(i % 4) * 2.0);
    const Vector z = detail::random_in_ball(rng, m, scale);
    const double s = sigma.eval(z);
    const double az = detail::norm2(A(z));
    positive.worst = std::max(positive.worst, -s);
    if (!(s > 0.0)) positive.passed = false;
    const double gap = az - s;
    dom.worst = std::max(dom.worst, gap);
    if (gap > opts.tolerance * (1.0 + s)) dom.passed = false;
  }
  report.checks.push_back(positive);
  report.checks.push_back(dom);

  if (sigma.coercivity == Coercivity::ConditionallyCoercive) {
    AssumptionCheck level{"level_set_bounded", sigma.k_sigma > 0.0, -kInf, ""};
    double radius = 0.0;
    const std::size_t rays = std::min<std::size_t>(samples, 512);
    for (std::size_t i = 0; i < rays && level.passed; ++i) {
      const Vector d = detail::random_direction(rng, m);
      auto at = [&](double t) {
        Vector z = d;
        for (auto& v : z) v *= t;
        return sigma.eval(z);
      };
      if (at(opts.far_radius) <= sigma.k_sigma) {
        level.passed = false;
        level.detail = "sigma stays below K_sigma at distance " + std::to_string(opts.far_radius);
        radius = kInf;
        break;
      }
      // Crossing radius along the ray by bisection.
      double lo = 0.0, hi = opts.far_radius;
      for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (at(mid) <= sigma.k_sigma ? lo : hi) = mid;
      }
      radius = std::max(radius, lo);
    }
    level.worst = radius;
    if (level.passed) {
      report.level_set_radius = radius;
      level.detail = "sampled level-set radius " + std::to_string(radius);
    }
    report.checks.push_back(level);
  } else {
    AssumptionCheck growth{"coercive_growth", true, -kInf, ""};
    const std::size_t rays = std::min<std::size_t>(samples, 512);
    for (std::size_t i = 0; i < rays; ++i) {
      Vector z = detail::random_direction(rng, m);
      for (auto& v : z) v *= opts.far_radius;
      const double s = sigma.eval(z);
      growth.worst = std::max(growth.worst, 1.0 - s);
      if (!(s >= 1.0)) {
        growth.passed = false;
        growth.detail = "sigma below 1 at distance " + std::to_string(opts.far_radius);
      }
    }
    report.checks.push_back(growth);
  }

  // Objective properness and constraint continuity on the box.
  AssumptionCheck proper{"objective_proper", true, 0.0, ""};
  AssumptionCheck cont{"constraint_continuous", true, 0.0, ""};
  bool finite_somewhere = false;
  const Box& box = problem.box();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vector x(n), xp(n), hx(m), hxp(m);
  const std::size_t box_samples = std::min<std::size_t>(samples, 4096);
  for (std::size_t i = 0; i < box_samples; ++i) {
    for (std::size_t j = 0; j < n; ++j) x[j] = box.lower[j] + (box.upper[j] - box.lower[j]) * u01(rng);
    const double v = problem.objective(x);  // throws on -inf / NaN
    if (std::isfinite(v)) finite_somewhere = true;
    problem.constraint(x, hx);
    const Vector d = detail::random_direction(rng, n);
    const double delta = 1e-9 * (1.0 + box.max_width());
    for (std::size_t j = 0; j < n; ++j) xp[j] = std::clamp(x[j] + delta * d[j], box.lower[j], box.upper[j]);
    problem.constraint(xp, hxp);
    const double jump = detail::distance(hx, hxp);
    cont.worst = std::max(cont.worst, jump);
    if (jump > 1e-4) cont.passed = false;
  }
  proper.passed = finite_somewhere;
  if (!finite_somewhere) proper.detail = "objective is +inf at every sample";
  report.checks.push_back(proper);
  report.checks.push_back(cont);
  return report;
}

}  // namespace dsg
