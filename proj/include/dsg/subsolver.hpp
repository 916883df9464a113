#pragma once

// Inner subproblem of the deflected subgradient method: find x with
// l(x, y, c) <= q(y, c) + r. The grid oracle is exhaustive (certified up to
// grid resolution); multistart compass search is a cheaper, uncertified
// alternative.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <variant>

#include "dsg/core.hpp"

namespace dsg {

struct SubproblemSolution {
  PrimalPoint x;
  ConstraintValue z;  // h(x)
  double lagrangian_value = kInf;
  double q_estimate = kInf;
  bool certified = false;
  double residual = 0.0;  // lagrangian_value - q_estimate
  std::size_t evaluations = 0;
};

struct OracleConfig {
  double grid_step = 0.01;
  int refinement_rounds = 0;
  std::size_t max_evaluations = 10'000'000;  // per grid
  unsigned threads = 1;

  void validate() const {
    if (!(grid_step > 0.0) || !std::isfinite(grid_step)) throw Error(ErrorCode::InvalidArgument, "grid_step must be positive");
    if (refinement_rounds < 0) throw Error(ErrorCode::InvalidArgument, "refinement_rounds must be nonnegative");
    if (threads == 0) throw Error(ErrorCode::InvalidArgument, "threads must be >= 1");
  }
};

struct MultistartConfig {
  int starts = 16;
  int max_evals_per_start = 20000;
  double shrink_tolerance = 1e-9;
  std::uint64_t seed = 0;
  std::optional<PrimalPoint> warm_start;  // used as the first start when set

  void validate() const {
    if (starts < 1) throw Error(ErrorCode::InvalidArgument, "starts must be >= 1");
    if (max_evals_per_start < 1) throw Error(ErrorCode::InvalidArgument, "max_evals_per_start must be >= 1");
    if (!(shrink_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "shrink_tolerance must be positive");
  }
};

using SubsolverStrategy = std::variant<OracleConfig, MultistartConfig>;

namespace detail {

inline SubproblemSolution finish(const AugmentedLagrangian& L, PrimalPoint x, double value, bool certified,
                                 std::size_t evaluations) {
  SubproblemSolution s;
  s.z = L.problem().constraint(x);
  s.x = std::move(x);
  s.lagrangian_value = value;
  s.q_estimate = value;
  s.certified = certified;
  s.residual = 0.0;
  s.evaluations = evaluations;
  return s;
}

}  // namespace detail

/// Global minimizer of x -> l(x, y, c) over the box grid. Each refinement
/// round re-grids a window of +-3 cells around the incumbent at half the step
/// and keeps the better point, so the value never increases with rounds.
inline SubproblemSolution grid_oracle_minimize(const AugmentedLagrangian& L, const DualPoint& dual, const OracleConfig& cfg) {
  cfg.validate();
  L.check_dual(dual);
  const Box& box = L.problem().box();

  auto run_grid = [&](const detail::Grid& grid) {
    if (grid.size() > cfg.max_evaluations)
      throw Error(ErrorCode::GridTooLarge,
                  "grid of " + std::to_string(grid.size()) + " points exceeds the cap of " + std::to_string(cfg.max_evaluations));
    return detail::grid_argmin(grid, [&] { return L.evaluator(dual); }, cfg.threads);
  };

  auto best = run_grid(detail::make_grid(box.lower, box.upper, cfg.grid_step));
  if (best.x.empty()) throw Error(ErrorCode::ImproperValue, "Lagrangian is +inf on every grid point");
  std::size_t evaluations = best.evaluations;

  double step = cfg.grid_step;
  for (int round = 0; round < cfg.refinement_rounds; ++round) {
    Vector lo(best.x.size()), hi(best.x.size());
    for (std::size_t i = 0; i < best.x.size(); ++i) {
      lo[i] = std::max(box.lower[i], best.x[i] - 3.0 * step);
      hi[i] = std::min(box.upper[i], best.x[i] + 3.0 * step);
    }
    step *= 0.5;
    auto local = run_grid(detail::make_grid(lo, hi, step));
    evaluations += local.evaluations;
    if (local.value < best.value) {
      best.value = local.value;
      best.x = std::move(local.x);
    }
  }
  return detail::finish(L, std::move(best.x), best.value, true, evaluations);
}

namespace detail {

/// Compass search from `x`: polls +-step along each axis, accepts the first
/// improvement, halves the step after a full unsuccessful sweep.
inline double compass_search(AugmentedLagrangian::Evaluator& eval, const Box& box, PrimalPoint& x, double step, double tol,
                             int max_evals, std::size_t& evaluations) {
  double fx = eval(x);
  int used = 1;
  PrimalPoint trial = x;
  while (step >= tol && used < max_evals) {
    bool improved = false;
    for (std::size_t i = 0; i < x.size() && used < max_evals; ++i) {
      for (double sign : {1.0, -1.0}) {
        trial = x;
        trial[i] = std::clamp(x[i] + sign * step, box.lower[i], box.upper[i]);
        if (trial[i] == x[i]) continue;
        const double ft = eval(trial);
        ++used;
        if (ft < fx) {
          x.swap(trial);
          fx = ft;
          improved = true;
          break;
        }
        if (used >= max_evals) break;
      }
    }
    if (!improved) step *= 0.5;
  }
  evaluations += static_cast<std::size_t>(used);
  return fx;
}

}  // namespace detail

/// Best of `starts` compass searches from pseudo-random points of the box
/// (the warm start, if any, goes first). Deterministic given the seed.
inline SubproblemSolution multistart_minimize(const AugmentedLagrangian& L, const DualPoint& dual, const MultistartConfig& cfg) {
  cfg.validate();
  L.check_dual(dual);
  const Box& box = L.problem().box();
  const std::size_t n = L.problem().dimension();
  double initial_step = 0.1 * box.min_width();
  if (!(initial_step > 0.0)) initial_step = 0.1 * std::max(box.max_width(), 1.0);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto eval = L.evaluator(dual);

  PrimalPoint best_x;
  double best = kInf;
  std::size_t evaluations = 0;
  for (int s = 0; s < cfg.starts; ++s) {
    PrimalPoint x(n);
    if (s == 0 && cfg.warm_start) {
      L.check_primal(*cfg.warm_start);
      x = box.clamp(*cfg.warm_start);
    } else {
      for (std::size_t i = 0; i < n; ++i) x[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * u01(rng);
    }
    const double f = detail::compass_search(eval, box, x, initial_step, cfg.shrink_tolerance, cfg.max_evals_per_start, evaluations);
    if (f < best || best_x.empty()) {
      best = f;
      best_x = std::move(x);
    }
  }
  return detail::finish(L, std::move(best_x), best, false, evaluations);
}

/// An r-minimizer of the Lagrangian at `dual`. Both strategies
/// return their best point, so for r >= 0 the oracle answer is always
/// admissible (residual 0). Multistart answers carry no certificate.
inline SubproblemSolution solve_subproblem(const AugmentedLagrangian& L, const DualPoint& dual, double r,
                                           const SubsolverStrategy& strategy, bool require_certified = false) {
  if (!(r >= 0.0)) throw Error(ErrorCode::InvalidArgument, "subproblem tolerance r must be nonnegative");
  if (const auto* oracle = std::get_if<OracleConfig>(&strategy)) return grid_oracle_minimize(L, dual, *oracle);
  if (require_certified) throw Error(ErrorCode::CertificationUnavailable, "multistart search cannot certify an r-minimizer");
  return multistart_minimize(L, dual, std::get<MultistartConfig>(strategy));
}

}  // namespace dsg
