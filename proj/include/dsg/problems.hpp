#pragma once

// Desk-scale test problems with known optima.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsg/core.hpp"

namespace dsg {

struct NamedProblem {
  std::string id;
  ProblemInstance instance;
  std::optional<double> analytic_MP;
  std::optional<PrimalPoint> analytic_solution;
  std::optional<DualPoint> known_dual_solution;  // for the sharp Lagrangian (A = I, sigma = 2-norm)
  double grid_step = 0.01;                        // resolution the oracle handles within its cap
  std::string notes;
};

namespace problems {

/// min x1^2 + x2^2  s.t.  x1 + x2 - 1 = 0  on [-2, 2]^2.
inline NamedProblem p1() {
  ProblemInstance inst(
      2, 1, [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; },
      [](std::span<const double> x, std::span<double> h) { h[0] = x[0] + x[1] - 1.0; }, Box{{-2.0, -2.0}, {2.0, 2.0}}, 0.5);
  return {"P1", std::move(inst), 0.5, PrimalPoint{0.5, 0.5}, DualPoint{{1.0}, 0.0}, 0.01,
          "convex QP; the classical multiplier y = 1 already closes the gap"};
}

/// min -x^2  s.t.  x - 1 = 0  on [-1, 2].
inline NamedProblem p2() {
  ProblemInstance inst(
      1, 1, [](std::span<const double> x) { return -x[0] * x[0]; },
      [](std::span<const double> x, std::span<double> h) { h[0] = x[0] - 1.0; }, Box{{-1.0}, {2.0}}, -1.0);
  return {"P2", std::move(inst), -1.0, PrimalPoint{1.0}, DualPoint{{0.0}, 3.0}, 0.01,
          "nonconvex; classical dual value -3 at y = -1, so the classical gap is 2; "
          "sharp dual solutions are c >= max(3 + y, -y)"};
}

/// min sin(3 x1) + x2^2  s.t.  (x1 - 1, x1 + x2 - 1) = 0  on [-2, 2]^2.
inline NamedProblem p3() {
  ProblemInstance inst(
      2, 2, [](std::span<const double> x) { return std::sin(3.0 * x[0]) + x[1] * x[1]; },
      [](std::span<const double> x, std::span<double> h) {
        h[0] = x[0] - 1.0;
        h[1] = x[0] + x[1] - 1.0;
      },
      Box{{-2.0, -2.0}, {2.0, 2.0}}, std::sin(3.0));
  return {"P3", std::move(inst), std::sin(3.0), PrimalPoint{1.0, 0.0}, std::nullopt, 0.01,
          "nonconvex with two constraints; the feasible set is the single point (1, 0)"};
}

/// Two steps of a discretized double integrator. x = (p1, v1, p2, v2, u0, u1)
/// with p0 = 0.1, v0 = 0, dt = 0.5; terminal cost plus control energy minus a
/// narrow bump centred at u = (0.2, -0.2).
inline NamedProblem p4() {
  constexpr double p0 = 0.1, v0 = 0.0, dt = 0.5;
  ProblemInstance inst(
      6, 4,
      [](std::span<const double> x) {
        const double du0 = x[4] - 0.2, du1 = x[5] + 0.2;
        return x[2] * x[2] + x[3] * x[3] + 0.5 * (x[4] * x[4] + x[5] * x[5]) - 0.3 * std::exp(-(du0 * du0 + du1 * du1) / 0.01);
      },
      [](std::span<const double> x, std::span<double> h) {
        h[0] = x[0] - p0 - dt * v0;
        h[1] = x[1] - v0 - dt * x[4];
        h[2] = x[2] - x[0] - dt * x[1];
        h[3] = x[3] - x[1] - dt * x[5];
      },
      Box{Vector(6, -0.25), Vector(6, 0.25)});
  return {"P4", std::move(inst), std::nullopt, std::nullopt, std::nullopt, 0.05,
          "discretized control toy; best feasible grid point at step 0.05 is "
          "(0.1, 0.1, 0.15, 0, 0.2, -0.2) with value -0.2375"};
}

}  // namespace problems

inline std::vector<NamedProblem> catalog() {
  std::vector<NamedProblem> out;
  out.push_back(problems::p1());
  out.push_back(problems::p2());
  out.push_back(problems::p3());
  out.push_back(problems::p4());
  return out;
}

inline NamedProblem find_problem(std::string_view id) {
  if (id == "P1") return problems::p1();
  if (id == "P2") return problems::p2();
  if (id == "P3") return problems::p3();
  if (id == "P4") return problems::p4();
  throw Error(ErrorCode::UnknownProblem, "no cataloged problem named '" + std::string(id) + "'");
}

}  // namespace dsg
