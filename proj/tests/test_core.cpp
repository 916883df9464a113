#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dsg/core.hpp"
#include "dsg/penalties.hpp"
#include "dsg/problems.hpp"

using namespace dsg;

namespace {

ProblemInstance line_problem() {
  return ProblemInstance(
      2, 1, [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; },
      [](std::span<const double> x, std::span<double> h) { h[0] = x[0] + x[1] - 1.0; }, Box{{-2.0, -2.0}, {2.0, 2.0}});
}

/// Reference: min phi over grid points with |h(x) - z| <= tol, by nested loops.
double brute_beta_1d_constraint(const ProblemInstance& p, double z, double step, double tol) {
  double best = std::numeric_limits<double>::infinity();
  const auto& b = p.box();
  const int n0 = static_cast<int>(std::lround((b.upper[0] - b.lower[0]) / step));
  const int n1 = static_cast<int>(std::lround((b.upper[1] - b.lower[1]) / step));
  for (int i = 0; i <= n0; ++i)
    for (int j = 0; j <= n1; ++j) {
      const double x[2] = {b.lower[0] + (b.upper[0] - b.lower[0]) * i / n0, b.lower[1] + (b.upper[1] - b.lower[1]) * j / n1};
      const auto h = p.constraint(x);
      if (std::abs(h[0] - z) <= tol) best = std::min(best, p.objective(x));
    }
  return best;
}

}  // namespace

TEST(Grid, AxisHitsBothEndpoints) {
  const auto a = detail::make_axis(-1.0, 2.0, 0.01);
  ASSERT_EQ(a.size(), 301u);
  EXPECT_EQ(a.front(), -1.0);
  EXPECT_EQ(a.back(), 2.0);
  EXPECT_EQ(a[200], 1.0);
  EXPECT_EQ(detail::make_axis(3.0, 3.0, 0.1).size(), 1u);
  EXPECT_THROW(detail::make_axis(0.0, 1.0, 0.0), Error);
}

TEST(Grid, VisitsEveryPointInLexicographicOrder) {
  const auto g = detail::make_grid(Vector{0.0, 0.0, 0.0}, Vector{1.0, 2.0, 1.0}, 0.5);
  std::vector<Vector> seen;
  detail::for_each_point(g, 0, g.axes[0].size(), [&](std::span<const double> x) { seen.emplace_back(x.begin(), x.end()); });
  ASSERT_EQ(seen.size(), g.size());
  EXPECT_EQ(seen.size(), 3u * 5u * 3u);
  for (std::size_t i = 1; i < seen.size(); ++i) EXPECT_LT(seen[i - 1], seen[i]);
}

TEST(Grid, ThreadCountDoesNotChangeTheArgmin) {
  // Ties everywhere on a constant function: the first point must win.
  const auto g = detail::make_grid(Vector{-1.0, -1.0}, Vector{1.0, 1.0}, 0.1);
  auto flat = [] { return [](std::span<const double>) { return 1.0; }; };
  for (unsigned t : {1u, 2u, 3u, 7u}) {
    const auto r = detail::grid_argmin(g, flat, t);
    EXPECT_EQ(r.x, (Vector{-1.0, -1.0}));
    EXPECT_EQ(r.evaluations, g.size());
  }
  auto bowl = [] { return [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3) + (x[1] + 0.2) * (x[1] + 0.2); }; };
  const auto r1 = detail::grid_argmin(g, bowl, 1);
  const auto r4 = detail::grid_argmin(g, bowl, 4);
  EXPECT_EQ(r1.x, r4.x);
  EXPECT_EQ(r1.value, r4.value);
}

TEST(Grid, WorkerExceptionsPropagate) {
  const auto g = detail::make_grid(Vector{0.0}, Vector{1.0}, 0.1);
  auto bad = [] { return [](std::span<const double> x) -> double { if (x[0] > 0.5) throw Error(ErrorCode::ImproperValue, "boom"); return 0.0; }; };
  EXPECT_THROW(detail::grid_argmin(g, bad, 3), Error);
}

TEST(ProblemInstance, RejectsBadShapes) {
  auto phi = [](std::span<const double>) { return 0.0; };
  auto h = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
  EXPECT_THROW(ProblemInstance(2, 1, phi, h, Box{{0.0}, {1.0}}), Error);
  EXPECT_THROW(ProblemInstance(1, 1, phi, h, Box{{1.0}, {0.0}}), Error);
  EXPECT_THROW(ProblemInstance(1, 1, phi, h, Box{{0.0}, {std::numeric_limits<double>::infinity()}}), Error);
  EXPECT_THROW(ProblemInstance(0, 1, phi, h, Box{{}, {}}), Error);
}

TEST(ProblemInstance, ObjectiveMayBePlusInfinityButNotNan) {
  ProblemInstance p(
      1, 1, [](std::span<const double> x) { return x[0] < 0 ? std::numeric_limits<double>::infinity() : (x[0] > 0.5 ? std::nan("") : 0.0); },
      [](std::span<const double> x, std::span<double> h) { h[0] = x[0]; }, Box{{-1.0}, {1.0}});
  const double neg[1] = {-0.5}, mid[1] = {0.25}, hi[1] = {0.75};
  EXPECT_EQ(p.objective(neg), std::numeric_limits<double>::infinity());
  EXPECT_EQ(p.objective(mid), 0.0);
  try {
    p.objective(hi);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImproperValue);
  }
}

TEST(Lagrangian, MatchesHandComputedValues) {
  const auto p = line_problem();
  const auto [A, sigma] = make_sharp(2.0, 1);
  const double x[2] = {0.0, 0.0};
  // phi = 0, z = -1: l = 0 - (-1)(2) + 3 * 1 = 5
  EXPECT_DOUBLE_EQ(lagrangian_eval(p, A, sigma, x, {{2.0}, 3.0}), 5.0);
  const double xs[2] = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(lagrangian_eval(p, A, sigma, xs, {{7.0}, 9.0}), 0.5);
  EXPECT_THROW(lagrangian_eval(p, A, sigma, x, {{1.0, 2.0}, 0.0}), Error);
  EXPECT_THROW(lagrangian_eval(p, A, sigma, x, {{1.0}, -1.0}), Error);
}

TEST(Lagrangian, PenaltyPairIgnoresMultiplier) {
  const auto p = line_problem();
  const auto [A, sigma] = make_penalty(euclidean_norm());
  const double x[2] = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(lagrangian_eval(p, A, sigma, x, {{100.0}, 2.0}), lagrangian_eval(p, A, sigma, x, {{-5.0}, 2.0}));
}

TEST(PerturbationBeta, AgreesWithNestedLoopReference) {
  const auto p = line_problem();
  for (double z : {0.0, 0.3, -0.7}) {
    for (double tol : {0.01, 0.05}) {
      const Vector zz{z};
      const auto got = perturbation_beta(p, zz, 0.05, tol);
      ASSERT_TRUE(got.has_value());
      EXPECT_DOUBLE_EQ(*got, brute_beta_1d_constraint(p, z, 0.05, tol)) << "z=" << z << " tol=" << tol;
    }
  }
}

TEST(PerturbationBeta, EmptySliceIsNullopt) {
  const auto p = line_problem();
  const Vector far{50.0};
  EXPECT_FALSE(perturbation_beta(p, far, 0.1).has_value());
  EXPECT_THROW(perturbation_beta(p, far, 1e-4, std::nullopt, 1000), Error);
}

TEST(PerturbationBeta, AnalyticValueOfLineProblem) {
  // beta(z) = (1 + z)^2 / 2 for the line problem; grid value tracks it.
  const auto p = line_problem();
  for (double z : {0.0, 0.5, -0.5}) {
    const Vector zz{z};
    EXPECT_NEAR(*perturbation_beta(p, zz, 0.01, 0.005), (1.0 + z) * (1.0 + z) / 2.0, 1e-3);
  }
}

TEST(ValidateAssumptions, SharpPairPasses) {
  const auto p = line_problem();
  const auto [A, sigma] = make_sharp(2.0, 1);
  const auto rep = validate_assumptions(p, A, sigma, 10'000, 0);
  EXPECT_TRUE(rep.all_passed());
}

TEST(ValidateAssumptions, SquaredNormWithIdentityIsNotDominated) {
  const auto p = line_problem();
  const auto rep = validate_assumptions(p, identity_map(), squared_norm(), 10'000, 0);
  EXPECT_FALSE(rep.all_passed());
  ASSERT_NE(rep.find("sigma_dominates_deflection"), nullptr);
  EXPECT_FALSE(rep.find("sigma_dominates_deflection")->passed);
  EXPECT_TRUE(rep.find("sigma_positive_off_origin")->passed);
}

TEST(ValidateAssumptions, ZeroSigmaFailsPositivity) {
  const auto p = line_problem();
  AugmentingFunction zero{"zero", [](std::span<const double>) { return 0.0; }, Coercivity::Coercive, 0.0};
  const auto rep = validate_assumptions(p, zero_map(), zero, 100, 0);
  EXPECT_FALSE(rep.find("sigma_positive_off_origin")->passed);
  EXPECT_FALSE(rep.find("coercive_growth")->passed);
}

TEST(ValidateAssumptions, SaturatingLevelSetRadius) {
  // {|z|/(1+|z|) <= 1/2} is the unit ball.
  const auto p = line_problem();
  const auto rep = validate_assumptions(p, zero_map(), saturating(0.5), 200, 0);
  EXPECT_TRUE(rep.all_passed());
  ASSERT_TRUE(rep.level_set_radius.has_value());
  EXPECT_NEAR(*rep.level_set_radius, 1.0, 1e-9);
}

TEST(ValidateAssumptions, DiscontinuousConstraintIsFlagged) {
  ProblemInstance p(
      1, 1, [](std::span<const double> x) { return x[0]; },
      [](std::span<const double> x, std::span<double> h) { h[0] = std::fmod(std::abs(x[0]) * 1e12, 1.0); }, Box{{-1.0}, {1.0}});
  const auto [A, sigma] = make_sharp(2.0, 1);
  const auto rep = validate_assumptions(p, A, sigma, 4096, 0);
  EXPECT_FALSE(rep.find("constraint_continuous")->passed);
}
