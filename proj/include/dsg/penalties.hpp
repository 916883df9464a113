#pragma once

// Ready-made (A, sigma) pairs. Every pair produced here satisfies
// sigma(z) >= ||A(z)||_2 for all z.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsg/core.hpp"

namespace dsg {

using Matrix = std::vector<Vector>;  // row-major, square m x m

using LagrangianPair = std::pair<DeflectionMap, AugmentingFunction>;

inline DeflectionMap identity_map() {
  return {"identity", [](std::span<const double> z, std::span<double> out) {
            for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i];
          }};
}

inline DeflectionMap zero_map() {
  return {"zero", [](std::span<const double>, std::span<double> out) {
            for (auto& v : out) v = 0.0;
          }};
}

/// z -> (M / scale) z.
inline DeflectionMap matrix_map(Matrix M, double scale = 1.0) {
  for (const auto& row : M)
    if (row.size() != M.size()) throw Error(ErrorCode::DimensionMismatch, "deflection matrix must be square");
  return {"scaled-matrix", [M = std::move(M), scale](std::span<const double> z, std::span<double> out) {
            if (z.size() != M.size()) throw Error(ErrorCode::DimensionMismatch, "deflection matrix size does not match z");
            for (std::size_t i = 0; i < M.size(); ++i) out[i] = detail::dot(M[i], z) / scale;
          }};
}

inline AugmentingFunction euclidean_norm() {
  return {"euclidean-norm", [](std::span<const double> z) { return detail::norm2(z); }, Coercivity::Coercive, 0.0};
}

/// scale * ||z||_p.
inline AugmentingFunction p_norm(double p, double scale = 1.0) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidExponent, "p-norm exponent must be a finite value >= 1");
  return {"p-norm", [p, scale](std::span<const double> z) {
            if (p == 1.0) {
              double s = 0.0;
              for (double v : z) s += std::abs(v);
              return scale * s;
            }
            if (p == 2.0) return scale * detail::norm2(z);
            double mx = 0.0;
            for (double v : z) mx = std::max(mx, std::abs(v));
            if (mx == 0.0) return 0.0;
            double s = 0.0;
            for (double v : z) s += std::pow(std::abs(v) / mx, p);
            return scale * mx * std::pow(s, 1.0 / p);
          },
          Coercivity::Coercive, 0.0};
}

inline AugmentingFunction squared_norm() {
  return {"squared-norm", [](std::span<const double> z) { return detail::dot(z, z); }, Coercivity::Coercive, 0.0};
}

/// sqrt(sum_i w_i z_i^2) with w_i > 0.
inline AugmentingFunction weighted_norm(Vector weights) {
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be positive and finite");
  return {"weighted-norm", [w = std::move(weights)](std::span<const double> z) {
            if (z.size() != w.size()) throw Error(ErrorCode::DimensionMismatch, "weight vector length does not match z");
            double s = 0.0;
            for (std::size_t i = 0; i < z.size(); ++i) s += w[i] * z[i] * z[i];
            return std::sqrt(s);
          },
          Coercivity::Coercive, 0.0};
}

/// sigma(z) = ||z|| / (1 + ||z||). Bounded by 1, hence not coercive; the
/// level set {sigma <= K} is the ball of radius K / (1 - K) for K < 1.
inline AugmentingFunction saturating(double k_sigma) {
  if (!(k_sigma > 0.0 && k_sigma < 1.0)) throw Error(ErrorCode::InvalidArgument, "saturating K_sigma must lie in (0, 1)");
  return {"saturating", [](std::span<const double> z) {
            const double r = detail::norm2(z);
            return r / (1.0 + r);
          },
          Coercivity::ConditionallyCoercive, k_sigma};
}

/// Sharp Lagrangian: A = identity and sigma = p-norm. For p > 2 the p-norm
/// is scaled by m^(1/2 - 1/p) so that it dominates the Euclidean norm.
inline LagrangianPair make_sharp(double p, std::size_t m) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidExponent, "sharp Lagrangian requires p >= 1, got " + std::to_string(p));
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "constraint dimension must be positive");
  const double scale = p > 2.0 ? std::pow(static_cast<double>(m), 0.5 - 1.0 / p) : 1.0;
  auto sigma = p_norm(p, scale);
  sigma.name = p == 2.0 ? "sharp-p2" : (p == 1.0 ? "sharp-p1" : "sharp-p" + std::to_string(p));
  return {identity_map(), std::move(sigma)};
}

/// Pure penalty pairing: A = 0, so the multiplier never enters the Lagrangian.
inline LagrangianPair make_penalty(AugmentingFunction sigma) { return {zero_map(), std::move(sigma)}; }

namespace detail {

/// Points on the unit sphere of R^m used to bound ||Mz|| / sigma(z).
inline std::vector<Vector> sphere_grid(std::size_t m) {
  std::vector<Vector> pts;
  if (m == 1) {
    pts = {{1.0}, {-1.0}};
  } else if (m == 2) {
    constexpr int kAngles = 3600;
    for (int i = 0; i < kAngles; ++i) {
      const double t = 2.0 * std::numbers::pi * i / kAngles;
      pts.push_back({std::cos(t), std::sin(t)});
    }
  } else if (m == 3) {
    for (int i = 0; i <= 90; ++i) {
      const double phi = std::numbers::pi * i / 90;
      for (int j = 0; j < 180; ++j) {
        const double t = 2.0 * std::numbers::pi * j / 180;
        pts.push_back({std::sin(phi) * std::cos(t), std::sin(phi) * std::sin(t), std::cos(phi)});
      }
    }
  }
  return pts;
}

inline bool positively_homogeneous(const AugmentingFunction& sigma, std::span<const Vector> samples) {
  for (const auto& z : samples) {
    const double s = sigma.eval(z);
    for (double t : {0.5, 2.0, 10.0}) {
      Vector tz = z;
      for (auto& v : tz) v *= t;
      if (std::abs(sigma.eval(tz) - t * s) > 1e-9 * (1.0 + t * s)) return false;
    }
  }
  return true;
}

}  // namespace detail

inline constexpr double kDominationSafetyFactor = 1.01;

/// rho = 1.01 * max ||Mz|| / sigma(z) over the sample set. When sigma is
/// positively homogeneous the ratio is scale-free and is maximised over unit
/// directions; otherwise points are drawn from the ball of radius `radius`.
inline double deflection_scale(const Matrix& M, const AugmentingFunction& sigma, std::size_t samples, std::uint64_t seed,
                               double radius = 10.0) {
  const std::size_t m = M.size();
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "empty deflection matrix");
  for (const auto& row : M)
    if (row.size() != m) throw Error(ErrorCode::DimensionMismatch, "deflection matrix must be square");
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");

  std::mt19937_64 rng(seed);
  std::vector<Vector> pts;
  pts.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) pts.push_back(detail::random_in_ball(rng, m, radius));

  const bool homogeneous = detail::positively_homogeneous(sigma, std::span<const Vector>(pts).first(std::min<std::size_t>(pts.size(), 64)));
  if (homogeneous) {
    for (auto& p : pts) p = detail::unit(p);
    auto sphere = detail::sphere_grid(m);
    pts.insert(pts.end(), sphere.begin(), sphere.end());
  }

  double rho = 0.0;
  Vector mz(m);
  for (const auto& z : pts) {
    const double s = sigma.eval(z);
    if (!(s > 0.0)) throw Error(ErrorCode::DegenerateSigma, "sigma vanishes at a sampled nonzero point");
    for (std::size_t i = 0; i < m; ++i) mz[i] = detail::dot(M[i], z);
    rho = std::max(rho, detail::norm2(mz) / s);
  }
  return rho * kDominationSafetyFactor;
}

/// A(z) = (M / rho) z with rho from `deflection_scale`; a zero matrix stays zero.
inline DeflectionMap normalize_for_domination(Matrix M, const AugmentingFunction& sigma, std::size_t samples, std::uint64_t seed) {
  const double rho = deflection_scale(M, sigma, samples, seed);
  return matrix_map(std::move(M), rho > 0.0 ? rho : 1.0);
}

}  // namespace dsg
