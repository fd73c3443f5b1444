#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "eulerci/linalg.hpp"
#include "eulerci/tolerances.hpp"
#include "eulerci/types.hpp"

// Value-level algebra of the relaxed state space: the pointwise constraint
// set, its convex hull, the wave cone, and distances.
//
// Conventions:
//   * p is a parameter, never part of the state.
//   * K(p)      = { (a, (|a|^2/2 + p) a, [a (x) a]_dev, |a|^2/2) : a in R^2 }
//   * K_gamma   = K intersected with { e <= gamma }
//   * hull      = { lambda_max(v (x) v - sigma) <= e }, p-independent
//   * wave cone = directions along which the one-dimensional oscillation
//                 solves the homogeneous linear system

namespace eulerci {

// The constraint-set state generated by velocity a and pressure p.
inline State k_state(Vec2 a, double p) {
  const double half_speed2 = 0.5 * norm2(a);
  return {a, (half_speed2 + p) * a, dev_outer(a), half_speed2};
}

// v (x) v - sigma as a full symmetric matrix.
inline Sym2 vvs(const State& z) {
  return {z.v.x * z.v.x - z.s.a, z.v.x * z.v.y - z.s.b,
          z.v.y * z.v.y + z.s.a};
}

// Eigenvalues (max, min) of a traceless symmetric matrix: +/- |s|.
inline std::array<double, 2> sym0_eigs(Sym0 s) {
  const double r = norm(s);
  return {r, -r};
}

inline double lambda_max_vvs(const State& z) {
  return 0.5 * norm2(z.v) + norm(dev_outer(z.v) - z.s);
}

inline std::array<double, 2> lambda_range_vvs(const State& z) {
  const double h = 0.5 * norm2(z.v);
  const double r = norm(dev_outer(z.v) - z.s);
  return {h + r, h - r};
}

// Flux defect m - (e+p) v; the oscillation direction generator.
inline Vec2 flux_defect(const State& z, double p) {
  return z.m - (z.e + p) * z.v;
}

// Frobenius-norm residual of the matrix constraint v(x)v - sigma = e id.
inline double k_matrix_residual(const State& z) {
  const Sym2 r{z.v.x * z.v.x - z.s.a - z.e, z.v.x * z.v.y - z.s.b,
               z.v.y * z.v.y + z.s.a - z.e};
  return std::sqrt(r.xx * r.xx + 2.0 * r.xy * r.xy + r.yy * r.yy);
}

inline bool in_K(const State& z, double p, double tolerance = tol::membership) {
  return k_matrix_residual(z) <= tolerance &&
         norm(flux_defect(z, p)) <= tolerance;
}

inline bool in_K_gamma(const State& z, double p, double gamma,
                       double tolerance = tol::membership) {
  return in_K(z, p, tolerance) && z.e <= gamma + tolerance;
}

// Hull membership lambda_max(v(x)v - sigma) <= e; strict for the interior.
inline bool in_hull(const State& z, bool strict = false,
                    double tolerance = 0.0) {
  const double gap = z.e - lambda_max_vvs(z);
  return strict ? gap > tolerance : gap >= -tolerance;
}

inline double hull_margin(const State& z) { return z.e - lambda_max_vvs(z); }

// Unit flux-defect direction.  Throws when the defect is (numerically) zero
// and the direction is meaningless.
inline Vec2 eta(const State& z, double p) {
  const Vec2 d = flux_defect(z, p);
  const double n = norm(d);
  if (n <= tol::flux_degenerate)
    throw DegenerateFlux("flux defect m - (e+p)v is numerically zero");
  return d * (1.0 / n);
}

// Decomposition of the hull data relative to the flux-defect direction:
//   M = v(x)v - sigma - e id + (2e - |v|^2) eta (x) eta   (traceless)
// with components M1 = eta.M.eta, M2 = eta.M.eta_perp in the rotated basis.
struct MDecomposition {
  Vec2 eta;
  Sym0 M;     // standard coordinates
  double M1;  // component along eta(x)eta - eta_perp(x)eta_perp
  double M2;  // component along eta(x)eta_perp + eta_perp(x)eta
};

inline MDecomposition m_decomposition(const State& z, double p) {
  const Vec2 n = eta(z, p);
  const Sym0 M =
      dev_outer(z.v) - z.s + (2.0 * z.e - norm2(z.v)) * dev_outer(n);
  const double m1 = dot(n, M.apply(n));
  const double m2 = dot(n, M.apply(perp(n)));
  return {n, M, m1, m2};
}

// Strict sufficient condition for hull interiority with an eps-weighted
// flux-defect penalty.  margin > 0 iff the condition holds.
struct SuffCondition {
  bool holds;
  double margin;
};

inline SuffCondition suff_condition(const State& z, double p, double eps) {
  const double margin =
      z.e - lambda_max_vvs(z) - eps * norm(flux_defect(z, p));
  return {margin > 0.0, margin};
}

// Energy cap making the eps sufficient condition segment-proof:
// gamma_eps(e) = max{ 4e, (2e + 1/2 + 4/eps)^2 / 2 }.
inline double gamma_eps(double e, double eps) {
  const double b = 2.0 * e + 0.5 + 4.0 / eps;
  return std::max(4.0 * e, 0.5 * b * b);
}

// 4x3 wave-cone matrix of a direction zbar; the cone consists of the
// directions with nontrivial kernel and (vbar, ebar) != 0.
inline linalg::Mat43 wave_cone_matrix(const State& zbar) {
  return {{{zbar.s.a + zbar.e, zbar.s.b, zbar.v.x},
           {zbar.s.b, -zbar.s.a + zbar.e, zbar.v.y},
           {zbar.v.x, zbar.v.y, 0.0},
           {zbar.m.x, zbar.m.y, zbar.e}}};
}

namespace detail {

// Smallest singular value measured as the direct residual |A k| at the
// candidate kernel vector.  The squared-spectrum route alone cannot resolve
// sigma_min below ~sqrt(eps) * sigma_max; the residual can.
struct ConeProbe {
  double residual;
  double sigma_max;
  std::array<double, 3> kernel;
};

inline ConeProbe cone_probe(const State& zbar) {
  const auto A = wave_cone_matrix(zbar);
  const auto svd = linalg::svd_4x3(A);
  const auto r = linalg::apply_4x3(A, svd.right[0]);
  const double res =
      std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]);
  return {res, svd.singular[2], svd.right[0]};
}

}  // namespace detail

inline bool wave_cone_contains(const State& zbar,
                               double rank_rel_tol = tol::cone_rank_rel) {
  const double vebar = std::sqrt(norm2(zbar.v) + zbar.e * zbar.e);
  if (vebar <= 1e-12 * std::max(1.0, norm(zbar))) return false;
  const auto probe = detail::cone_probe(zbar);
  return probe.residual <= rank_rel_tol * std::max(probe.sigma_max, 1e-300);
}

// Oscillation covector (xi, c) with |xi| = 1 spanning the cone matrix
// kernel.  Sign fixed so the first nonzero component of xi is positive.
struct WaveCovector {
  Vec2 xi;
  double c;
};

inline WaveCovector kernel_direction(const State& zbar,
                                     double rank_rel_tol = tol::cone_rank_rel) {
  const double vebar = std::sqrt(norm2(zbar.v) + zbar.e * zbar.e);
  if (vebar <= 1e-12 * std::max(1.0, norm(zbar)))
    throw NotInCone("(vbar, ebar) component vanishes");
  const auto probe = detail::cone_probe(zbar);
  if (probe.residual > rank_rel_tol * std::max(probe.sigma_max, 1e-300))
    throw NotInCone("cone matrix has trivial kernel");
  const auto& k = probe.kernel;
  Vec2 xi{k[0], k[1]};
  double c = k[2];
  const double n = norm(xi);
  if (n <= 1e-8)
    throw DegenerateKernel("kernel vector has vanishing spatial part");
  xi = xi * (1.0 / n);
  c /= n;
  if (xi.x < 0.0 || (xi.x == 0.0 && xi.y < 0.0)) {
    xi = -xi;
    c = -c;
  }
  return {xi, c};
}

// Distance from z to K_gamma(p) in the flattened Euclidean norm.
//
// Two search modes share the same objective |z - k(a)|^2 over the velocity
// plane (clamped to |a| <= sqrt(2 gamma) when gamma is finite):
//   * Oracle: 256^2 grid over the disk of radius max(4, 4|v|), then 50
//     compass-refinement rounds.  Documented accuracy ~1e-6 relative; this
//     is the reference used by tests.
//   * Fast:   coarse 24^2 grid seeding plus the same local refinement;
//     intended for inner loops (driver cell selection).
enum class DistMode { kOracle, kFast };

struct DistResult {
  double dist;
  Vec2 argmin;
};

namespace detail {

inline Vec2 clamp_to_disk(Vec2 a, double max_norm) {
  const double n = norm(a);
  return (n > max_norm && n > 0.0) ? a * (max_norm / n) : a;
}

inline double dist2_objective(const State& z, double p, Vec2 a) {
  const State d = z - k_state(a, p);
  return norm2(d);
}

inline Vec2 compass_refine(const State& z, double p, Vec2 a, double step,
                           int rounds, double cap) {
  double best = dist2_objective(z, p, a);
  for (int r = 0; r < rounds; ++r) {
    bool moved = true;
    int guard = 0;
    while (moved && guard++ < 64) {
      moved = false;
      const Vec2 probes[4] = {{a.x + step, a.y},
                              {a.x - step, a.y},
                              {a.x, a.y + step},
                              {a.x, a.y - step}};
      for (const Vec2& q0 : probes) {
        const Vec2 q = clamp_to_disk(q0, cap);
        const double f = dist2_objective(z, p, q);
        if (f < best) {
          best = f;
          a = q;
          moved = true;
        }
      }
    }
    step *= 0.5;
  }
  return a;
}

}  // namespace detail

inline DistResult dist_to_K(const State& z, double p,
                            std::optional<double> gamma = std::nullopt,
                            DistMode mode = DistMode::kOracle) {
  const double cap =
      gamma ? std::sqrt(std::max(0.0, 2.0 * *gamma)) : 1e300;
  const double radius = std::min(std::max(4.0, 4.0 * norm(z.v)), cap);
  const int n = (mode == DistMode::kOracle) ? 256 : 24;

  Vec2 best_a = detail::clamp_to_disk(z.v, cap);
  double best = detail::dist2_objective(z, p, best_a);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vec2 a = detail::clamp_to_disk(
          {(-1.0 + (2.0 * i + 1.0) / n) * radius,
           (-1.0 + (2.0 * j + 1.0) / n) * radius},
          cap);
      const double f = detail::dist2_objective(z, p, a);
      if (f < best) {
        best = f;
        best_a = a;
      }
    }
  }
  const double step0 = 2.0 * radius / n;
  best_a = detail::compass_refine(z, p, best_a, step0, 50, cap);
  return {std::sqrt(detail::dist2_objective(z, p, best_a)), best_a};
}

}  // namespace eulerci
