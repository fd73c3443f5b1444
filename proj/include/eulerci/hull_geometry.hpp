#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "eulerci/state_algebra.hpp"

// Constructive oscillation-segment machinery: every state strictly inside
// the hull is realized as the midpoint region of explicit segments whose
// terminal states satisfy the pointwise constraints exactly.
//
// Internally the segment formulas run in long double: terminal magnitudes
// grow like (hull margin)^-2, and the downstream membership checks at 1e-8
// need the extra digits in the compounded worst case.

namespace eulerci {

// One oscillation segment: base + s * direction for s in [s1, s2], with
// s1 < 0 < s2 and direction in the wave cone.
struct LambdaSegment {
  State direction;
  double s1 = 0.0;
  double s2 = 0.0;
  State base;
  double pressure = 0.0;

  State at(double s) const { return base + s * direction; }
};

// Two-stage chain: one segment through the base state whose endpoints carry
// follow-up segments ending in the constraint set.
struct SegmentChain {
  LambdaSegment stage2;
  std::array<LambdaSegment, 2> stage1_at_endpoints;
  std::array<State, 2> midpoints;   // stage2 endpoints = stage1 bases
  std::array<State, 4> terminals;   // constraint-set states
};

namespace hulldetail {

struct LVec {
  long double x = 0.0L, y = 0.0L;
};
struct LSym {
  long double a = 0.0L, b = 0.0L;  // [[a, b], [b, -a]]
};
struct LSt {
  LVec v, m;
  LSym s;
  long double e = 0.0L;
};

inline LVec operator+(LVec a, LVec b) { return {a.x + b.x, a.y + b.y}; }
inline LVec operator-(LVec a, LVec b) { return {a.x - b.x, a.y - b.y}; }
inline LVec operator*(long double c, LVec a) { return {c * a.x, c * a.y}; }
inline long double dot(LVec a, LVec b) { return a.x * b.x + a.y * b.y; }
inline long double norm2(LVec a) { return dot(a, a); }
inline LVec perp(LVec a) { return {-a.y, a.x}; }
inline LSym operator+(LSym a, LSym b) { return {a.a + b.a, a.b + b.b}; }
inline LSym operator-(LSym a, LSym b) { return {a.a - b.a, a.b - b.b}; }
inline LSym operator*(long double c, LSym s) { return {c * s.a, c * s.b}; }
inline LVec apply(LSym s, LVec u) {
  return {s.a * u.x + s.b * u.y, s.b * u.x - s.a * u.y};
}
inline LSym ldev_outer(LVec u) {
  return {0.5L * (u.x * u.x - u.y * u.y), u.x * u.y};
}
// Traceless part of u (x) w + w (x) u.
inline LSym ldev_sym(LVec u, LVec w) {
  return {u.x * w.x - u.y * w.y, u.x * w.y + u.y * w.x};
}

inline LSt operator+(const LSt& a, const LSt& b) {
  return {a.v + b.v, a.m + b.m, a.s + b.s, a.e + b.e};
}
inline LSt axpy(const LSt& z, long double s, const LSt& d) {
  return {z.v + s * d.v, z.m + s * d.m, z.s + s * d.s, z.e + s * d.e};
}
inline LSt to_l(const State& z) {
  return {{z.v.x, z.v.y}, {z.m.x, z.m.y}, {z.s.a, z.s.b}, z.e};
}
inline State to_d(const LSt& z) {
  return {{static_cast<double>(z.v.x), static_cast<double>(z.v.y)},
          {static_cast<double>(z.m.x), static_cast<double>(z.m.y)},
          {static_cast<double>(z.s.a), static_cast<double>(z.s.b)},
          static_cast<double>(z.e)};
}

inline LSt lk_state(LVec a, long double p) {
  const long double h = 0.5L * norm2(a);
  return {a, (h + p) * a, ldev_outer(a), h};
}

// Membership residual (matrix part + flux part) in long double.
inline long double lk_residual(const LSt& z, long double p) {
  const long double rxx = z.v.x * z.v.x - z.s.a - z.e;
  const long double rxy = z.v.x * z.v.y - z.s.b;
  const long double ryy = z.v.y * z.v.y + z.s.a - z.e;
  const LVec dm = z.m - (z.e + p) * z.v;
  return std::sqrt(rxx * rxx + 2.0L * rxy * rxy + ryy * ryy + norm2(dm));
}

struct LSeg {
  LSt dir;
  long double s1 = 0.0L, s2 = 0.0L;
};

// Roots of s^2 - 2 beta s - q = 0 with q > 0, in cancellation-safe form.
inline std::array<long double, 2> stable_roots(long double beta,
                                               long double q) {
  const long double r = std::sqrt(beta * beta + q);
  if (beta >= 0.0L) {
    const long double s2 = beta + r;
    return {-q / s2, s2};
  }
  const long double s1 = beta - r;
  return {s1, -q / s1};
}

// Segment with unit energy slope removing the flux defect: at the roots of
// s^2 - 2 beta s - q = 0 the endpoint states satisfy all constraints.
inline LSeg first_segment_ld(const LSt& z, long double p) {
  const LVec dm = z.m - (z.e + p) * z.v;
  const long double f = std::sqrt(norm2(dm));
  const long double w = 2.0L * z.e - norm2(z.v);
  const LVec vbar = (w / (f * f)) * dm;
  const long double beta = (1.0L - dot(z.v, vbar)) / norm2(vbar);
  const long double q = f * f / w;
  LSt dir;
  dir.v = vbar;
  dir.m = z.v + (z.e + p + 2.0L * beta) * vbar;
  dir.s = ldev_sym(z.v, vbar) + (2.0L * beta) * ldev_outer(vbar);
  dir.e = 1.0L;
  const auto roots = stable_roots(beta, q);
  return {dir, roots[0], roots[1]};
}

// Constant-energy segment scaling the matrix defect M to zero at the roots
// of s^2 + 2 (v.vbar) s - |M|^2/M1 = 0; the flux defect is invariant.
inline LSeg second_segment_ld(const LSt& z, long double p) {
  const LVec dm = z.m - (z.e + p) * z.v;
  const long double f = std::sqrt(norm2(dm));
  const LVec eta = (1.0L / f) * dm;
  const LVec etp = perp(eta);
  const long double w = 2.0L * z.e - norm2(z.v);
  const LSym M = ldev_outer(z.v) - z.s + w * ldev_outer(eta);
  const long double m1 = dot(eta, apply(M, eta));
  const long double m2 = dot(eta, apply(M, etp));
  const long double nM2 = m1 * m1 + m2 * m2;
  const long double nM = std::sqrt(nM2);
  const LVec vbar = (-m2 / nM) * eta + (m1 / nM) * etp;
  const long double g = dot(z.v, vbar);
  LSt dir;
  dir.v = vbar;
  dir.m = (z.e + p) * vbar;
  dir.s = ldev_sym(z.v, vbar) +
          (2.0L * g) * ((m1 / nM2) * M - ldev_outer(eta));
  dir.e = 0.0L;
  const auto roots = stable_roots(-g, nM2 / m1);
  return {dir, roots[0], roots[1]};
}

// Symmetric 2x2 eigensystem of P = sigma + e id - v (x) v, descending.
struct LEig2 {
  long double c1 = 0.0L, c2 = 0.0L;
  LVec u1, u2;
};

inline LEig2 eig_sym2(long double pxx, long double pxy, long double pyy) {
  const long double h = 0.5L * (pxx + pyy);
  const long double d = 0.5L * (pxx - pyy);
  const long double r = std::sqrt(d * d + pxy * pxy);
  LEig2 out;
  out.c1 = h + r;
  out.c2 = h - r;
  if (r <= 1e-30L * std::max(std::abs(h), 1e-30L)) {
    out.u1 = {1.0L, 0.0L};  // isotropic: fixed deterministic basis
  } else if (std::abs(pxy) > std::abs(out.c1 - pxx)) {
    const LVec u{pxy, out.c1 - pxx};
    out.u1 = (1.0L / std::sqrt(norm2(u))) * u;
  } else {
    const LVec u{out.c1 - pyy, pxy};
    out.u1 = (1.0L / std::sqrt(norm2(u))) * u;
  }
  out.u2 = perp(out.u1);
  return out;
}

inline LEig2 covariance_eig(const LSt& z) {
  return eig_sym2(z.s.a + z.e - z.v.x * z.v.x, z.s.b - z.v.x * z.v.y,
                  -z.s.a + z.e - z.v.y * z.v.y);
}

// Split a state with rank-one covariance P = rho q (x) q into two
// constraint states on the circle |w|^2 = 2e: the unique two-atom
// decomposition along q through v.
struct LAtoms {
  LVec w1, w2;
  long double lambda = 0.0L;  // z = lambda k(w1) + (1-lambda) k(w2)
};

inline LAtoms circle_atoms(LVec v, long double rho, LVec q) {
  const long double g = dot(v, q);
  const long double tau = 2.0L * std::sqrt(rho + g * g);
  const long double lambda = 0.5L + g / tau;
  return {v + ((1.0L - lambda) * tau) * q, v + (-lambda * tau) * q, lambda};
}

}  // namespace hulldetail

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw PreconditionViolated(what);
}

inline LambdaSegment round_segment(const State& base, double p,
                                   const hulldetail::LSeg& seg) {
  return {hulldetail::to_d(seg.dir), static_cast<double>(seg.s1),
          static_cast<double>(seg.s2), base, p};
}

}  // namespace detail

// Oscillation segment through a state whose matrix defect already vanishes
// (|M(z)| <= m_tol): endpoints land in the constraint set.
inline LambdaSegment first_segment(const State& z, double p,
                                   double m_tol = 1e-6) {
  const double scale = std::max(1.0, norm(z));
  detail::require(norm(flux_defect(z, p)) > tol::flux_degenerate * scale,
                  "first_segment: m = (e+p)v, flux defect degenerate");
  detail::require(2.0 * z.e - norm2(z.v) > 0.0,
                  "first_segment: 2e - |v|^2 must be positive");
  const auto dec = m_decomposition(z, p);
  detail::require(norm(dec.M) <= m_tol,
                  "first_segment: matrix defect M(z) is not negligible");
  return detail::round_segment(
      z, p, hulldetail::first_segment_ld(hulldetail::to_l(z), p));
}

// Constant-energy segment through a strictly interior state, driving the
// matrix defect to zero at its endpoints.
inline LambdaSegment second_segment(const State& z, double p) {
  const double scale = std::max(1.0, norm(z));
  if (norm(flux_defect(z, p)) <= tol::flux_degenerate * scale)
    throw DegenerateFlux("second_segment: m = (e+p)v");
  if (hull_margin(z) <= 0.0)
    throw NotInHullInterior("second_segment: lambda_max(v(x)v - sigma) >= e");
  return detail::round_segment(
      z, p, hulldetail::second_segment_ld(hulldetail::to_l(z), p));
}

// Energy-cap compatibility of the first segment: when this inequality
// holds, both endpoint energies e + s_i stay below gamma.
inline bool gamma_segment_check(const State& z, double p, double gamma) {
  const double scale = std::max(1.0, norm(z));
  detail::require(z.e < gamma, "gamma_segment_check: e < gamma required");
  detail::require(norm(flux_defect(z, p)) > tol::flux_degenerate * scale,
                  "gamma_segment_check: flux defect degenerate");
  const double w = 2.0 * z.e - norm2(z.v);
  detail::require(w > 0.0, "gamma_segment_check: 2e - |v|^2 must be positive");
  const Vec2 lhs =
      flux_defect(z, p) * ((2.0 * gamma - norm2(z.v)) / ((gamma - z.e) * w)) -
      z.v;
  return norm(lhs) <= std::sqrt(2.0 * gamma);
}

// Full two-stage chain from a strictly interior state to four terminal
// states in the capped constraint set.
inline SegmentChain chain_to_K(const State& z, double p, double gamma) {
  using namespace hulldetail;
  const double scale = std::max(1.0, norm(z));
  if (norm(flux_defect(z, p)) <= tol::flux_degenerate * scale)
    throw ClassicalCaseRequired("chain_to_K: m = (e+p)v has no flux defect");
  if (hull_margin(z) <= 0.0)
    throw NotInHullInterior("chain_to_K: state not strictly inside the hull");

  const LSt lz = to_l(z);
  const LSeg st2 = second_segment_ld(lz, p);
  SegmentChain chain;
  chain.stage2 = detail::round_segment(z, p, st2);
  const std::array<long double, 2> roots{st2.s1, st2.s2};
  for (int i = 0; i < 2; ++i) {
    const LSt mid = axpy(lz, roots[i], st2.dir);
    chain.midpoints[i] = to_d(mid);
    const LSeg st1 = first_segment_ld(mid, p);
    chain.stage1_at_endpoints[i] = detail::round_segment(chain.midpoints[i],
                                                         p, st1);
    const std::array<long double, 2> r1{st1.s1, st1.s2};
    for (int j = 0; j < 2; ++j) {
      const LSt term = axpy(mid, r1[j], st1.dir);
      if (static_cast<double>(lk_residual(term, p)) > tol::membership ||
          static_cast<double>(term.e) > gamma + tol::membership) {
        std::ostringstream msg;
        msg << "chain_to_K: terminal left the capped constraint set "
               "(residual "
            << static_cast<double>(lk_residual(term, p)) << ", e "
            << static_cast<double>(term.e) << ", gamma " << gamma << ")";
        throw PreconditionViolated(msg.str());
      }
      chain.terminals[2 * i + j] = to_d(term);
    }
  }
  return chain;
}

// Two-atom decomposition of a classical state (m = (e+p)v) whose
// covariance P = sigma + e id - v (x) v has rank one: solves for the angle
// theta of the first atom on the circle |w|^2 = 2e and the weight lambda.
// States with rank-two covariance admit no such segment (the two-atom
// covariance lambda(1-lambda) (v1-v2)(x)(v1-v2) is always rank one) and
// report RootFindFailed; use classical_chain for those.
inline LambdaSegment classical_segment(const State& z, double p,
                                       double classical_tol = 1e-6) {
  const double scale = std::max(1.0, norm(z));
  detail::require(norm(flux_defect(z, p)) <= classical_tol * scale,
                  "classical_segment: state is not classical (m != (e+p)v)");
  if (hull_margin(z) < -1e-9 * scale)
    throw NotInHullInterior("classical_segment: state outside the hull");
  const auto eig = hulldetail::covariance_eig(hulldetail::to_l(z));
  const double c1 = static_cast<double>(eig.c1);
  if (c1 <= 1e-9 * scale)
    throw NotInHullInterior(
        "classical_segment: covariance vanishes, state already in the "
        "constraint set");
  if (z.e <= 0.0)
    throw NotInHullInterior("classical_segment: e must be positive");

  const double sq = std::sqrt(2.0 * z.e);
  const auto residual = [&](double theta, double lam,
                            std::array<double, 3>& r) {
    const Vec2 v1{sq * std::cos(theta), sq * std::sin(theta)};
    const Vec2 v2 = (z.v - lam * v1) * (1.0 / (1.0 - lam));
    const Sym0 sig = lam * dev_outer(v1) + (1.0 - lam) * dev_outer(v2);
    r[0] = z.s.a - sig.a;
    r[1] = z.s.b - sig.b;
    r[2] = (1.0 - lam) * (2.0 * z.e - norm2(v2));
  };

  // Damped Gauss-Newton from a closed-form seed (exact for rank-one
  // covariance) plus a fan of angular seeds.
  struct Best {
    double theta = 0.0, lam = 0.5, res = 1e300;
  } best;
  std::array<std::array<double, 2>, 17> seeds{};
  {
    const auto atoms =
        hulldetail::circle_atoms({z.v.x, z.v.y}, eig.c1, eig.u1);
    seeds[0] = {static_cast<double>(
                    std::atan2(atoms.w1.y, atoms.w1.x)),
                static_cast<double>(atoms.lambda)};
    for (int k = 0; k < 16; ++k)
      seeds[k + 1] = {k * 3.14159265358979323846 / 8.0, 0.5};
  }
  std::array<double, 3> r{}, rp{}, rm{};
  for (const auto& seed : seeds) {
    double theta = seed[0];
    double lam = std::clamp(seed[1], 1e-6, 1.0 - 1e-6);
    double damp = 1e-10;
    residual(theta, lam, r);
    double rn = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    for (int it = 0; it < 80 && rn > 1e-14 * scale; ++it) {
      const double h = 1e-6;
      std::array<double, 3> jt{}, jl{};
      residual(theta + h, lam, rp);
      residual(theta - h, lam, rm);
      for (int k = 0; k < 3; ++k) jt[k] = (rp[k] - rm[k]) / (2.0 * h);
      const double lp = std::min(lam + h, 1.0 - 1e-7);
      const double lm = std::max(lam - h, 1e-7);
      residual(theta, lp, rp);
      residual(theta, lm, rm);
      for (int k = 0; k < 3; ++k) jl[k] = (rp[k] - rm[k]) / (lp - lm);
      // Normal equations with Levenberg damping.
      double att = damp, atl = 0.0, all = damp, bt = 0.0, bl = 0.0;
      for (int k = 0; k < 3; ++k) {
        att += jt[k] * jt[k];
        atl += jt[k] * jl[k];
        all += jl[k] * jl[k];
        bt -= jt[k] * r[k];
        bl -= jl[k] * r[k];
      }
      const double det = att * all - atl * atl;
      if (det == 0.0) break;
      const double dt = (bt * all - bl * atl) / det;
      const double dl = (att * bl - atl * bt) / det;
      const double nt = theta + dt;
      const double nl = std::clamp(lam + dl, 1e-9, 1.0 - 1e-9);
      residual(nt, nl, rp);
      const double rn2 =
          std::sqrt(rp[0] * rp[0] + rp[1] * rp[1] + rp[2] * rp[2]);
      if (rn2 < rn) {
        theta = nt;
        lam = nl;
        rn = rn2;
        r = rp;
        damp = std::max(damp * 0.3, 1e-12);
      } else {
        damp *= 10.0;
        if (damp > 1e8) break;
      }
    }
    if (rn < best.res) best = {theta, lam, rn};
  }

  if (best.res > 1e-10 * scale) {
    std::ostringstream msg;
    msg << "classical_segment: no two-atom decomposition found (best "
           "residual "
        << best.res
        << "); covariance likely has rank two, use classical_chain";
    throw RootFindFailed(msg.str());
  }
  const Vec2 v1{sq * std::cos(best.theta), sq * std::sin(best.theta)};
  const Vec2 v2 = (z.v - best.lam * v1) * (1.0 / (1.0 - best.lam));
  if (best.lam < 1e-9 || best.lam > 1.0 - 1e-9 || norm(v1 - v2) <= 1e-9)
    throw NotInHullInterior("classical_segment: degenerate decomposition");
  LambdaSegment seg;
  seg.base = z;
  seg.pressure = p;
  seg.direction = k_state(v2, p) - k_state(v1, p);
  seg.s1 = best.lam - 1.0;
  seg.s2 = best.lam;
  return seg;
}

// Two-stage chain for strictly interior classical states: the first stage
// flattens the covariance to rank one along its top eigendirection; the
// second stage splits each endpoint onto the energy circle.
inline SegmentChain classical_chain(const State& z, double p,
                                    double classical_tol = 1e-6) {
  using namespace hulldetail;
  const double scale = std::max(1.0, norm(z));
  detail::require(norm(flux_defect(z, p)) <= classical_tol * scale,
                  "classical_chain: state is not classical (m != (e+p)v)");
  const LSt lz = to_l(z);
  const LEig2 eig = covariance_eig(lz);
  if (static_cast<double>(eig.c2) <= 1e-9 * scale)
    throw NotInHullInterior(
        "classical_chain: covariance not positive definite (state on the "
        "hull boundary or outside)");

  // Stage A: v-bar along the top eigendirection, constant e; at the roots
  // of s^2 + 2 (v.u1) s - c1 = 0 the covariance collapses to c2 u2 (x) u2.
  const long double g1 = dot(lz.v, eig.u1);
  LSt dirA;
  dirA.v = eig.u1;
  dirA.m = (lz.e + static_cast<long double>(p)) * eig.u1;
  dirA.s = ldev_sym(lz.v, eig.u1) + (-2.0L * g1) * ldev_outer(eig.u1);
  dirA.e = 0.0L;
  const auto rootsA = stable_roots(-g1, eig.c1);

  SegmentChain chain;
  chain.stage2 = detail::round_segment(z, p, {dirA, rootsA[0], rootsA[1]});
  for (int i = 0; i < 2; ++i) {
    const LSt mid = axpy(lz, rootsA[i], dirA);
    chain.midpoints[i] = to_d(mid);
    const LAtoms atoms = circle_atoms(mid.v, eig.c2, eig.u2);
    const LSt k1 = lk_state(atoms.w1, p);
    const LSt k2 = lk_state(atoms.w2, p);
    LambdaSegment segB;
    segB.base = chain.midpoints[i];
    segB.pressure = p;
    segB.direction = to_d(LSt{k2.v - k1.v, k2.m - k1.m, k2.s - k1.s,
                              k2.e - k1.e});
    segB.s1 = static_cast<double>(atoms.lambda) - 1.0;
    segB.s2 = static_cast<double>(atoms.lambda);
    chain.stage1_at_endpoints[i] = segB;
    chain.terminals[2 * i] = to_d(k1);
    chain.terminals[2 * i + 1] = to_d(k2);
  }
  return chain;
}

namespace detail {

// Line-search helper: start from amp = shrink * min(|s1|, s2) along the
// segment direction and halve until both z +/- zbar are strictly admissible.
// Returns the zero state when no amplitude works.
inline State admissible_fraction(const State& z, double gamma,
                                 const LambdaSegment& seg, double shrink) {
  double amp = shrink * std::min(-seg.s1, seg.s2);
  if (!(amp > 0.0) || !std::isfinite(amp)) return State{};
  for (int i = 0; i < 30; ++i) {
    const State zbar = amp * seg.direction;
    const State zp = z + zbar;
    const State zm = z - zbar;
    if (hull_margin(zp) > 0.0 && hull_margin(zm) > 0.0 && zp.e < gamma &&
        zm.e < gamma)
      return zbar;
    amp *= 0.5;
  }
  return State{};
}

}  // namespace detail

// Perturbation direction for the iteration: each stage of the segment chain
// through z yields a candidate (its direction scaled by shrink times the
// shorter root half, then line-searched so both z +/- zbar stay strictly
// inside the capped hull); the longest admissible candidate wins.  Near the
// matrix-resolved stratum the through-segment is short but the energy-raising
// stage still spans the flux defect, which is what keeps |zbar| comparable
// to the distance from the constraint set.  Returns the zero state when z
// already lies in the constraint set.
inline State find_perturbation(const State& z, double p, double gamma,
                               double shrink) {
  detail::require(shrink > 0.0 && shrink < 1.0,
                  "find_perturbation: shrink must lie in (0,1)");
  if (in_K_gamma(z, p, gamma)) return State{};
  if (hull_margin(z) <= 0.0 || z.e >= gamma)
    throw NotInHullInterior(
        "find_perturbation: state not strictly inside the capped hull");

  // Strict interiority gives M1 >= hull margin > 0, so the constant-energy
  // segment is always available when the flux defect is usable.
  const double scale = std::max(1.0, norm(z));
  std::array<LambdaSegment, 3> stages;
  int n_stages = 0;
  if (norm(flux_defect(z, p)) <= 1e-6 * scale) {
    const auto chain = classical_chain(z, p);
    stages[n_stages++] = chain.stage2;
    for (const auto& seg : chain.stage1_at_endpoints) stages[n_stages++] = seg;
  } else {
    const auto seg2 = second_segment(z, p);
    stages[n_stages++] = seg2;
    for (const double s : {seg2.s1, seg2.s2}) {
      try {
        stages[n_stages++] = first_segment(seg2.at(s), p);
      } catch (const Error&) {
        --n_stages;  // endpoint too degenerate for the energy stage; skip
      }
    }
  }

  State best{};
  double best_len = 0.0;
  for (int i = 0; i < n_stages; ++i) {
    const State cand = detail::admissible_fraction(z, gamma, stages[i], shrink);
    const double len = norm(cand);
    if (len > best_len) {
      best = cand;
      best_len = len;
    }
  }
  if (best_len > 0.0) return best;
  throw NotInHullInterior(
      "find_perturbation: no admissible amplitude found; base state is "
      "effectively on the boundary");
}

// Hausdorff-distance bound between capped constraint sets at two pressure
// values: states share the generator a, so they differ only in m by
// (p1 - p2) a with |a| <= sqrt(2 gamma).
inline double hausdorff_bound(double p1, double p2, double gamma) {
  detail::require(gamma > 0.0, "hausdorff_bound: gamma must be positive");
  return std::sqrt(2.0 * gamma) * std::abs(p1 - p2);
}

}  // namespace eulerci
