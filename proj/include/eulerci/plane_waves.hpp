#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>

#include "eulerci/state_algebra.hpp"

// Localized plane-wave solutions of the homogeneous linear system
//
//     dt v + div sigma + grad e = 0,   div v = 0,   dt e + div m = 0.
//
// A cone direction zbar with phase covector (xi, c) oscillates as
// zbar * S''(N (xi,c).y) with S = -cos.  The wave is produced from two
// potentials: a vector potential omega whose curl feeds a first-order
// differential assembly D, and a scalar potential theta entering through
// the perpendicular gradient.  Because the assembly is exact differentiation
// of the (cutoff times potential) product, the localized field solves the
// system identically; any finite-difference residual is pure discretization
// error.

namespace eulerci {

namespace wavedetail {

using Vec3 = std::array<double, 3>;
using Mat3x3 = std::array<std::array<double, 3>, 3>;

constexpr Vec3 cross(const Vec3& u, const Vec3& w) {
  return {u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2],
          u[0] * w[1] - u[1] * w[0]};
}
constexpr double dot3(const Vec3& u, const Vec3& w) {
  return u[0] * w[0] + u[1] * w[1] + u[2] * w[2];
}
inline double norm3(const Vec3& u) { return std::sqrt(dot3(u, u)); }

// Shortest signed offset on the unit torus, in [-1/2, 1/2).
inline double wrap_offset(double u) { return u - std::floor(u + 0.5); }

// Quintic-smoothstep taper: drops from 1 at q = 0 to 0 at q = 1 with five
// vanishing derivatives at both junctions, so the assembled wave keeps three
// continuous derivatives and centered differences of it stay second order
// even on stencils straddling a junction.
struct Taper {
  double f = 0.0;   // value
  double f1 = 0.0;  // d/dq
  double f2 = 0.0;  // d^2/dq^2
};

inline Taper taper(double q) {
  const double q2 = q * q, q4 = q2 * q2;
  const double one = 1.0 - q, one2 = one * one, one4 = one2 * one2;
  Taper t;
  t.f = 1.0 - q4 * q2 *
                  (462.0 +
                   q * (-1980.0 +
                        q * (3465.0 + q * (-3080.0 + q * (1386.0 - 252.0 * q)))));
  t.f1 = -2772.0 * q4 * q * one4 * one;
  t.f2 = -13860.0 * q4 * one4 * (1.0 - 2.0 * q);
  return t;
}

// Cutoff envelope together with its first two derivatives in (x1, x2, t).
struct Envelope {
  double chi = 0.0;
  Vec3 grad{};
  Mat3x3 hess{};
};

// Radial profile of the taper over [0, radius]: plateau of 1 out to
// (1 - margin) * radius, taper to the boundary.  Returns value and the first
// two radial derivatives.
struct RadialProfile {
  double f = 0.0, f1 = 0.0, f2 = 0.0;
};

inline RadialProfile radial_profile(double rho, double radius, double margin) {
  const double r = rho / radius;
  if (r >= 1.0) return {0.0, 0.0, 0.0};
  if (r <= 1.0 - margin) return {1.0, 0.0, 0.0};
  const Taper t = taper((r - (1.0 - margin)) / margin);
  const double s = 1.0 / (margin * radius);
  return {t.f, t.f1 * s, t.f2 * s * s};
}

}  // namespace wavedetail

// Construction data for one localized wave.
struct WaveSpec {
  State direction;              // oscillation direction; must lie in the cone
  Vec2 xi;                      // unit spatial part of the phase covector
  double c = 0.0;               // temporal part of the phase covector
  int frequency = 1;            // oscillation count parameter N
  SpaceTime center{};           // support center
  double radius = 1.0;          // support radius
  double cutoff_margin = 0.25;  // taper thickness as a fraction of radius
  std::optional<double> time_slab;  // half-width of the temporal support
};

// Derived constants of the construction for a direction and its covector.
struct WaveCoefficients {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double theta_coeff = 0.0;                      // scalar-potential amplitude
  wavedetail::Vec3 gauge_vector{};               // a with eta x a = (A, B, C)
};

// One evaluated field sample.
struct FieldSample {
  SpaceTime point{};
  State state{};
};

// Constants (A, B, C), the scalar-potential coefficient, and the gauge
// vector for the wave along zbar with phase covector (xi, c).  The covector
// must be a unit-spatial-norm kernel element of the cone matrix of zbar.
inline WaveCoefficients wave_coefficients(const State& zbar, Vec2 xi,
                                          double c) {
  if (std::abs(norm(xi) - 1.0) > 1e-9)
    throw PreconditionViolated(
        "wave_coefficients: spatial covector must have unit norm");
  const double scale = std::max(1.0, norm(zbar));
  const auto residual =
      linalg::apply_4x3(wave_cone_matrix(zbar), {xi.x, xi.y, c});
  double res2 = 0.0;
  for (const double r : residual) res2 += r * r;
  if (std::sqrt(res2) > tol::cone_rank_rel * scale)
    throw NotInCone(
        "wave_coefficients: covector is not in the kernel of the direction's "
        "cone matrix");

  const Vec2 xip = perp(xi);
  WaveCoefficients wc;
  wc.C = -2.0 * norm(zbar.v) * sgn(dot(xip, zbar.v));
  const Vec2 ab = -1.0 * (c * wc.C) * xi - (2.0 * zbar.e) * xip;
  wc.A = ab.x;
  wc.B = ab.y;
  wc.theta_coeff = -(c * c * wc.C / 2.0 - dot(zbar.m, xip));

  const wavedetail::Vec3 eta{xi.x, xi.y, c};
  const wavedetail::Vec3 w0{wc.A, wc.B, wc.C};
  if (wavedetail::norm3(w0) <= tol::cone_rank_rel * std::max(1.0, scale))
    throw DegenerateKernel(
        "wave_coefficients: direction has no velocity or energy component");
  const double n2 = wavedetail::dot3(eta, eta);
  const wavedetail::Vec3 x = wavedetail::cross(eta, w0);
  wc.gauge_vector = {-x[0] / n2, -x[1] / n2, -x[2] / n2};
  return wc;
}

// Field evaluator.  Immutable; evaluation is a closed-form expression in the
// sample point, so concurrent evaluation needs no coordination.
class WaveField {
 public:
  enum class Kind { kUnlocalized, kBall, kSlab };

  State operator()(const SpaceTime& y) const {
    using namespace wavedetail;
    Envelope env;
    if (!envelope(y, env)) return State{};

    const double n = static_cast<double>(spec_.frequency);
    const Vec3 eta{spec_.xi.x, spec_.xi.y, spec_.c};
    const double ph = n * (eta[0] * y.x.x + eta[1] * y.x.y + eta[2] * y.t);
    const double s0 = -std::cos(ph);  // S
    const double s1 = std::sin(ph);   // S'
    const double s2 = std::cos(ph);   // S''

    // Vector potential component profile g = S(phase)/N^2 and its
    // derivatives; scalar potential h = theta_coeff * S'(phase)/N.
    const double g = s0 / (n * n);
    const Vec3 dg{eta[0] * s1 / n, eta[1] * s1 / n, eta[2] * s1 / n};
    const double h = coef_.theta_coeff * s1 / n;

    // Hessian of the product (envelope * g) and spatial gradient of the
    // product (envelope * h).
    Mat3x3 H;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        H[i][j] = env.hess[i][j] * g + env.grad[i] * dg[j] +
                  env.grad[j] * dg[i] + env.chi * eta[i] * eta[j] * s2;
        H[j][i] = H[i][j];
      }
    const double q0 =
        env.grad[0] * h + env.chi * coef_.theta_coeff * eta[0] * s2;
    const double q1 =
        env.grad[1] * h + env.chi * coef_.theta_coeff * eta[1] * s2;

    // First-order differential assembly of the state from the curl of the
    // vector potential plus the perpendicular gradient of the scalar one.
    const Vec3& a = coef_.gauge_vector;
    State z;
    z.v.x = 0.5 * (H[0][1] * a[1] - H[1][1] * a[0]);
    z.v.y = -0.5 * (H[0][0] * a[1] - H[0][1] * a[0]);
    z.e = 0.5 * (H[1][1] * a[2] - H[1][2] * a[1] - H[0][2] * a[0] +
                 H[0][0] * a[2]);
    z.s.a = 0.5 * (H[1][1] * a[2] - H[1][2] * a[1] + H[0][2] * a[0] -
                   H[0][0] * a[2]);
    z.s.b = 0.5 * (H[1][2] * a[0] + H[0][2] * a[1] - 2.0 * H[0][1] * a[2]);
    z.m.x = 0.5 * (H[2][2] * a[0] - H[0][2] * a[2]) - q1;
    z.m.y = -0.5 * (H[1][2] * a[2] - H[2][2] * a[1]) + q0;
    return z;
  }

  const WaveSpec& spec() const { return spec_; }
  const WaveCoefficients& coefficients() const { return coef_; }
  Kind kind() const { return kind_; }

  // Cutoff envelope value at y (zero outside the support).  The leading
  // term of the field is direction * S''(phase) * this weight, so it bounds
  // the oscillation's reach at y irrespective of the phase there.
  double support_weight(const SpaceTime& y) const {
    wavedetail::Envelope env;
    return envelope(y, env) ? env.chi : 0.0;
  }

  // Axis-aligned bounding box of the support; for the unlocalized variant
  // this is the sampling window around the center.
  SpaceTime support_lo() const {
    const double th = spec_.time_slab.value_or(spec_.radius);
    return {{spec_.center.x.x - spec_.radius, spec_.center.x.y - spec_.radius},
            spec_.center.t - (kind_ == Kind::kSlab ? th : spec_.radius)};
  }
  SpaceTime support_hi() const {
    const double th = spec_.time_slab.value_or(spec_.radius);
    return {{spec_.center.x.x + spec_.radius, spec_.center.x.y + spec_.radius},
            spec_.center.t + (kind_ == Kind::kSlab ? th : spec_.radius)};
  }

 private:
  WaveField(WaveSpec spec, WaveCoefficients coef, Kind kind)
      : spec_(std::move(spec)), coef_(coef), kind_(kind) {}

  friend WaveField unlocalized_wave(const WaveSpec& spec);
  friend WaveField localized_wave(const WaveSpec& spec);
  friend WaveField time_slab_wave(const WaveSpec& spec);

  // Fills the cutoff envelope at y.  Returns false when y lies outside the
  // support, where the field is identically zero.
  bool envelope(const SpaceTime& y, wavedetail::Envelope& env) const {
    using namespace wavedetail;
    if (kind_ == Kind::kUnlocalized) {
      env.chi = 1.0;
      return true;
    }
    // Spatial offsets wrap: the square torus identifies x and x + 1, so the
    // envelope must see the shortest representative or a support reaching
    // across the seam would tear.
    const Vec3 u{wavedetail::wrap_offset(y.x.x - spec_.center.x.x),
                 wavedetail::wrap_offset(y.x.y - spec_.center.x.y),
                 y.t - spec_.center.t};
    if (kind_ == Kind::kBall) {
      const double rho = norm3(u);
      if (rho >= spec_.radius) return false;
      const RadialProfile pr =
          radial_profile(rho, spec_.radius, spec_.cutoff_margin);
      env.chi = pr.f;
      if (pr.f1 == 0.0 && pr.f2 == 0.0) return true;  // plateau
      const Vec3 uh{u[0] / rho, u[1] / rho, u[2] / rho};
      for (int i = 0; i < 3; ++i) env.grad[i] = pr.f1 * uh[i];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double id = (i == j) ? 1.0 : 0.0;
          env.hess[i][j] = pr.f2 * uh[i] * uh[j] +
                           pr.f1 / rho * (id - uh[i] * uh[j]);
        }
      return true;
    }
    // Slab: product of a planar radial profile and an even temporal one.
    const double rho = std::hypot(u[0], u[1]);
    const double slab = *spec_.time_slab;
    if (rho >= spec_.radius || std::abs(u[2]) >= slab) return false;
    const RadialProfile ps =
        radial_profile(rho, spec_.radius, spec_.cutoff_margin);
    const RadialProfile pt =
        radial_profile(std::abs(u[2]), slab, spec_.cutoff_margin);
    const double st = sgn(u[2]);
    env.chi = ps.f * pt.f;
    Vec3 gs{};   // spatial gradient of the planar factor
    Mat3x3 hs{};  // and its Hessian (upper-left 2x2 block)
    if (ps.f1 != 0.0 || ps.f2 != 0.0) {
      const double ux = u[0] / rho, uy = u[1] / rho;
      gs = {ps.f1 * ux, ps.f1 * uy, 0.0};
      hs[0][0] = ps.f2 * ux * ux + ps.f1 / rho * (1.0 - ux * ux);
      hs[0][1] = ps.f2 * ux * uy - ps.f1 / rho * ux * uy;
      hs[1][1] = ps.f2 * uy * uy + ps.f1 / rho * (1.0 - uy * uy);
      hs[1][0] = hs[0][1];
    }
    const double t1 = pt.f1 * st;  // d/dt of the temporal factor
    const double t2 = pt.f2;
    env.grad = {gs[0] * pt.f, gs[1] * pt.f, ps.f * t1};
    env.hess[0][0] = hs[0][0] * pt.f;
    env.hess[0][1] = env.hess[1][0] = hs[0][1] * pt.f;
    env.hess[1][1] = hs[1][1] * pt.f;
    env.hess[0][2] = env.hess[2][0] = gs[0] * t1;
    env.hess[1][2] = env.hess[2][1] = gs[1] * t1;
    env.hess[2][2] = ps.f * t2;
    return true;
  }

  WaveSpec spec_;
  WaveCoefficients coef_;
  Kind kind_;
};

namespace wavedetail {

inline void validate_common(const WaveSpec& spec) {
  if (spec.frequency < 1)
    throw PreconditionViolated("wave: frequency must be a positive integer");
  if (!(spec.radius > 0.0))
    throw PreconditionViolated("wave: radius must be positive");
  if (!(spec.cutoff_margin > 0.0) || !(spec.cutoff_margin < 1.0))
    throw PreconditionViolated("wave: cutoff margin must lie in (0, 1)");
}

}  // namespace wavedetail

// Unbounded oscillation zbar * S''(N (xi,c).y); exact solution of the
// homogeneous linear system with no spatial localization.
inline WaveField unlocalized_wave(const WaveSpec& spec) {
  wavedetail::validate_common(spec);
  const WaveCoefficients wc = wave_coefficients(spec.direction, spec.xi,
                                                spec.c);
  return WaveField(spec, wc, WaveField::Kind::kUnlocalized);
}

// Wave cut off inside the space-time ball of the given radius about the
// center; vanishes identically outside it.
inline WaveField localized_wave(const WaveSpec& spec) {
  wavedetail::validate_common(spec);
  const WaveCoefficients wc = wave_coefficients(spec.direction, spec.xi,
                                                spec.c);
  return WaveField(spec, wc, WaveField::Kind::kBall);
}

// Wave supported in (spatial ball) x (-time_slab, time_slab) around the
// center; the variant used to perturb initial data without leaving a thin
// temporal neighborhood.
inline WaveField time_slab_wave(const WaveSpec& spec) {
  if (norm(spec.xi) <= 1e-12)
    throw DegenerateKernel(
        "time_slab_wave: spatial covector must not vanish, otherwise the "
        "initial-time slice carries no oscillation");
  wavedetail::validate_common(spec);
  if (!spec.time_slab.has_value() || !(*spec.time_slab > 0.0))
    throw PreconditionViolated(
        "time_slab_wave: positive time_slab half-width required");
  const WaveCoefficients wc = wave_coefficients(spec.direction, spec.xi,
                                                spec.c);
  return WaveField(spec, wc, WaveField::Kind::kSlab);
}

// Distance from w to the segment [-zbar, zbar].
inline double segment_distance(const State& w, const State& zbar) {
  const double n2 = norm2(zbar);
  if (n2 == 0.0) return norm(w);
  double tau = dot(w, zbar) / n2;
  tau = std::clamp(tau, -1.0, 1.0);
  return norm(w - tau * zbar);
}

// Quadrature diagnostics for the three qualitative wave properties:
// (i) uniform closeness to the segment [-zbar, zbar], (ii) smallness of weak
// pairings against a fixed battery of smooth test functions, (iii) a mass
// lower bound proportional to |zbar|^2.
struct WaveDiagnostics {
  double sup_segment_distance = 0.0;
  FieldSample worst{};                       // where the sup is attained
  std::array<double, 5> weak_pairings{};     // |integral of z * phi_k|
  double l2_mass = 0.0;                      // integral of |z|^2
  double mass_ratio = 0.0;                   // l2_mass / |zbar|^2
};

// Tensor-product midpoint quadrature over the support box with
// samples_per_axis points per axis.  Resolution guidance: at least eight
// points per oscillation, i.e. samples_per_axis >= 8 * frequency * radius *
// |(xi, c)| / pi.
inline WaveDiagnostics verify_wave_properties(const WaveField& field,
                                              const State& zbar,
                                              int samples_per_axis) {
  if (samples_per_axis < 2)
    throw PreconditionViolated(
        "verify_wave_properties: need at least two samples per axis");
  const SpaceTime lo = field.support_lo();
  const SpaceTime hi = field.support_hi();
  const int n = samples_per_axis;
  const double hx = (hi.x.x - lo.x.x) / n;
  const double hy = (hi.x.y - lo.x.y) / n;
  const double ht = (hi.t - lo.t) / n;
  const double dv = hx * hy * ht;
  const SpaceTime c0 = field.spec().center;

  WaveDiagnostics diag;
  std::array<State, 5> acc{};
  for (int i = 0; i < n; ++i) {
    const double x1 = lo.x.x + (i + 0.5) * hx;
    for (int j = 0; j < n; ++j) {
      const double x2 = lo.x.y + (j + 0.5) * hy;
      for (int k = 0; k < n; ++k) {
        const double t = lo.t + (k + 0.5) * ht;
        const SpaceTime y{{x1, x2}, t};
        const State z = field(y);
        const double d = segment_distance(z, zbar);
        if (d > diag.sup_segment_distance) {
          diag.sup_segment_distance = d;
          diag.worst = {y, z};
        }
        diag.l2_mass += norm2(z) * dv;
        const double dx1 = x1 - c0.x.x, dx2 = x2 - c0.x.y, dt = t - c0.t;
        const std::array<double, 5> phi{
            1.0, std::cos(x1), std::sin(x2 + 0.5 * t + 0.3),
            std::exp(-(dx1 * dx1 + dx2 * dx2 + dt * dt)), x1 * x2 + t};
        for (int q = 0; q < 5; ++q) acc[q] += (phi[q] * dv) * z;
      }
    }
  }
  for (int q = 0; q < 5; ++q) diag.weak_pairings[q] = norm(acc[q]);
  const double zn2 = norm2(zbar);
  diag.mass_ratio = zn2 > 0.0 ? diag.l2_mass / zn2 : 0.0;
  return diag;
}

// Fixed-time slice diagnostics over the spatial support square: slice mass
// and pairings against five smooth spatial test functions.
struct SliceDiagnostics {
  double mass = 0.0;                      // integral of |z(x, t)|^2 dx
  double mass_ratio = 0.0;                // mass / |zbar|^2
  std::array<double, 5> weak_pairings{};  // |integral of z(x, t) phi_k(x)|
};

inline SliceDiagnostics time_slice_diagnostics(const WaveField& field,
                                               const State& zbar, double t,
                                               int samples_per_axis) {
  if (samples_per_axis < 2)
    throw PreconditionViolated(
        "time_slice_diagnostics: need at least two samples per axis");
  const SpaceTime lo = field.support_lo();
  const SpaceTime hi = field.support_hi();
  const int n = samples_per_axis;
  const double hx = (hi.x.x - lo.x.x) / n;
  const double hy = (hi.x.y - lo.x.y) / n;
  const double da = hx * hy;
  const SpaceTime c0 = field.spec().center;

  SliceDiagnostics diag;
  std::array<State, 5> acc{};
  for (int i = 0; i < n; ++i) {
    const double x1 = lo.x.x + (i + 0.5) * hx;
    for (int j = 0; j < n; ++j) {
      const double x2 = lo.x.y + (j + 0.5) * hy;
      const State z = field({{x1, x2}, t});
      diag.mass += norm2(z) * da;
      const double dx1 = x1 - c0.x.x, dx2 = x2 - c0.x.y;
      const std::array<double, 5> phi{1.0, std::cos(x1), std::sin(x2 + 0.3),
                                      std::exp(-(dx1 * dx1 + dx2 * dx2)),
                                      x1 * x2};
      for (int q = 0; q < 5; ++q) acc[q] += (phi[q] * da) * z;
    }
  }
  for (int q = 0; q < 5; ++q) diag.weak_pairings[q] = norm(acc[q]);
  const double zn2 = norm2(zbar);
  diag.mass_ratio = zn2 > 0.0 ? diag.mass / zn2 : 0.0;
  return diag;
}

}  // namespace eulerci
