#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

// Core value types for the relaxed Euler state space.
//
// A state z = (v, m, sigma, e) collects velocity, momentum surrogate, the
// traceless part of the stress, and energy density.  Traceless symmetric
// 2x2 matrices are stored by their two independent components (a, b):
//
//     sigma = [ a   b ]
//             [ b  -a ]
//
// The flattening order (v1, v2, m1, m2, sigma_a, sigma_b, e) is fixed for
// all norms and file formats.  Note that with this convention the flattened
// Euclidean norm of the sigma block equals the matrix norm induced by the
// inner product <A,B> = tr(AB)/2, which is the norm the segment algebra is
// written in.

namespace eulerci {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  friend constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
};

constexpr double dot(Vec2 u, Vec2 v) { return u.x * v.x + u.y * v.y; }
constexpr double norm2(Vec2 v) { return dot(v, v); }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

// Counterclockwise quarter turn: x_perp = (-x2, x1).
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

// Traceless symmetric 2x2 matrix [[a, b], [b, -a]].
struct Sym0 {
  double a = 0.0;
  double b = 0.0;

  constexpr Sym0 operator+(Sym0 o) const { return {a + o.a, b + o.b}; }
  constexpr Sym0 operator-(Sym0 o) const { return {a - o.a, b - o.b}; }
  constexpr Sym0 operator-() const { return {-a, -b}; }
  constexpr Sym0 operator*(double s) const { return {a * s, b * s}; }
  friend constexpr Sym0 operator*(double s, Sym0 m) { return m * s; }

  constexpr Vec2 apply(Vec2 v) const {
    return {a * v.x + b * v.y, b * v.x - a * v.y};
  }
};

constexpr double dot(Sym0 m, Sym0 n) { return m.a * n.a + m.b * n.b; }
constexpr double norm2(Sym0 m) { return m.a * m.a + m.b * m.b; }
inline double norm(Sym0 m) { return std::hypot(m.a, m.b); }

// Traceless part of u (x) u.
constexpr Sym0 dev_outer(Vec2 u) {
  return {0.5 * (u.x * u.x - u.y * u.y), u.x * u.y};
}

// Traceless part of u (x) v + v (x) u.
constexpr Sym0 dev_sym(Vec2 u, Vec2 v) {
  return {u.x * v.x - u.y * v.y, u.x * v.y + u.y * v.x};
}

// Full symmetric 2x2 matrix, used for v (x) v - sigma and friends.
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  constexpr double trace() const { return xx + yy; }
  constexpr Sym0 dev() const { return {0.5 * (xx - yy), xy}; }
  constexpr Sym2 operator-(Sym2 o) const {
    return {xx - o.xx, xy - o.xy, yy - o.yy};
  }
};

// Eigenvalues of a Sym2, largest first.  Exact closed form.
inline std::array<double, 2> eigenvalues(Sym2 s) {
  const double h = 0.5 * (s.xx + s.yy);
  const double d = 0.5 * (s.xx - s.yy);
  const double r = std::hypot(d, s.xy);
  return {h + r, h - r};
}

struct State {
  Vec2 v;
  Vec2 m;
  Sym0 s;
  double e = 0.0;

  State operator+(const State& o) const {
    return {v + o.v, m + o.m, s + o.s, e + o.e};
  }
  State operator-(const State& o) const {
    return {v - o.v, m - o.m, s - o.s, e - o.e};
  }
  State operator-() const { return {-v, -m, -s, -e}; }
  State operator*(double c) const { return {v * c, m * c, s * c, e * c}; }
  friend State operator*(double c, const State& z) { return z * c; }
  State& operator+=(const State& o) {
    v = v + o.v;
    m = m + o.m;
    s = s + o.s;
    e += o.e;
    return *this;
  }

  std::array<double, 7> flat() const {
    return {v.x, v.y, m.x, m.y, s.a, s.b, e};
  }
};

inline State state_from_flat(const std::array<double, 7>& f) {
  return {{f[0], f[1]}, {f[2], f[3]}, {f[4], f[5]}, f[6]};
}

inline double norm2(const State& z) {
  return norm2(z.v) + norm2(z.m) + norm2(z.s) + z.e * z.e;
}
inline double norm(const State& z) { return std::sqrt(norm2(z)); }

inline double dot(const State& y, const State& z) {
  return dot(y.v, z.v) + dot(y.m, z.m) + dot(y.s, z.s) + y.e * z.e;
}

struct SpaceTime {
  Vec2 x;
  double t = 0.0;
};

// Error taxonomy.  Every failure mode thrown by the library derives from
// Error so callers can catch the family in one clause.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionViolated : Error {
  using Error::Error;
};
struct DegenerateFlux : Error {
  using Error::Error;
};
struct NotInCone : Error {
  using Error::Error;
};
struct DegenerateKernel : Error {
  using Error::Error;
};
struct NotInHullInterior : Error {
  using Error::Error;
};
struct RootFindFailed : Error {
  using Error::Error;
};
struct ClassicalCaseRequired : Error {
  using Error::Error;
};
struct MuOutOfBand : Error {
  using Error::Error;
};
struct ResolutionTooCoarse : Error {
  using Error::Error;
};
struct MollificationFailed : Error {
  using Error::Error;
};
struct StageInequalityUnsatisfiable : Error {
  using Error::Error;
};
struct StalledIteration : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

// sgn with sgn(0) = 0.
constexpr double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace eulerci
