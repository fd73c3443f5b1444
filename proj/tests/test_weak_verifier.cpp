#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "eulerci/plane_waves.hpp"
#include "eulerci/random.hpp"
#include "eulerci/subsolutions.hpp"
#include "eulerci/weak_verifier.hpp"

using namespace eulerci;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Probe members with x2-shifted phases and a quartic time profile
// 16 [t(T-t)]^2 / T^4.  The shift breaks the odd/even symmetry that makes
// every pairing of the shear-layer flow with the standard battery a
// lattice-exact zero, and the profile's double zero at t = 0 both drops the
// initial-data term and suppresses the early-time concentration of the
// dissipation density, which otherwise caps global convergence at first
// order.
struct Quartic {
  double T;
  double operator()(double t) const {
    if (t <= 0.0 || t >= T) return 0.0;
    const double r = t * (T - t);
    return 16.0 * r * r / (T * T * T * T);
  }
  double rate(double t) const {
    if (t <= 0.0 || t >= T) return 0.0;
    return 32.0 * t * (T - t) * (T - 2.0 * t) / (T * T * T * T);
  }
};

TestFunction probe_scalar(std::string name, double freq, double phase,
                          double horizon) {
  TestFunction tf;
  tf.name = std::move(name);
  tf.is_vector = false;
  const double omega = 2.0 * kPi * freq;
  const Quartic tau{horizon};
  tf.value = [=](const SpaceTime& y) {
    return tau(y.t) * std::cos(omega * y.x.y + phase);
  };
  tf.dt = [=](const SpaceTime& y) {
    return tau.rate(y.t) * std::cos(omega * y.x.y + phase);
  };
  tf.grad = [=](const SpaceTime& y) {
    return Vec2{0.0, -tau(y.t) * omega * std::sin(omega * y.x.y + phase)};
  };
  return tf;
}

TestFunction probe_vector(std::string name, double freq, double phase,
                          double horizon) {
  TestFunction tf;
  tf.name = std::move(name);
  tf.is_vector = true;
  const double omega = 2.0 * kPi * freq;
  const Quartic tau{horizon};
  // Phi = tau grad^perp S with S = sin(omega x2 + phase)/1: x2-only, so
  // Phi = tau (-omega cos(omega x2 + phase), 0).
  tf.vec_value = [=](const SpaceTime& y) {
    return Vec2{-tau(y.t) * omega * std::cos(omega * y.x.y + phase), 0.0};
  };
  tf.vec_dt = [=](const SpaceTime& y) {
    return Vec2{-tau.rate(y.t) * omega * std::cos(omega * y.x.y + phase), 0.0};
  };
  tf.sigma_dot_grad = [=](const SpaceTime& y, const Sym0& s) {
    return s.b * tau(y.t) * omega * omega * std::sin(omega * y.x.y + phase);
  };
  return tf;
}

TestFunctionBattery probe_battery(double horizon) {
  TestFunctionBattery b;
  b.push_back(probe_scalar("probe-psi-1", 1.0, 0.7, horizon));
  b.push_back(probe_scalar("probe-psi-2", 2.0, 0.3, horizon));
  b.push_back(probe_vector("probe-phi-1", 1.0, 0.3, horizon));
  b.push_back(probe_vector("probe-phi-2", 2.0, -0.2, horizon));
  return b;
}

// Oscillation direction used by the wave tests: v=(1,0), m=(2,0),
// sigma=[[0,1/2],[1/2,0]], e=0, with phase covector xi=(0,1), c=-1/2.
State shear_direction() {
  State z;
  z.v = {1.0, 0.0};
  z.m = {2.0, 0.0};
  z.s = {0.0, 0.5};
  return z;
}

WeakProblem zero_problem() {
  WeakProblem p;
  p.sample = [](const SpaceTime&) { return SubsolutionSample{}; };
  p.v0 = [](const Vec2&) { return Vec2{0.0, 0.0}; };
  p.e0 = [](const Vec2&) { return 0.0; };
  return p;
}

double row_named(const WeakResidualReport& rep, const std::string& identity,
                 const std::string& name) {
  for (const auto& r : rep.rows)
    if (r.identity == identity && r.test_name == name) return r.residual;
  FAIL("row not found: " + identity + "/" + name);
  return 0.0;
}

}  // namespace

TEST_CASE("zero fields pair to exact zeros") {
  const auto battery = standard_battery(1.0);
  const TorusGrid grid{8, 8, 4, 0.0, 1.0};

  const auto report = linear_system_residual(zero_problem(), battery, grid);
  // 6 vector members give one momentum row each; 6 scalars give an
  // incompressibility and an energy row each.
  REQUIRE(report.rows.size() == 18);
  for (const auto& row : report.rows) {
    CHECK(row.residual == 0.0);
    CHECK(row.scale == 0.0);
    CHECK(row.resolution == "8x8x4");
  }
  CHECK(report.max_residual() == 0.0);

  // Lattice-backed variant through the nearest-node sampler.
  StateField field(grid);
  const auto problem = weak_problem(
      field, {}, [](const Vec2&) { return Vec2{0.0, 0.0}; },
      [](const Vec2&) { return 0.0; });
  const auto report2 = linear_system_residual(problem, battery, grid);
  CHECK(report2.max_residual() == 0.0);
}

TEST_CASE("verifier rejects malformed requests") {
  const auto battery = standard_battery(1.0);
  CHECK_THROWS_AS(
      linear_system_residual(zero_problem(), TestFunctionBattery{},
                             TorusGrid{8, 8, 4, 0.0, 1.0}),
      PreconditionViolated);
  CHECK_THROWS_AS(linear_system_residual(zero_problem(), battery,
                                         TorusGrid{8, 8, 4, 0.5, 1.0}),
                  PreconditionViolated);
  auto v = [](const SpaceTime&) { return Vec2{0.0, 0.0}; };
  auto p = [](const SpaceTime&) { return 0.0; };
  CHECK_THROWS_AS(
      dissipation_extract(v, p, battery, TorusGrid{8, 8, 4, 0.1, 1.0}),
      PreconditionViolated);
}

TEST_CASE("standard battery members are admissible test functions") {
  const double horizon = 1.0;
  const auto battery = standard_battery(horizon);
  REQUIRE(battery.size() == 12);

  int scalars = 0, vectors = 0;
  for (const auto& tf : battery) (tf.is_vector ? vectors : scalars)++;
  CHECK(scalars == 6);
  CHECK(vectors == 6);
  for (size_t a = 0; a < battery.size(); ++a)
    for (size_t b = a + 1; b < battery.size(); ++b)
      CHECK(battery[a].name != battery[b].name);

  Rng rng(70);
  const double h = 1e-5;
  for (const auto& tf : battery) {
    double peak0 = 0.0;  // max |value| over initial-slice samples
    for (int trial = 0; trial < 16; ++trial) {
      const Vec2 x{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
      const double t = rng.uniform(0.05, 0.95);
      const SpaceTime y{x, t};

      if (tf.is_vector) {
        // Vanishes at the horizon.
        CHECK(norm(tf.vec_value({x, horizon})) == 0.0);
        // Divergence-free by construction.
        const double div =
            (tf.vec_value({{x.x + h, x.y}, t}).x -
             tf.vec_value({{x.x - h, x.y}, t}).x +
             tf.vec_value({{x.x, x.y + h}, t}).y -
             tf.vec_value({{x.x, x.y - h}, t}).y) /
            (2.0 * h);
        CHECK(std::abs(div) <= 1e-8);
        // Time derivative consistent with the value.
        const Vec2 fd = (tf.vec_value({x, t + h}) - tf.vec_value({x, t - h})) *
                        (1.0 / (2.0 * h));
        CHECK(norm(fd - tf.vec_dt(y)) <= 1e-6);
        // Contraction against a trace-free matrix equals the closed form.
        const Sym0 s{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const double d1x = (tf.vec_value({{x.x + h, x.y}, t}).x -
                            tf.vec_value({{x.x - h, x.y}, t}).x) /
                           (2.0 * h);
        const double d1y = (tf.vec_value({{x.x, x.y + h}, t}).x -
                            tf.vec_value({{x.x, x.y - h}, t}).x) /
                           (2.0 * h);
        const double d2x = (tf.vec_value({{x.x + h, x.y}, t}).y -
                            tf.vec_value({{x.x - h, x.y}, t}).y) /
                           (2.0 * h);
        const double d2y = (tf.vec_value({{x.x, x.y + h}, t}).y -
                            tf.vec_value({{x.x, x.y - h}, t}).y) /
                           (2.0 * h);
        // sigma : grad Phi with sigma = [[a, b], [b, -a]].
        const double fd_contraction =
            s.a * d1x + s.b * d1y + s.b * d2x - s.a * d2y;
        CHECK(std::abs(fd_contraction - tf.sigma_dot_grad(y, s)) <= 1e-5);
        peak0 = std::max(peak0, norm(tf.vec_value({x, 0.0})));
      } else {
        CHECK(tf.value({x, horizon}) == 0.0);
        const double fd =
            (tf.value({x, t + h}) - tf.value({x, t - h})) / (2.0 * h);
        CHECK(std::abs(fd - tf.dt(y)) <= 1e-6);
        const Vec2 g = tf.grad(y);
        const double gx = (tf.value({{x.x + h, x.y}, t}) -
                           tf.value({{x.x - h, x.y}, t})) /
                          (2.0 * h);
        const double gy = (tf.value({{x.x, x.y + h}, t}) -
                           tf.value({{x.x, x.y - h}, t})) /
                          (2.0 * h);
        CHECK(std::abs(gx - g.x) <= 1e-6);
        CHECK(std::abs(gy - g.y) <= 1e-6);
        peak0 = std::max(peak0, std::abs(tf.value({x, 0.0})));
      }
    }
    // Nonzero at t = 0: the initial-data terms are exercised.
    CHECK(peak0 > 0.1);
  }

  CHECK_THROWS_AS(standard_battery(0.0), PreconditionViolated);
  CHECK_THROWS_AS(standard_battery(-1.0), PreconditionViolated);
}

TEST_CASE("shear-layer residuals vanish at second order") {
  VortexSheetSpec spec;
  spec.delta = 0.5;
  const auto sheet = vortex_sheet(spec);
  const double T = 0.9;
  const auto probe = probe_battery(T);

  // Against the standard battery every pairing of this x1-independent,
  // parity-structured field is a lattice-exact zero; that checks the
  // bookkeeping but not the quadrature.
  {
    WeakProblem p = weak_problem(sheet);
    p.x2_loci = sheet_loci();
    const auto rep = linear_system_residual(p, standard_battery(1.0),
                                            TorusGrid{64, 64, 16, 0.0, 1.0});
    CHECK(rep.max_residual() <= 1e-12);
  }

  // Shifted probes couple to the field; residuals are pure quadrature
  // error.  Orders are measured over 4x spans because x- and t-error terms
  // carry opposite signs and successive doublings interfere.
  std::vector<int> sizes = {32, 48, 128, 192};
  std::vector<std::vector<double>> rows;
  for (const int n : sizes) {
    WeakProblem p = weak_problem(sheet);
    p.x2_loci = sheet_loci();
    const auto rep =
        linear_system_residual(p, probe, TorusGrid{n, n, n / 4, 0.0, T});
    rows.push_back({row_named(rep, "energy", "probe-psi-1"),
                    row_named(rep, "energy", "probe-psi-2"),
                    row_named(rep, "momentum", "probe-phi-1"),
                    row_named(rep, "momentum", "probe-phi-2")});
    // The field's velocity has no x1-dependence, so the scalar members'
    // incompressibility pairings vanish identically.
    CHECK(row_named(rep, "incompressibility", "probe-psi-1") == 0.0);
  }
  for (size_t r = 0; r < rows[0].size(); ++r) {
    const double order_a = std::log(rows[0][r] / rows[2][r]) / std::log(4.0);
    const double order_b = std::log(rows[1][r] / rows[3][r]) / std::log(4.0);
    INFO("row " << r << " orders " << order_a << " " << order_b);
    CHECK(order_a >= 1.9);
    CHECK(order_b >= 1.9);
    CHECK(rows[3][r] <= 1e-3);
  }

  // Without the locus splitting, the jump of the dissipation density at
  // the moving fan edge degrades the energy rows; the momentum rows only
  // see kinks there and stay second order.
  {
    WeakProblem p = weak_problem(sheet);  // x2_loci left empty
    const auto rep =
        linear_system_residual(p, probe, TorusGrid{192, 192, 48, 0.0, T});
    CHECK(row_named(rep, "energy", "probe-psi-1") >=
          3.0 * rows[3][0]);
    CHECK(row_named(rep, "energy", "probe-psi-2") >=
          3.0 * rows[3][1]);
    CHECK(row_named(rep, "momentum", "probe-phi-1") <= 2.0 * rows[3][2]);
    CHECK(row_named(rep, "momentum", "probe-phi-2") <= 2.0 * rows[3][3]);
  }
}

TEST_CASE("superposing a localized wave leaves the residuals in place") {
  VortexSheetSpec spec;
  spec.delta = 0.5;
  const auto sheet = vortex_sheet(spec);
  const double T = 0.9;
  const auto probe = probe_battery(T);

  WaveSpec ws;
  ws.direction = shear_direction() * 0.002;
  ws.xi = {0.0, 1.0};
  ws.c = -0.5;
  ws.frequency = 2;
  ws.center = {{0.1, -0.2}, 0.45};
  ws.radius = 0.35;
  ws.cutoff_margin = 0.3;
  const auto wave = localized_wave(ws);
  // Support lies inside (0, T): the initial data are untouched.
  REQUIRE(wave.support_lo().t > 0.0);
  REQUIRE(wave.support_hi().t < T);

  double previous = 0.0;
  bool first = true;
  for (const int n : {64, 96, 128}) {
    const TorusGrid grid{n, n, n / 4, 0.0, T};
    WeakProblem base = weak_problem(sheet);
    base.x2_loci = sheet_loci();
    const auto rep0 = linear_system_residual(base, probe, grid);

    WeakProblem sup = base;
    auto base_sample = base.sample;
    sup.sample = [base_sample, &wave](const SpaceTime& y) {
      auto s = base_sample(y);
      s.state = s.state + wave(y);
      return s;
    };
    const auto rep1 = linear_system_residual(sup, probe, grid);

    // The wave solves the homogeneous system exactly: it may only add
    // discretization error, bounded here by a factor 2 plus an absolute
    // floor for the rows whose base residual is a parity zero.
    REQUIRE(rep0.rows.size() == rep1.rows.size());
    for (size_t r = 0; r < rep0.rows.size(); ++r) {
      INFO(rep0.rows[r].identity << "/" << rep0.rows[r].test_name);
      CHECK(rep1.rows[r].residual <=
            std::max(2.0 * rep0.rows[r].residual, 1e-5));
    }
    if (!first) CHECK(rep1.max_residual() < previous);
    previous = rep1.max_residual();
    first = false;
  }
}

TEST_CASE("unresolved oscillations trip the refinement guard") {
  WaveSpec ws;
  ws.direction = shear_direction();
  ws.xi = {0.0, 1.0};
  ws.c = -0.5;
  ws.frequency = 24;  // aliases to opposite constants on the two levels
  ws.center = {{0.0, 0.0}, 0.5};
  ws.radius = 0.2;
  ws.cutoff_margin = 0.4;
  const auto wave = localized_wave(ws);

  WeakProblem p;
  p.sample = [&wave](const SpaceTime& y) {
    SubsolutionSample s;
    s.state = wave(y);
    return s;
  };
  p.v0 = [](const Vec2&) { return Vec2{0.0, 0.0}; };
  p.e0 = [](const Vec2&) { return 0.0; };

  CHECK_THROWS_AS(linear_system_residual(p, standard_battery(1.0),
                                         TorusGrid{24, 24, 8, 0.0, 1.0}),
                  ResolutionTooCoarse);
}

TEST_CASE("pressure recovery is spectral, linear, and kills constants") {
  const int n = 32;
  const TorusGrid grid{n, n, 1, 0.0, 1.0};
  const size_t total = static_cast<size_t>(n) * n;

  SECTION("constant field") {
    std::vector<Sym0> sigma(total, Sym0{0.3, -0.7});
    std::vector<double> e(total, 2.5);
    const auto p = pressure_recovery(sigma, e, n, n);
    for (const double value : p) CHECK(std::abs(value) <= 1e-12);
  }

  SECTION("isotropic manufactured pressure") {
    // G = -p* id has div div G = -lap p*; p* is mean-free, so it is
    // recovered exactly up to rounding.
    std::vector<Sym0> sigma(total, Sym0{0.0, 0.0});
    std::vector<double> e(total);
    std::vector<double> target(total);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec2 x = grid.x_node(i, j);
        const double ps =
            std::cos(2.0 * kPi * x.x) * std::cos(2.0 * kPi * x.y);
        target[static_cast<size_t>(j) * n + i] = ps;
        e[static_cast<size_t>(j) * n + i] = -ps;
      }
    const auto p = pressure_recovery(sigma, e, n, n);
    for (size_t idx = 0; idx < total; ++idx)
      CHECK(std::abs(p[idx] - target[idx]) <= 1e-12);
  }

  SECTION("pure off-diagonal source") {
    // G12 = sin sin alone: p = -2 k1 k2 / |k|^2 per mode, which maps the
    // product of sines to the product of cosines.
    std::vector<Sym0> sigma(total);
    std::vector<double> e(total, 0.0);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec2 x = grid.x_node(i, j);
        sigma[static_cast<size_t>(j) * n + i] = {
            0.0, std::sin(2.0 * kPi * x.x) * std::sin(2.0 * kPi * x.y)};
      }
    const auto p = pressure_recovery(sigma, e, n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec2 x = grid.x_node(i, j);
        const double expect =
            std::cos(2.0 * kPi * x.x) * std::cos(2.0 * kPi * x.y);
        CHECK(std::abs(p[static_cast<size_t>(j) * n + i] - expect) <= 1e-12);
      }
  }

  SECTION("stationary shear needs no pressure") {
    // sigma + e id = v (x) v for v = (sin(2 pi x2), 0) depends on x2 only
    // through the 11 entry, so div div vanishes and p is identically zero.
    std::vector<Sym0> sigma(total);
    std::vector<double> e(total);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double s2 = std::sin(2.0 * kPi * grid.x_node(i, j).y);
        sigma[static_cast<size_t>(j) * n + i] = {0.5 * s2 * s2, 0.0};
        e[static_cast<size_t>(j) * n + i] = 0.5 * s2 * s2;
      }
    const auto p = pressure_recovery(sigma, e, n, n);
    double l2 = 0.0;
    for (const double value : p) l2 += value * value / total;
    CHECK(std::sqrt(l2) <= 1e-10);
  }

  SECTION("linearity on random data") {
    Rng rng(71);
    const int m = 16;
    const size_t sz = static_cast<size_t>(m) * m;
    std::vector<Sym0> s1(sz), s2(sz), s3(sz);
    std::vector<double> e1(sz), e2(sz), e3(sz);
    const double a = 0.6, b = -1.3;
    for (size_t idx = 0; idx < sz; ++idx) {
      s1[idx] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      s2[idx] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      e1[idx] = rng.uniform(-1.0, 1.0);
      e2[idx] = rng.uniform(-1.0, 1.0);
      s3[idx] = s1[idx] * a + s2[idx] * b;
      e3[idx] = a * e1[idx] + b * e2[idx];
    }
    const auto p1 = pressure_recovery(s1, e1, m, m);
    const auto p2 = pressure_recovery(s2, e2, m, m);
    const auto p3 = pressure_recovery(s3, e3, m, m);
    for (size_t idx = 0; idx < sz; ++idx)
      CHECK(std::abs(p3[idx] - (a * p1[idx] + b * p2[idx])) <= 1e-12);
  }

  SECTION("malformed inputs") {
    std::vector<Sym0> sigma(12 * 12);
    std::vector<double> e(12 * 12);
    CHECK_THROWS_AS(pressure_recovery(sigma, e, 12, 12), PreconditionViolated);
    std::vector<Sym0> sigma2(16 * 16);
    std::vector<double> e2(16 * 8);
    CHECK_THROWS_AS(pressure_recovery(sigma2, e2, 16, 16),
                    PreconditionViolated);
  }
}

TEST_CASE("slice pressure of the shear layer matches its closed form") {
  VortexSheetSpec spec;
  spec.delta = 0.5;
  const auto sheet = vortex_sheet(spec);
  const int n = 256;
  const TorusGrid grid{n, n, 1, 0.0, 1.0};
  const size_t total = static_cast<size_t>(n) * n;

  std::vector<Sym0> sigma(total);
  std::vector<double> e(total), expected(total);
  const double t = 0.5;
  double mean = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto s = sheet({grid.x_node(i, j), t});
      const size_t idx = static_cast<size_t>(j) * n + i;
      sigma[idx] = s.state.s;
      e[idx] = s.state.e;
      expected[idx] = s.pressure;
      mean += s.pressure;
    }
  mean /= static_cast<double>(total);

  // The recovered pressure is mean-free; the construction's pressure is
  // determined only up to a time-dependent constant, so compare after
  // removing the slice mean.
  const auto p = pressure_recovery(sigma, e, n, n);
  for (size_t idx = 0; idx < total; ++idx)
    CHECK(std::abs(p[idx] - (expected[idx] - mean)) <= 1e-12);
}

TEST_CASE("dissipation functionals of exact and defective flows") {
  SECTION("zero flow") {
    auto v = [](const SpaceTime&) { return Vec2{0.0, 0.0}; };
    auto p = [](const SpaceTime&) { return 0.0; };
    const auto values = dissipation_extract(v, p, standard_battery(1.0),
                                            TorusGrid{8, 8, 4, 0.0, 1.0});
    REQUIRE(values.size() == 6);
    for (const double value : values) CHECK(value == 0.0);
  }

  SECTION("stationary shear is energy-exact") {
    // v = (1/2 + sin(2 pi x2), 0), p = 0 is a steady flow whose kinetic
    // energy density is time independent; every functional is zero up to
    // the time-quadrature error of the profile derivatives.
    auto v = [](const SpaceTime& y) {
      return Vec2{0.5 + std::sin(2.0 * kPi * y.x.y), 0.0};
    };
    auto p = [](const SpaceTime&) { return 0.0; };
    const auto values = dissipation_extract(v, p, standard_battery(1.0),
                                            TorusGrid{32, 32, 64, 0.0, 1.0});
    for (const double value : values) CHECK(std::abs(value) <= 2e-4);
  }

  SECTION("decaying cellular flow pays a pinned energy defect") {
    // v = (1 - t/2) grad^perp S, S = sin(2 pi x1) sin(2 pi x2) / (2 pi):
    // the kinetic energy integral is (1 - t/2)^2 / 4, and pairing against
    // the constant-in-space profile (1 - t)^2 gives exactly -7/96.
    auto v = [](const SpaceTime& y) {
      const double amp = 1.0 - 0.5 * y.t;
      return Vec2{-amp * std::sin(2.0 * kPi * y.x.x) * std::cos(2.0 * kPi * y.x.y),
                  amp * std::cos(2.0 * kPi * y.x.x) * std::sin(2.0 * kPi * y.x.y)};
    };
    auto p = [](const SpaceTime&) { return 0.0; };
    TestFunctionBattery battery;
    TestFunction tf;
    tf.name = "unit-tau";
    tf.is_vector = false;
    tf.value = [](const SpaceTime& y) { return (1.0 - y.t) * (1.0 - y.t); };
    tf.dt = [](const SpaceTime& y) { return -2.0 * (1.0 - y.t); };
    tf.grad = [](const SpaceTime&) { return Vec2{0.0, 0.0}; };
    battery.push_back(tf);
    const auto values = dissipation_extract(v, p, battery,
                                            TorusGrid{16, 16, 128, 0.0, 1.0});
    REQUIRE(values.size() == 1);
    CHECK(values[0] == Catch::Approx(-7.0 / 96.0).margin(1e-5));
    CHECK(values[0] < 0.0);  // the flow sheds energy
  }

  SECTION("shear-layer velocity has its own defect, not the relaxed one") {
    // For v = (alpha, 0), p from the construction: the energy defect of
    // the pair is -alpha^2/t inside the fan (integral -1/3 per slice), so
    // pairing with (1-t)^2 gives -1/9.  The relaxed field's dissipation
    // density mu integrates to -delta/18 against the same profile: the
    // two functionals agree in form, not in value.
    VortexSheetSpec spec;
    spec.delta = 0.5;
    const auto sheet = vortex_sheet(spec);
    auto v = [&sheet](const SpaceTime& y) { return sheet(y).state.v; };
    auto p = [&sheet](const SpaceTime& y) { return sheet(y).pressure; };
    TestFunctionBattery battery;
    TestFunction tf;
    tf.name = "unit-tau";
    tf.is_vector = false;
    tf.value = [](const SpaceTime& y) { return (1.0 - y.t) * (1.0 - y.t); };
    tf.dt = [](const SpaceTime& y) { return -2.0 * (1.0 - y.t); };
    tf.grad = [](const SpaceTime&) { return Vec2{0.0, 0.0}; };
    battery.push_back(tf);

    const TorusGrid grid{128, 128, 128, 0.0, 1.0};
    const auto values = dissipation_extract(v, p, battery, grid, sheet_loci());
    REQUIRE(values.size() == 1);
    CHECK(std::abs(values[0] + 1.0 / 9.0) <= 2e-4);

    double mu_pairing = 0.0;
    for (int k = 0; k < grid.nt; ++k) {
      const double t = grid.t_node(k);
      for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
          mu_pairing += sheet(grid.node(i, j, k)).mu * (1.0 - t) * (1.0 - t) *
                        grid.dx() * grid.dy() * grid.dt();
    }
    CHECK(std::abs(mu_pairing + spec.delta / 18.0) <= 1e-3);
    // Quantitatively different functionals: -1/9 vs -1/36 here.
    CHECK(std::abs(values[0] - mu_pairing) > 0.05);
  }
}

TEST_CASE("per-slice energy stays under the initial energy") {
  SECTION("stationary shear keeps constant energy") {
    auto v = [](const SpaceTime& y) {
      return Vec2{0.5 + std::sin(2.0 * kPi * y.x.y), 0.0};
    };
    auto v0 = [&v](const Vec2& x) { return v({x, 0.0}); };
    const auto result =
        admissibility_check(v, v0, TorusGrid{64, 64, 8, 0.0, 1.0});
    CHECK(result.weak_admissible);
    REQUIRE(result.energies.size() == 8);
    for (const double energy : result.energies)
      CHECK(energy == Catch::Approx(result.initial_energy).margin(1e-13));
  }

  SECTION("shear-layer velocity sheds energy linearly") {
    VortexSheetSpec spec;
    spec.delta = 0.5;
    const auto sheet = vortex_sheet(spec);
    auto v = [&sheet](const SpaceTime& y) { return sheet(y).state.v; };
    auto v0 = [](const Vec2& x) {
      return Vec2{x.y >= 0.0 ? 1.0 : -1.0, 0.0};
    };
    const auto result =
        admissibility_check(v, v0, TorusGrid{128, 128, 8, 0.0, 1.0});
    CHECK(result.weak_admissible);
    CHECK(result.initial_energy == Catch::Approx(1.0).margin(1e-12));
    // The fan interpolation integrates to E(t) = 1 - 2t/3.
    for (size_t k = 0; k < result.times.size(); ++k)
      CHECK(result.energies[k] ==
            Catch::Approx(1.0 - 2.0 * result.times[k] / 3.0).margin(1e-3));
  }

  SECTION("an inflated slice is flagged") {
    VortexSheetSpec spec;
    const auto sheet = vortex_sheet(spec);
    auto v = [&sheet](const SpaceTime& y) {
      const Vec2 base = sheet(y).state.v;
      return y.t >= 0.5 ? base + Vec2{0.8, 0.0} : base;
    };
    auto v0 = [](const Vec2& x) {
      return Vec2{x.y >= 0.0 ? 1.0 : -1.0, 0.0};
    };
    const auto result =
        admissibility_check(v, v0, TorusGrid{64, 64, 8, 0.0, 1.0});
    CHECK_FALSE(result.weak_admissible);
  }
}

TEST_CASE("fourier transform round-trips and isolates modes") {
  SECTION("round trip") {
    Rng rng(72);
    const int nx = 16, ny = 8;
    std::vector<std::complex<double>> data(static_cast<size_t>(nx) * ny);
    std::vector<std::complex<double>> original(data.size());
    for (size_t idx = 0; idx < data.size(); ++idx) {
      data[idx] = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      original[idx] = data[idx];
    }
    fft_2d(data, nx, ny, false);
    fft_2d(data, nx, ny, true);
    for (size_t idx = 0; idx < data.size(); ++idx)
      CHECK(std::abs(data[idx] - original[idx]) <= 1e-12);
  }

  SECTION("pure mode concentrates on one coefficient") {
    const int nx = 16, ny = 8;
    std::vector<std::complex<double>> data(static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double phase =
            2.0 * kPi * (2.0 * i / nx + 3.0 * static_cast<double>(j) / ny);
        data[static_cast<size_t>(j) * nx + i] = {std::cos(phase),
                                                 std::sin(phase)};
      }
    fft_2d(data, nx, ny, false);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::complex<double> got = data[static_cast<size_t>(j) * nx + i];
        if (i == 2 && j == 3)
          CHECK(std::abs(got - std::complex<double>(nx * ny, 0.0)) <= 1e-9);
        else
          CHECK(std::abs(got) <= 1e-9);
      }
  }

  SECTION("frequency layout") {
    CHECK(fft_frequency(0, 8) == 0.0);
    CHECK(fft_frequency(1, 8) == 1.0);
    CHECK(fft_frequency(4, 8) == 4.0);
    CHECK(fft_frequency(5, 8) == -3.0);
    CHECK(fft_frequency(7, 8) == -1.0);
  }

  SECTION("non-power-of-two is rejected") {
    std::vector<std::complex<double>> data(12);
    CHECK_THROWS_AS(fft(data, false), PreconditionViolated);
  }
}
