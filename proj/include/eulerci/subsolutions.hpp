#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "eulerci/hull_geometry.hpp"
#include "eulerci/state_algebra.hpp"

// Closed-form relaxed flows: fields y = (x, t) -> (state, pressure,
// dissipation density) that solve the linear balance system
//
//     d_t v + div sigma + grad(e + p) = 0,
//     div v                           = 0,
//     d_t e + div m                   = mu,
//
// exactly, stay inside the constraint hull on a designated turbulent zone,
// and satisfy the pointwise constraints outside it.  Two families are
// provided: the flat shear-layer rarefaction (a stationary velocity jump
// opening into a self-similar fan) and the perturbed stationary shear used
// by the initial-data density argument.
//
// Spatial domain is the unit torus [-1/2, 1/2)^2; all evaluators wrap their
// input coordinates.

namespace eulerci {

// One field sample: the state tuple plus the scalar pressure and the local
// dissipation density at the same point.
struct SubsolutionSample {
  State state;
  double pressure = 0.0;
  double mu = 0.0;
};

// Immutable space-time field.  Evaluation is pure, so concurrent use is
// safe.  `turbulent_zone` marks the open region where the state is strictly
// inside the hull (and where downstream perturbation machinery is allowed
// to act); outside it the state satisfies the pointwise constraints
// exactly.
class SubsolutionField {
 public:
  using Evaluator = std::function<SubsolutionSample(const SpaceTime&)>;
  using ZonePredicate = std::function<bool(const SpaceTime&)>;

  SubsolutionField(Evaluator eval, ZonePredicate zone, double horizon)
      : eval_(std::move(eval)), zone_(std::move(zone)), horizon_(horizon) {}

  SubsolutionSample operator()(const SpaceTime& y) const { return eval_(y); }
  bool turbulent_zone(const SpaceTime& y) const { return zone_(y); }
  double horizon() const { return horizon_; }

 private:
  Evaluator eval_;
  ZonePredicate zone_;
  double horizon_;
};

namespace subdetail {

// Wrap a coordinate to the fundamental domain [-1/2, 1/2).
inline double wrap_half(double u) { return u - std::floor(u + 0.5); }

// Adaptive Simpson integration of g over [a, b].  The recursion refines
// until the Richardson error estimate of a panel drops below the share of
// the tolerance assigned to it.
inline double simpson_panel(const std::function<double(double)>& g, double a,
                            double fa, double b, double fb, double fm,
                            double whole, double tolerance, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = g(lm), frm = g(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tolerance)
    return left + right + delta / 15.0;
  return simpson_panel(g, a, fa, m, fm, flm, left, 0.5 * tolerance,
                       depth - 1) +
         simpson_panel(g, m, fm, b, fb, frm, right, 0.5 * tolerance,
                       depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& g,
                               double a, double b, double tolerance) {
  if (a == b) return 0.0;
  const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_panel(g, a, fa, b, fb, fm, whole, tolerance, 40);
}

}  // namespace subdetail

// ---------------------------------------------------------------------------
// Flat shear layer (self-similar rarefaction fan)

struct VortexSheetSpec {
  double delta = 0.5;    // dissipation strength, in [0, 1)
  double horizon = 1.0;  // final time T > 0
};

// Profile value alpha(x2, t) of the fan, on wrapped coordinates.  The
// velocity jump at t = 0 opens into the zone {2|x2| < t} where alpha ramps
// linearly from -1 to 1; outside, the initial shear persists unchanged.
inline double sheet_alpha(double x2_wrapped, double t) {
  if (t <= 0.0) return static_cast<double>(sgn(x2_wrapped));
  const double a = 2.0 * x2_wrapped / t;
  return std::clamp(a, -1.0, 1.0);
}

// The fan formulas are singular as t -> 0, so zone evaluation is refused
// below this time; the t = 0 slice itself returns the discontinuous initial
// shear exactly.
inline constexpr double sheet_min_zone_time = 1e-6;

// Evaluator preconditions: t >= 0, and points inside the open fan zone must
// have t >= sheet_min_zone_time.
inline SubsolutionField vortex_sheet(const VortexSheetSpec& spec) {
  if (!(spec.delta >= 0.0 && spec.delta < 1.0))
    throw PreconditionViolated("vortex_sheet: delta must lie in [0, 1)");
  if (!(spec.horizon > 0.0))
    throw PreconditionViolated("vortex_sheet: horizon must be positive");

  const double delta = spec.delta;
  const auto in_zone = [](const SpaceTime& y) {
    const double x2 = subdetail::wrap_half(y.x.y);
    if (y.t > 0.0) return 2.0 * std::abs(x2) < y.t;
    // Degenerate limit of the zone: the initial jump line itself.
    return y.t == 0.0 && x2 == 0.0;
  };

  auto eval = [delta, in_zone](const SpaceTime& y) {
    if (!(y.t >= 0.0))
      throw PreconditionViolated("vortex_sheet: t must be nonnegative");
    const double x2 = subdetail::wrap_half(y.x.y);
    const bool zone = in_zone(y);
    if (zone && y.t > 0.0 && y.t < sheet_min_zone_time)
      throw PreconditionViolated(
          "vortex_sheet: fan-zone evaluation needs t >= 1e-6");

    const double a = sheet_alpha(x2, y.t);
    const double a2 = a * a;
    SubsolutionSample s;
    s.state.v = {a, 0.0};
    s.state.s = {0.5 * a2, -0.25 * (1.0 - a2)};
    s.state.e = 0.5 - 0.25 * delta * (1.0 - a2);
    s.pressure = 0.5 * a2 - s.state.e;
    // m = (e + p) v with e + p = a^2 / 2.
    s.state.m = {0.5 * a2 * a, 0.0};
    // mu = d_t e; zero outside the fan where the state is steady.
    s.mu = (zone && y.t > 0.0) ? -2.0 * delta * x2 * x2 / (y.t * y.t * y.t)
                               : 0.0;
    return s;
  };

  return SubsolutionField(std::move(eval), in_zone, spec.horizon);
}

// ---------------------------------------------------------------------------
// Stationary shear with dissipation budget (initial-data density argument)

struct DensitySubsolutionSpec {
  // Smooth 1-periodic shear profile f, evaluated on wrapped x2; the
  // underlying exact flow is the stationary shear (f(x2), 0) with zero
  // pressure.
  std::function<double(double)> shear_profile;
  double delta = 0.1;  // margin budget, > 0
  // Continuous dissipation density on the torus x [0, T], required to stay
  // in the band -delta/T < mu <= 0.
  std::function<double(const SpaceTime&)> mu;
  double horizon = 1.0;  // T > 0
};

// The returned field raises the energy of the stationary shear by
// delta + int_0^t mu(x, s) ds and lowers the pressure by the same amount,
// which keeps m = (e + p) v while opening a strictly positive hull margin
// e - |v|^2/2 everywhere: the whole space-time cylinder is turbulent zone.
//
// Throws MuOutOfBand if any mu sample touched by the time quadrature leaves
// the band; the integral itself uses adaptive Simpson refinement.
inline SubsolutionField density_subsolution(const DensitySubsolutionSpec& spec) {
  if (!spec.shear_profile)
    throw PreconditionViolated("density_subsolution: missing shear profile");
  if (!spec.mu)
    throw PreconditionViolated("density_subsolution: missing mu");
  if (!(spec.delta > 0.0))
    throw PreconditionViolated("density_subsolution: delta must be positive");
  if (!(spec.horizon > 0.0))
    throw PreconditionViolated("density_subsolution: horizon must be positive");

  const double delta = spec.delta;
  const double horizon = spec.horizon;
  const auto f = spec.shear_profile;
  const auto mu = spec.mu;

  auto banded_mu = [delta, horizon, mu](const SpaceTime& y) {
    const double value = mu(y);
    if (!(value <= 0.0) || value <= -delta / horizon)
      throw MuOutOfBand("density_subsolution: mu sample outside the band");
    return value;
  };

  auto eval = [delta, horizon, f, banded_mu](const SpaceTime& y) {
    if (!(y.t >= 0.0 && y.t <= horizon))
      throw PreconditionViolated(
          "density_subsolution: t must lie in [0, horizon]");
    const Vec2 x = {subdetail::wrap_half(y.x.x), subdetail::wrap_half(y.x.y)};
    const double fv = f(x.y);
    const double budget =
        delta + subdetail::adaptive_simpson(
                    [&](double s) {
                      return banded_mu({x, s});
                    },
                    0.0, y.t, 1e-10);

    SubsolutionSample s;
    s.state.v = {fv, 0.0};
    s.state.s = {0.5 * fv * fv, 0.0};
    s.state.e = 0.5 * fv * fv + budget;
    s.state.m = {0.5 * fv * fv * fv, 0.0};
    s.pressure = -budget;
    s.mu = banded_mu({x, y.t});
    return s;
  };

  auto zone = [horizon](const SpaceTime& y) {
    return y.t >= 0.0 && y.t <= horizon;
  };
  return SubsolutionField(std::move(eval), std::move(zone), spec.horizon);
}

// ---------------------------------------------------------------------------
// Hypothesis diagnostics

// Midpoint sampling lattice over the torus cross a time window.
struct SampleGrid {
  int nx = 32;
  int ny = 32;
  int nt = 16;
  double t0 = 1e-3;
  double t1 = 1.0;
};

struct HypothesesReport {
  // Smallest eps-condition margin over zone samples; must stay positive.
  double min_zone_margin = 0.0;
  // Largest constraint residual (matrix part or flux defect) outside.
  double max_outside_violation = 0.0;
  // Largest dissipation density over all samples; must be <= 0.
  double max_mu = 0.0;
  // Largest jump of (state, pressure) across the zone boundary, measured
  // between matched point pairs straddling it.
  double max_boundary_jump = 0.0;
  long zone_samples = 0;
  long outside_samples = 0;
};

// Samples the field on the grid and checks the hypotheses under which the
// perturbation machinery applies: strict eps-margin inside the zone, exact
// constraint membership outside, nonpositive dissipation, and continuity of
// the tuple across the zone boundary.
inline HypothesesReport verify_main_theorem_hypotheses(
    const SubsolutionField& field, double eps, const SampleGrid& grid) {
  if (!(eps > 0.0))
    throw PreconditionViolated("verify_main_theorem_hypotheses: eps > 0");
  if (grid.nx <= 0 || grid.ny <= 0 || grid.nt <= 0 || !(grid.t1 > grid.t0))
    throw PreconditionViolated("verify_main_theorem_hypotheses: bad grid");

  HypothesesReport report;
  report.min_zone_margin = std::numeric_limits<double>::infinity();

  for (int k = 0; k < grid.nt; ++k) {
    const double t = grid.t0 + (k + 0.5) * (grid.t1 - grid.t0) / grid.nt;
    for (int j = 0; j < grid.ny; ++j) {
      const double x2 = -0.5 + (j + 0.5) / grid.ny;
      for (int i = 0; i < grid.nx; ++i) {
        const double x1 = -0.5 + (i + 0.5) / grid.nx;
        const SpaceTime y = {{x1, x2}, t};
        const SubsolutionSample s = field(y);
        report.max_mu = std::max(report.max_mu, s.mu);
        if (field.turbulent_zone(y)) {
          ++report.zone_samples;
          const SuffCondition sc =
              suff_condition(s.state, s.pressure, eps);
          report.min_zone_margin =
              std::min(report.min_zone_margin, sc.margin);
        } else {
          ++report.outside_samples;
          const double violation =
              std::max(k_matrix_residual(s.state),
                       norm(flux_defect(s.state, s.pressure)));
          report.max_outside_violation =
              std::max(report.max_outside_violation, violation);
        }
      }
    }
  }

  // Continuity spot-checks: bisect grid-line segments that cross the zone
  // boundary down to 1e-9 and compare the two sides.
  const auto sample_norm = [](const SubsolutionSample& a,
                              const SubsolutionSample& b) {
    return std::sqrt(norm2(a.state - b.state) +
                     (a.pressure - b.pressure) * (a.pressure - b.pressure));
  };
  for (int k = 0; k < grid.nt; ++k) {
    const double t = grid.t0 + (k + 0.5) * (grid.t1 - grid.t0) / grid.nt;
    for (int j = 0; j + 1 < 2 * grid.ny; ++j) {
      SpaceTime lo = {{0.25, -0.5 + (j + 0.5) / (2.0 * grid.ny)}, t};
      SpaceTime hi = {{0.25, -0.5 + (j + 1.5) / (2.0 * grid.ny)}, t};
      if (field.turbulent_zone(lo) == field.turbulent_zone(hi)) continue;
      for (int step = 0; step < 40; ++step) {
        SpaceTime mid = {{0.25, 0.5 * (lo.x.y + hi.x.y)}, t};
        (field.turbulent_zone(mid) == field.turbulent_zone(lo) ? lo : hi) =
            mid;
      }
      report.max_boundary_jump =
          std::max(report.max_boundary_jump, sample_norm(field(lo), field(hi)));
    }
  }
  if (report.zone_samples == 0) report.min_zone_margin = 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Energy balance of the shear-layer fan

struct EnergyBalance {
  double dE_dt = 0.0;             // d/dt of the total energy 2*int e dx
  double twice_mu_integral = 0.0; // 2 * int mu dx at the same time
};

// Both sides of the global dissipation identity, each by quadrature: the
// energy derivative by central differencing of the quadrature energy, the
// dissipation integral by midpoint rule on the fan zone (the integrand is
// smooth there; outside it vanishes).  The x1 direction integrates to one.
inline EnergyBalance sheet_energy_balance(const VortexSheetSpec& spec,
                                          double t, int n_quad = 10000) {
  if (!(t > 0.0 && t < 1.0))
    throw PreconditionViolated(
        "sheet_energy_balance: need 0 < t < 1 (fan inside the torus)");
  if (n_quad < 2)
    throw PreconditionViolated("sheet_energy_balance: n_quad >= 2");
  const double delta = spec.delta;

  // Total energy 2*int e dx2 at time s, splitting the domain at the fan
  // edges so the midpoint rule sees smooth pieces only.
  const auto energy = [delta, n_quad](double s) {
    const auto piece = [&](double a, double b) {
      double acc = 0.0;
      const double h = (b - a) / n_quad;
      for (int i = 0; i < n_quad; ++i) {
        const double x2 = a + (i + 0.5) * h;
        const double alpha = sheet_alpha(x2, s);
        acc += 2.0 * (0.5 - 0.25 * delta * (1.0 - alpha * alpha)) * h;
      }
      return acc;
    };
    const double edge = 0.5 * s;
    return piece(-0.5, -edge) + piece(-edge, edge) + piece(edge, 0.5);
  };

  EnergyBalance balance;
  const double h = 1e-4 * t;
  balance.dE_dt = (energy(t + h) - energy(t - h)) / (2.0 * h);

  double acc = 0.0;
  const double edge = 0.5 * t;
  const double step = 2.0 * edge / n_quad;
  for (int i = 0; i < n_quad; ++i) {
    const double x2 = -edge + (i + 0.5) * step;
    acc += -2.0 * delta * x2 * x2 / (t * t * t) * step;
  }
  balance.twice_mu_integral = 2.0 * acc;
  return balance;
}

}  // namespace eulerci
