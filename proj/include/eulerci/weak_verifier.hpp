#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "eulerci/fft.hpp"
#include "eulerci/grid.hpp"
#include "eulerci/subsolutions.hpp"
#include "eulerci/test_functions.hpp"

// Quadrature verification of the weak identities satisfied by relaxed
// flows: the three-row linear balance system with initial data and
// dissipation functional, spectral pressure recovery, extraction of the
// energy-defect functionals of a velocity/pressure pair, and per-slice
// energy admissibility.
//
// Quadrature is the midpoint rule on torus lattices.  Known discontinuity
// loci (functions of x2 that may move in time, like the fan edges of the
// shear-layer flow) are handled by splitting the straddling x2 cells at the
// locus, which restores second-order convergence for integrands that jump
// there.  Discontinuities pinned to x2 in {0, +-1/2} fall on cell edges of
// any even lattice and need no treatment.

namespace eulerci {

// Loci of x2-discontinuities at a given time, within [-1/2, 1/2).
using LocusFunction = std::function<std::vector<double>(double t)>;

// A field in weak form: combined state/dissipation sampler plus the data
// entering the initial-time terms and the known discontinuity loci.
struct WeakProblem {
  std::function<SubsolutionSample(const SpaceTime&)> sample;
  std::function<Vec2(const Vec2&)> v0;
  std::function<double(const Vec2&)> e0;
  LocusFunction x2_loci;  // optional
};

// Weak-form view of a closed-form field: initial data from its t = 0 trace.
inline WeakProblem weak_problem(const SubsolutionField& field) {
  WeakProblem problem;
  problem.sample = [&field](const SpaceTime& y) { return field(y); };
  problem.v0 = [&field](const Vec2& x) { return field({x, 0.0}).state.v; };
  problem.e0 = [&field](const Vec2& x) { return field({x, 0.0}).state.e; };
  return problem;
}

// The fan-edge loci of the shear-layer flow, x2 = +-t/2.
inline LocusFunction sheet_loci() {
  return [](double t) {
    std::vector<double> loci;
    if (t > 0.0 && t < 1.0) {
      loci.push_back(-0.5 * t);
      loci.push_back(0.5 * t);
    }
    return loci;
  };
}

// Weak-form view of a lattice field: nearest-node state lookup, external
// dissipation density and initial data.
inline WeakProblem weak_problem(const StateField& field,
                                std::function<double(const SpaceTime&)> mu,
                                std::function<Vec2(const Vec2&)> v0,
                                std::function<double(const Vec2&)> e0,
                                LocusFunction x2_loci = {}) {
  WeakProblem problem;
  problem.sample = [&field, mu = std::move(mu)](const SpaceTime& y) {
    SubsolutionSample s;
    s.state = field.nearest(y);
    s.mu = mu ? mu(y) : 0.0;
    return s;
  };
  problem.v0 = std::move(v0);
  problem.e0 = std::move(e0);
  problem.x2_loci = std::move(x2_loci);
  return problem;
}

struct WeakIdentityRow {
  std::string identity;  // "momentum" | "incompressibility" | "energy"
  int test_index = 0;    // position in the battery
  std::string test_name;
  double residual = 0.0;
  double value = 0.0;  // signed functional; residual = |value|
  double scale = 0.0;  // absolute quadrature mass, for relative reading
  std::string resolution;
};

struct WeakResidualReport {
  std::vector<WeakIdentityRow> rows;
  TorusGrid grid;
  int quadrature_order = 2;

  double max_residual() const {
    double worst = 0.0;
    for (const auto& row : rows) worst = std::max(worst, row.residual);
    return worst;
  }
};

namespace weakdetail {

// One x2 quadrature piece: midpoint and length after locus splitting.
struct Piece {
  double mid;
  double len;
};

inline std::vector<Piece> split_row(int ny, const std::vector<double>& loci) {
  std::vector<Piece> pieces;
  pieces.reserve(ny + 2 * loci.size());
  const double h = 1.0 / ny;
  for (int j = 0; j < ny; ++j) {
    const double a = -0.5 + j * h;
    const double b = a + h;
    double lo = a;
    for (const double locus : loci) {
      if (locus > lo + 1e-14 && locus < b - 1e-14) {
        pieces.push_back({0.5 * (lo + locus), locus - lo});
        lo = locus;
      }
    }
    pieces.push_back({0.5 * (lo + b), b - lo});
  }
  return pieces;
}

// Residual accumulators for one battery member.
struct Accumulator {
  double value = 0.0;
  double mass = 0.0;  // absolute-value counterpart of `value`
  void add(double term, double weight) {
    value += term * weight;
    mass += std::abs(term) * weight;
  }
};

inline std::vector<WeakIdentityRow> residual_rows(
    const WeakProblem& problem, const TestFunctionBattery& battery,
    const TorusGrid& grid) {
  const int n = static_cast<int>(battery.size());
  // Scalar members drive two identities (incompressibility and energy), so
  // each battery slot gets two accumulator banks; vector members use only
  // the first.
  std::vector<Accumulator> acc(static_cast<size_t>(n));
  std::vector<Accumulator> div_acc(static_cast<size_t>(n));

  // Space-time integrals, one sampler evaluation per node.
  for (int k = 0; k < grid.nt; ++k) {
    const double t = grid.t_node(k);
    const std::vector<double> loci =
        problem.x2_loci ? problem.x2_loci(t) : std::vector<double>{};
    const std::vector<Piece> pieces = split_row(grid.ny, loci);
    for (const Piece& piece : pieces) {
      for (int i = 0; i < grid.nx; ++i) {
        const double x1 = -0.5 + (i + 0.5) * grid.dx();
        const SpaceTime y = {{x1, piece.mid}, t};
        const SubsolutionSample s = problem.sample(y);
        const double w = grid.dx() * piece.len * grid.dt();
        for (int b = 0; b < n; ++b) {
          const TestFunction& tf = battery[static_cast<size_t>(b)];
          if (tf.is_vector) {
            acc[b].add(dot(s.state.v, tf.vec_dt(y)), w);
            acc[b].add(tf.sigma_dot_grad(y, s.state.s), w);
          } else {
            const Vec2 g = tf.grad(y);
            acc[b].add(s.state.e * tf.dt(y) + dot(s.state.m, g) +
                           s.mu * tf.value(y),
                       w);
            div_acc[b].add(dot(s.state.v, g), w);
          }
        }
      }
    }
  }

  // Initial-data terms at t = 0.
  const std::vector<double> loci0 =
      problem.x2_loci ? problem.x2_loci(0.0) : std::vector<double>{};
  const std::vector<Piece> pieces0 = split_row(grid.ny, loci0);
  for (const Piece& piece : pieces0) {
    for (int i = 0; i < grid.nx; ++i) {
      const double x1 = -0.5 + (i + 0.5) * grid.dx();
      const Vec2 x = {x1, piece.mid};
      const SpaceTime y0 = {x, 0.0};
      const double w = grid.dx() * piece.len;
      for (int b = 0; b < n; ++b) {
        const TestFunction& tf = battery[static_cast<size_t>(b)];
        if (tf.is_vector)
          acc[b].add(dot(problem.v0(x), tf.vec_value(y0)), w);
        else
          acc[b].add(problem.e0(x) * tf.value(y0), w);
      }
    }
  }

  char res_label[64];
  std::snprintf(res_label, sizeof res_label, "%dx%dx%d", grid.nx, grid.ny,
                grid.nt);
  std::vector<WeakIdentityRow> rows;
  for (int b = 0; b < n; ++b) {
    const TestFunction& tf = battery[static_cast<size_t>(b)];
    if (tf.is_vector) {
      rows.push_back({"momentum", b, tf.name, std::abs(acc[b].value),
                      acc[b].value, acc[b].mass, res_label});
    } else {
      rows.push_back({"incompressibility", b, tf.name,
                      std::abs(div_acc[b].value), div_acc[b].value,
                      div_acc[b].mass, res_label});
      rows.push_back({"energy", b, tf.name, std::abs(acc[b].value),
                      acc[b].value, acc[b].mass, res_label});
    }
  }
  return rows;
}

}  // namespace weakdetail

// Residuals of the three weak identities against the battery.  Throws
// ResolutionTooCoarse when the same functionals computed at half
// resolution disagree by more than 10% of the row's absolute quadrature
// mass — the signature of unresolved oscillations.  (The comparison runs
// only when all grid extents are even and at least 4, and it means callers
// should budget the oscillation-resolution precondition at the *half*
// grid.)  Pass coarse_check = false to skip the comparison, e.g. when the
// quantity of interest is a single wave's raw quadrature value rather than
// a converged functional.
inline WeakResidualReport linear_system_residual(
    const WeakProblem& problem, const TestFunctionBattery& battery,
    const TorusGrid& grid, bool coarse_check = true) {
  grid.validate();
  if (battery.empty())
    throw PreconditionViolated("linear_system_residual: empty battery");
  if (grid.t0 != 0.0)
    throw PreconditionViolated(
        "linear_system_residual: the initial-data terms pair with a time "
        "window starting at 0");

  WeakResidualReport report;
  report.grid = grid;
  report.rows = weakdetail::residual_rows(problem, battery, grid);

  const bool can_halve = coarse_check && grid.nx % 2 == 0 &&
                         grid.ny % 2 == 0 && grid.nt % 2 == 0 &&
                         grid.nx >= 4 && grid.ny >= 4 && grid.nt >= 4;
  if (can_halve) {
    TorusGrid half = grid;
    half.nx /= 2;
    half.ny /= 2;
    half.nt /= 2;
    const auto coarse = weakdetail::residual_rows(problem, battery, half);
    for (size_t r = 0; r < report.rows.size(); ++r) {
      const double fine_val = report.rows[r].residual;
      const double coarse_val = coarse[r].residual;
      if (std::abs(fine_val - coarse_val) > 0.1 * report.rows[r].scale)
        throw ResolutionTooCoarse(
            "linear_system_residual: refinement levels disagree on " +
            report.rows[r].identity + "/" + report.rows[r].test_name);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Spectral pressure recovery

// Solves -lap p = div div (sigma + e id) on the torus from nodal samples
// (row-major, index j*nx + i).  The zero mode is set to zero, so the result
// is mean-free.  Power-of-two extents required.
inline std::vector<double> pressure_recovery(const std::vector<Sym0>& sigma,
                                             const std::vector<double>& e,
                                             int nx, int ny) {
  if (sigma.size() != e.size() ||
      sigma.size() != static_cast<size_t>(nx) * static_cast<size_t>(ny))
    throw PreconditionViolated("pressure_recovery: size mismatch");
  if (!is_power_of_two(nx) || !is_power_of_two(ny))
    throw PreconditionViolated("pressure_recovery: extents must be powers of two");

  const size_t total = sigma.size();
  std::vector<std::complex<double>> g11(total), g12(total), g22(total);
  for (size_t idx = 0; idx < total; ++idx) {
    g11[idx] = sigma[idx].a + e[idx];
    g12[idx] = sigma[idx].b;
    g22[idx] = -sigma[idx].a + e[idx];
  }
  fft_2d(g11, nx, ny, false);
  fft_2d(g12, nx, ny, false);
  fft_2d(g22, nx, ny, false);

  std::vector<std::complex<double>> p_hat(total);
  for (int j = 0; j < ny; ++j) {
    const double k2 = fft_frequency(j, ny);
    for (int i = 0; i < nx; ++i) {
      const double k1 = fft_frequency(i, nx);
      const double kk = k1 * k1 + k2 * k2;
      const size_t idx = static_cast<size_t>(j) * nx + i;
      if (kk == 0.0) {
        p_hat[idx] = 0.0;
        continue;
      }
      p_hat[idx] = -(k1 * k1 * g11[idx] + 2.0 * k1 * k2 * g12[idx] +
                     k2 * k2 * g22[idx]) /
                   kk;
    }
  }
  fft_2d(p_hat, nx, ny, true);
  std::vector<double> p(total);
  for (size_t idx = 0; idx < total; ++idx) p[idx] = p_hat[idx].real();
  return p;
}

// ---------------------------------------------------------------------------
// Energy-defect functionals of a velocity/pressure pair

// mu[Psi] = -( intint [ (|v|^2/2) dt_Psi + (|v|^2/2 + p) v . grad Psi ]
//              + int (|v(x,0)|^2/2) Psi(x,0) dx )
// for each scalar battery member, in battery order.  For an exact Euler
// flow every value vanishes up to quadrature error; for a dissipative flow
// the negated values stay nonnegative up to the same error.
inline std::vector<double> dissipation_extract(
    const std::function<Vec2(const SpaceTime&)>& v,
    const std::function<double(const SpaceTime&)>& p,
    const TestFunctionBattery& battery, const TorusGrid& grid,
    const LocusFunction& x2_loci = {}) {
  grid.validate();
  if (grid.t0 != 0.0)
    throw PreconditionViolated(
        "dissipation_extract: the initial-data term pairs with a time "
        "window starting at 0");
  std::vector<double> values;
  for (size_t b = 0; b < battery.size(); ++b) {
    if (battery[b].is_vector) continue;
    const TestFunction& tf = battery[b];
    double acc = 0.0;
    for (int k = 0; k < grid.nt; ++k) {
      const double t = grid.t_node(k);
      const std::vector<double> loci =
          x2_loci ? x2_loci(t) : std::vector<double>{};
      const auto pieces = weakdetail::split_row(grid.ny, loci);
      for (const auto& piece : pieces) {
        for (int i = 0; i < grid.nx; ++i) {
          const SpaceTime y = {{-0.5 + (i + 0.5) * grid.dx(), piece.mid}, t};
          const Vec2 vv = v(y);
          const double ke = 0.5 * norm2(vv);
          acc += (ke * tf.dt(y) + (ke + p(y)) * dot(vv, tf.grad(y))) *
                 grid.dx() * piece.len * grid.dt();
        }
      }
    }
    const auto pieces0 = weakdetail::split_row(
        grid.ny, x2_loci ? x2_loci(0.0) : std::vector<double>{});
    for (const auto& piece : pieces0) {
      for (int i = 0; i < grid.nx; ++i) {
        const SpaceTime y0 = {{-0.5 + (i + 0.5) * grid.dx(), piece.mid}, 0.0};
        const Vec2 vv = v(y0);
        acc += 0.5 * norm2(vv) * tf.value(y0) * grid.dx() * piece.len;
      }
    }
    values.push_back(-acc);
  }
  return values;
}

// ---------------------------------------------------------------------------
// Per-slice energy admissibility

struct AdmissibilityResult {
  bool weak_admissible = false;
  double initial_energy = 0.0;
  std::vector<double> times;
  std::vector<double> energies;
};

// E(t_k) = int |v(x, t_k)|^2 dx at the grid's slice midpoints, compared
// against E(0) from the initial data; admissible iff no slice exceeds the
// initial energy beyond the tolerance.
inline AdmissibilityResult admissibility_check(
    const std::function<Vec2(const SpaceTime&)>& v,
    const std::function<Vec2(const Vec2&)>& v0, const TorusGrid& grid,
    double tolerance = 1e-8) {
  grid.validate();
  AdmissibilityResult result;

  double e0 = 0.0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      e0 += norm2(v0(grid.x_node(i, j))) * grid.dx() * grid.dy();
  result.initial_energy = e0;

  result.weak_admissible = true;
  for (int k = 0; k < grid.nt; ++k) {
    const double t = grid.t_node(k);
    double energy = 0.0;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        energy += norm2(v({grid.x_node(i, j), t})) * grid.dx() * grid.dy();
    result.times.push_back(t);
    result.energies.push_back(energy);
    if (energy > e0 + tolerance) result.weak_admissible = false;
  }
  return result;
}

}  // namespace eulerci
