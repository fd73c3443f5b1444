#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "eulerci/fft.hpp"
#include "eulerci/grid.hpp"
#include "eulerci/hull_geometry.hpp"
#include "eulerci/plane_waves.hpp"
#include "eulerci/random.hpp"
#include "eulerci/state_algebra.hpp"
#include "eulerci/subsolutions.hpp"
#include "eulerci/test_functions.hpp"
#include "eulerci/weak_verifier.hpp"

// Constraint-chasing iteration.  Starting from a strict subsolution, inject
// compactly supported plane waves cell by cell, pushing the sampled states
// toward the constraint set while leaving the weak identities, the initial
// data, the pressure closure and the dissipation functionals intact.

namespace eulerci {

namespace dridetail {

inline void require(bool ok, const char* what) {
  if (!ok) throw PreconditionViolated(what);
}

// Squared distance to the constraint set, with a cheap membership shortcut
// so exact states cost nothing.  Fast search mode: the driver needs
// rankings and decrease checks, not certified digits.
inline double node_dist2(const State& z, double p, double gamma) {
  if (in_K_gamma(z, p, gamma)) return 0.0;
  const double d = dist_to_K(z, p, gamma, DistMode::kFast).dist;
  return d * d;
}

// Relative second-difference residual of div div (sigma + e id) for a
// single wave at one point.  The wave derives from a potential, so the
// exact value is identically zero; the ratio against the largest term
// isolates what finite differencing alone contributes.
inline double divdiv_spot(const WaveField& w, const SpaceTime& y, double h) {
  auto G = [&](double x1, double x2) {
    const State z = w({{x1, x2}, y.t});
    return std::array<double, 3>{z.s.a + z.e, z.s.b, -z.s.a + z.e};
  };
  const auto c0 = G(y.x.x, y.x.y);
  const auto xp = G(y.x.x + h, y.x.y);
  const auto xm = G(y.x.x - h, y.x.y);
  const auto yp = G(y.x.x, y.x.y + h);
  const auto ym = G(y.x.x, y.x.y - h);
  const auto pp = G(y.x.x + h, y.x.y + h);
  const auto pm = G(y.x.x + h, y.x.y - h);
  const auto mp = G(y.x.x - h, y.x.y + h);
  const auto mm = G(y.x.x - h, y.x.y - h);
  const double h2 = h * h;
  const double t11 = (xp[0] - 2.0 * c0[0] + xm[0]) / h2;
  const double t12 = 2.0 * (pp[1] - pm[1] - mp[1] + mm[1]) / (4.0 * h2);
  const double t22 = (yp[2] - 2.0 * c0[2] + ym[2]) / h2;
  const double scale =
      std::max({std::abs(t11), std::abs(t12), std::abs(t22), 1e-300});
  return std::abs(t11 + t12 + t22) / scale;
}

}  // namespace dridetail

// ---------------------------------------------------------------------------
// Composite field

// Base subsolution plus the waves accepted so far.  Pressure and
// dissipation always come from the base: each wave derives from a
// potential, so it perturbs neither div div (sigma + e id) nor mu, and its
// time slab never touches t = 0, so the initial trace is the base's too.
class PerturbedField {
 public:
  explicit PerturbedField(const SubsolutionField& base) : base_(&base) {}

  SubsolutionSample operator()(const SpaceTime& y) const {
    SubsolutionSample s = (*base_)(y);
    for (const WaveField& w : waves_) s.state += w(y);
    return s;
  }

  // Sum of the wave contributions alone.
  State wave_state(const SpaceTime& y) const {
    State z{};
    for (const WaveField& w : waves_) z += w(y);
    return z;
  }

  const SubsolutionField& base() const { return *base_; }
  const std::vector<WaveField>& waves() const { return waves_; }
  void add(WaveField w) { waves_.push_back(std::move(w)); }
  void remove_last() { waves_.pop_back(); }

 private:
  const SubsolutionField* base_;
  std::vector<WaveField> waves_;
};

// ---------------------------------------------------------------------------
// Iteration driver

struct DriverConfig {
  // Energy cap of the truncated hull.  Must dominate the segment-proof cap
  // for every sampled energy; checked up front.
  double gamma = 16.0;
  double eps = 1.0;  // sufficient-condition parameter of the pre-check
  TorusGrid grid{32, 32, 16, 0.0, 1.0};
  // Selection cells: the lattice is tiled by coarse_nx x coarse_ny x
  // coarse_nt blocks of nodes; each extent must divide the grid's.
  int coarse_nx = 4;
  int coarse_ny = 4;
  int coarse_nt = 4;
  int budget = 50;      // maximum number of injected waves
  double shrink = 0.5;  // segment-shrink factor of the direction search
  // Frequency schedule N_k = base_frequency * 2^floor(k / doubling_period).
  // The phase advances by base_frequency radians per unit length, so the
  // default gives a support of radius ~1/8 about five full oscillations,
  // which keeps the envelope-derivative corrections small against the
  // leading term.
  int base_frequency = 128;
  int doubling_period = 10;
  double cutoff_margin = 0.3;     // envelope taper fraction of each wave
  double radius_fraction = 0.95;  // slab half-width fraction of the cell
  // Spatial support cap: the disk takes the largest radius up to this that
  // keeps its bounding box inside the turbulent zone.  Must stay below 1/2
  // or the disk would overlap itself around the torus.
  double max_radius = 0.45;
  // The amplitude search only accepts a wave if every probed margin stays
  // above margin_floor times the pre-step minimum over the same probes.
  double margin_floor = 0.1;
  // Minimum relative decrease of the cell mean demanded from a candidate;
  // zero accepts any strict decrease.  A positive value makes the step
  // skip cells whose remaining mass the support cannot reach (inscribed
  // disks never cover cell corners) in favor of fresher cells.
  double min_decrease = 0.0;
  // Each weak-identity row may grow by at most headroom times the wave's
  // own quadrature value.
  double residual_headroom = 2.0;
  double stop_dist2 = 1e-14;  // cell mean dist^2 regarded as converged
  std::uint64_t seed = 0;     // diagnostics sampling only; never steers a step
  LocusFunction x2_loci;      // stationary discontinuity loci of the base
};

struct IterationRecord {
  int step = 0;
  std::array<int, 3> cell{};  // selection-cell indices (x, y, t)
  SpaceTime center{};         // wave center (clamped into the cell)
  int frequency = 0;
  double direction_norm = 0.0;      // |zbar| before amplitude scaling
  double amplitude = 0.0;           // accepted scale of the direction
  double cell_dist2_before = 0.0;   // cell mean squared distance
  double cell_dist2_after = 0.0;
  double global_dist2 = 0.0;        // global mean after the step
  double residual_before = 0.0;     // max weak-identity row
  double residual_after = 0.0;
  double wave_residual = 0.0;       // max row of the wave alone
  double initial_drift = 0.0;       // wave magnitude sampled on t = 0
  double mu_drift = 0.0;            // dissipation change at support points
  double pressure_spot = 0.0;       // relative div-div residual of the wave
  double cache_spot = 0.0;          // node cache vs fresh evaluation
  bool interior = false;  // all probes strictly inside the hull afterwards
};

struct IterationLog {
  std::vector<IterationRecord> records;
  double initial_mean_dist2 = 0.0;
  double final_mean_dist2 = 0.0;
  double base_residual = 0.0;  // max row before the first step
  std::string stop_reason;     // "budget" | "converged" | ...
  TorusGrid grid;
};

// One line-delimited JSON object per record, full round-trip precision.
inline void write_record_json(std::ostream& out, const IterationRecord& r) {
  char buf[1024];
  std::snprintf(
      buf, sizeof buf,
      "{\"step\":%d,\"cell\":[%d,%d,%d],\"center\":[%.17g,%.17g,%.17g],"
      "\"frequency\":%d,\"direction_norm\":%.17g,\"amplitude\":%.17g,"
      "\"cell_dist2_before\":%.17g,\"cell_dist2_after\":%.17g,"
      "\"global_dist2\":%.17g,\"residual_before\":%.17g,"
      "\"residual_after\":%.17g,\"wave_residual\":%.17g,"
      "\"initial_drift\":%.17g,\"mu_drift\":%.17g,\"pressure_spot\":%.17g,"
      "\"cache_spot\":%.17g,\"interior\":%s}\n",
      r.step, r.cell[0], r.cell[1], r.cell[2], r.center.x.x, r.center.x.y,
      r.center.t, r.frequency, r.direction_norm, r.amplitude,
      r.cell_dist2_before, r.cell_dist2_after, r.global_dist2,
      r.residual_before, r.residual_after, r.wave_residual, r.initial_drift,
      r.mu_drift, r.pressure_spot, r.cache_spot,
      r.interior ? "true" : "false");
  out << buf;
}

// Runs up to config.budget wave injections on the composite field.
//
// Each step selects the interior selection cell with the largest mean
// squared distance to the constraint set (ties resolved in cell index
// order), derives an admissible oscillation direction at a support center
// clamped into the cell, and bisects the amplitude (at most 30 halvings)
// until
//   - every probed state stays strictly inside the hull, below the energy
//     cap, with margin at least margin_floor times the pre-step minimum,
//   - the cell's mean squared distance strictly decreases, and
//   - no weak-identity row grows by more than residual_headroom times the
//     wave's own row, verified on recomputed functionals.
// Exhausting the bisection throws StalledIteration (after streaming a
// diagnostic record to the sink, when given).  Each accepted record is
// streamed to the sink as line-delimited JSON.
inline IterationLog iterate(PerturbedField& field, const DriverConfig& config,
                            std::ostream* sink = nullptr) {
  using dridetail::node_dist2;
  using dridetail::require;
  const TorusGrid& grid = config.grid;
  grid.validate();
  require(grid.t0 == 0.0,
          "iterate: residual bookkeeping pairs the initial data with t0 = 0");
  require(config.budget >= 0, "iterate: budget must be nonnegative");
  require(config.coarse_nx > 0 && config.coarse_ny > 0 &&
              config.coarse_nt > 0 && grid.nx % config.coarse_nx == 0 &&
              grid.ny % config.coarse_ny == 0 &&
              grid.nt % config.coarse_nt == 0,
          "iterate: selection cells must tile the grid evenly");
  require(config.shrink > 0.0 && config.shrink < 1.0,
          "iterate: shrink must lie in (0,1)");
  require(config.base_frequency >= 1, "iterate: base_frequency >= 1");
  require(config.doubling_period >= 1, "iterate: doubling_period >= 1");
  require(config.cutoff_margin > 0.0 && config.cutoff_margin < 1.0,
          "iterate: cutoff_margin must lie in (0,1)");
  require(config.radius_fraction > 0.0 && config.radius_fraction < 1.0,
          "iterate: radius_fraction must lie in (0,1)");
  require(config.margin_floor >= 0.0 && config.margin_floor < 1.0,
          "iterate: margin_floor must lie in [0,1)");
  require(config.min_decrease >= 0.0 && config.min_decrease < 1.0,
          "iterate: min_decrease must lie in [0,1)");
  require(config.max_radius > 0.0 && config.max_radius < 0.5,
          "iterate: max_radius must lie in (0,1/2)");
  require(config.residual_headroom >= 1.0,
          "iterate: residual_headroom must be at least 1");
  require(config.stop_dist2 >= 0.0, "iterate: stop_dist2 >= 0");

  const SubsolutionField& base = field.base();

  // The machinery assumes the base field passes its hypothesis check on
  // this lattice.
  {
    const SampleGrid sg{grid.nx, grid.ny, grid.nt, grid.t0, grid.t1};
    const HypothesesReport hyp =
        verify_main_theorem_hypotheses(base, config.eps, sg);
    require(hyp.zone_samples == 0 || hyp.min_zone_margin > 0.0,
            "iterate: base field has no strict zone margin");
    require(hyp.max_mu <= 1e-12,
            "iterate: base dissipation density must be nonpositive");
    require(hyp.max_outside_violation <= 1e-8,
            "iterate: base field violates the constraints outside the zone");
  }

  // ---- node caches over the fine lattice
  const long n_nodes = grid.cells();
  std::vector<State> zc(static_cast<size_t>(n_nodes));
  std::vector<double> pc(static_cast<size_t>(n_nodes));
  std::vector<double> mc(static_cast<size_t>(n_nodes));
  std::vector<double> d2(static_cast<size_t>(n_nodes));
  double e_max = -1e300;
  for (int k = 0; k < grid.nt; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const size_t idx = static_cast<size_t>(grid.index(i, j, k));
        const SubsolutionSample s = field(grid.node(i, j, k));
        zc[idx] = s.state;
        pc[idx] = s.pressure;
        mc[idx] = hull_margin(s.state);
        e_max = std::max(e_max, s.state.e);
      }
  require(config.gamma >= gamma_eps(e_max, config.eps),
          "iterate: gamma must dominate the segment-proof cap over the "
          "sampled energy range");
  double total_d2 = 0.0;
  for (size_t idx = 0; idx < zc.size(); ++idx) {
    d2[idx] = node_dist2(zc[idx], pc[idx], config.gamma);
    total_d2 += d2[idx];
  }

  // ---- selection cells
  const int mx = grid.nx / config.coarse_nx;
  const int my = grid.ny / config.coarse_ny;
  const int mt = grid.nt / config.coarse_nt;
  const long nodes_per_cell = static_cast<long>(mx) * my * mt;

  struct CellBox {
    double xlo, xhi, ylo, yhi, tlo, thi;
  };
  auto cell_box = [&](int ci, int cj, int ck) {
    CellBox b;
    b.xlo = -0.5 + ci * mx * grid.dx();
    b.xhi = b.xlo + mx * grid.dx();
    b.ylo = -0.5 + cj * my * grid.dy();
    b.yhi = b.ylo + my * grid.dy();
    b.tlo = grid.t0 + ck * mt * grid.dt();
    b.thi = b.tlo + mt * grid.dt();
    return b;
  };
  auto for_cell_nodes = [&](int ci, int cj, int ck, auto&& fn) {
    for (int k = ck * mt; k < (ck + 1) * mt; ++k)
      for (int j = cj * my; j < (cj + 1) * my; ++j)
        for (int i = ci * mx; i < (ci + 1) * mx; ++i)
          fn(static_cast<size_t>(grid.index(i, j, k)), i, j, k);
  };

  // A wave support placed at ctr only touches base states that start
  // strictly inside the hull when its closed bounding box lies in the
  // zone; probe a 5x5x5 lattice including the corners.
  auto support_in_zone = [&](const SpaceTime& ctr, double r, double ht) {
    for (int a = 0; a <= 4; ++a)
      for (int b = 0; b <= 4; ++b)
        for (int c = 0; c <= 4; ++c) {
          const SpaceTime y{{ctr.x.x + (a - 2) * (r / 2.0),
                             ctr.x.y + (b - 2) * (r / 2.0)},
                            ctr.t + (c - 2) * (ht / 2.0)};
          if (!base.turbulent_zone(y)) return false;
        }
    return true;
  };

  // ---- weak-identity bookkeeping
  const TestFunctionBattery battery = standard_battery(grid.t1);
  WeakProblem problem;
  problem.sample = [&field](const SpaceTime& y) { return field(y); };
  problem.v0 = [&base](const Vec2& x) { return base({x, 0.0}).state.v; };
  problem.e0 = [&base](const Vec2& x) { return base({x, 0.0}).state.e; };
  problem.x2_loci = config.x2_loci;

  WeakResidualReport report = linear_system_residual(problem, battery, grid);
  std::vector<double> row_value(report.rows.size());
  std::vector<double> row_scale(report.rows.size());
  for (size_t r = 0; r < report.rows.size(); ++r) {
    row_value[r] = report.rows[r].value;
    row_scale[r] = report.rows[r].scale;
  }

  IterationLog log;
  log.grid = grid;
  log.base_residual = report.max_residual();
  log.initial_mean_dist2 = total_d2 / static_cast<double>(n_nodes);
  log.stop_reason = "budget";
  double res_prev = log.base_residual;

  for (int step = 0; step < config.budget; ++step) {
    // ---- rank interior cells by mean squared distance
    struct Ranked {
      double mean;
      int ci, cj, ck;
    };
    std::vector<Ranked> ranked;
    for (int ci = 0; ci < config.coarse_nx; ++ci)
      for (int cj = 0; cj < config.coarse_ny; ++cj)
        for (int ck = 0; ck < config.coarse_nt; ++ck) {
          bool interior = true;
          double sum = 0.0;
          for_cell_nodes(ci, cj, ck, [&](size_t idx, int, int, int) {
            interior = interior && mc[idx] > 0.0 && zc[idx].e < config.gamma;
            sum += d2[idx];
          });
          if (interior)
            ranked.push_back(
                {sum / static_cast<double>(nodes_per_cell), ci, cj, ck});
        }
    std::stable_sort(
        ranked.begin(), ranked.end(),
        [](const Ranked& a, const Ranked& b) { return a.mean > b.mean; });
    if (ranked.empty()) {
      log.stop_reason = "no interior cell";
      break;
    }
    if (ranked.front().mean <= config.stop_dist2) {
      log.stop_reason = "converged";
      break;
    }

    // ---- attempt cells in rank order: place a support, derive a
    // direction, bisect the amplitude; the first candidate that passes
    // every gate wins the step, and a cell whose search fails falls
    // through to the next one
    struct NodeEntry {
      size_t idx;
      SpaceTime y;
    };
    int ci = -1, cj = -1, ck = -1;
    SpaceTime center{};
    State zbar{};
    double amp = 0.0, cell_before = 0.0, cell_after = 0.0;
    bool interior_ok = false;
    bool accepted = false;
    bool any_search = false;
    std::vector<NodeEntry> entries;
    std::array<Vec2, 16> init_pts{};
    std::array<SpaceTime, 8> mu_pts{};
    std::array<double, 8> mu_before{};
    std::array<SpaceTime, 5> fd_pts{};
    size_t spot_node = 0;
    WeakResidualReport after;
    WeakResidualReport wave_report;
    const int shifts = std::min(step / config.doubling_period, 16);
    const int freq = config.base_frequency << shifts;

    auto run_ladder = [&](double eff_dec) {
    for (const Ranked& cand : ranked) {
      if (cand.mean <= config.stop_dist2) break;

      // -- support placement: the time slab is inscribed in the cell, so
      // initial data and the causal structure of the run stay untouched;
      // the spatial disk is as wide as the turbulent zone (and the torus)
      // allows, because the hull constraints — not the selection tiling —
      // are what bound an admissible perturbation
      const CellBox box = cell_box(cand.ci, cand.cj, cand.ck);
      const double ht = config.radius_fraction * 0.5 * (box.thi - box.tlo);
      const double r_min =
          1.5 * std::max(grid.dx(), grid.dy());  // must reach several nodes
      double best = -1.0;
      SpaceTime best_node{};
      double wsum = 0.0;
      SpaceTime wmean{};
      for_cell_nodes(cand.ci, cand.cj, cand.ck,
                     [&](size_t idx, int i, int j, int k) {
                       const SpaceTime y = grid.node(i, j, k);
                       if (d2[idx] > best) {
                         best = d2[idx];
                         best_node = y;
                       }
                       wsum += d2[idx];
                       wmean.x.x += d2[idx] * y.x.x;
                       wmean.x.y += d2[idx] * y.x.y;
                       wmean.t += d2[idx] * y.t;
                     });
      auto clamp_center = [&](const SpaceTime& want) {
        return SpaceTime{{std::clamp(want.x.x, box.xlo, box.xhi),
                          std::clamp(want.x.y, box.ylo, box.yhi)},
                         std::clamp(want.t, box.tlo + ht, box.thi - ht)};
      };
      const SpaceTime centroid{
          {0.5 * (box.xlo + box.xhi), 0.5 * (box.ylo + box.yhi)},
          0.5 * (box.tlo + box.thi)};
      std::vector<SpaceTime> tries;
      tries.push_back(clamp_center(best_node));
      if (wsum > 0.0)  // distance-weighted centroid targets leftover mass
        tries.push_back(clamp_center(
            {{wmean.x.x / wsum, wmean.x.y / wsum}, wmean.t / wsum}));
      tries.push_back(centroid);
      for (int sy = -1; sy <= 1; sy += 2)
        for (int st = -1; st <= 1; st += 2)
          tries.push_back(clamp_center(
              {{centroid.x.x,
                centroid.x.y + sy * 0.25 * (box.yhi - box.ylo)},
               centroid.t + st * 0.25 * (box.thi - box.tlo)}));
      // Largest zone-compatible disk at a candidate center; 0 when even a
      // few-node disk pokes out of the zone.
      auto zone_radius = [&](const SpaceTime& c) {
        double rr = config.max_radius;
        while (rr >= r_min) {
          if (support_in_zone(c, rr, ht)) return rr;
          rr *= 0.85;
        }
        return 0.0;
      };
      SpaceTime ctr{};
      double r = 0.0;
      bool placed = false;
      for (const SpaceTime& c : tries) {
        const double rc = zone_radius(c);
        if (rc > r) {
          ctr = c;
          r = rc;
          placed = true;
        }
      }
      if (!placed) continue;

      // -- oscillation direction at the support center
      const SubsolutionSample sc = field(ctr);
      State dir{};
      try {
        dir = find_perturbation(sc.state, sc.pressure, config.gamma,
                                config.shrink);
      } catch (const NotInHullInterior&) {
        continue;  // center slipped outside between nodes; next cell
      }
      if (!(norm(dir) > 0.0)) continue;  // center already on the set
      WaveCovector cov;
      try {
        cov = kernel_direction(dir);
      } catch (const Error&) {
        continue;
      }
      any_search = true;

      WaveSpec wspec;
      wspec.direction = dir;
      wspec.xi = cov.xi;
      wspec.c = cov.c;
      wspec.frequency = freq;
      wspec.center = ctr;
      wspec.radius = r;
      wspec.cutoff_margin = config.cutoff_margin;
      wspec.time_slab = ht;

      // -- probe set: a support lattice at least as fine as the node
      // spacing, plus the cell's nodes; a strict-hull guarantee sampled
      // coarser than the grid it is later checked on would be hollow
      struct Probe {
        SpaceTime y;
        State z;
        double p;
        double floor;
        double now;  // margin before the candidate
      };
      const int npx = std::clamp(
          static_cast<int>(std::ceil(2.0 * r / grid.dx())) | 1, 7, 33);
      const int npt = std::clamp(
          static_cast<int>(std::ceil(2.0 * ht / grid.dt())) | 1, 5, 9);
      // Every probe keeps margin_floor times its own base-field margin: the
      // base never moves, so the standoff holds station across the run,
      // where a floor tied to the evolving composite would ratchet itself
      // to zero and the search would end at machine-epsilon margins.
      auto probe_floor = [&](const SpaceTime& y) {
        return config.margin_floor * hull_margin(base(y).state);
      };
      std::vector<Probe> probes;
      probes.reserve(static_cast<size_t>(npx) * npx * npt);
      for (int a = 0; a < npx; ++a)
        for (int b = 0; b < npx; ++b)
          for (int c = 0; c < npt; ++c) {
            const SpaceTime y{
                {ctr.x.x + (2.0 * a / (npx - 1) - 1.0) * r,
                 ctr.x.y + (2.0 * b / (npx - 1) - 1.0) * r},
                ctr.t + (2.0 * c / (npt - 1) - 1.0) * ht};
            const SubsolutionSample s = field(y);
            probes.push_back({y, s.state, s.pressure, probe_floor(y),
                              hull_margin(s.state)});
          }
      std::vector<NodeEntry> cell_nodes;
      for_cell_nodes(cand.ci, cand.cj, cand.ck,
                     [&](size_t idx, int i, int j, int k) {
                       const SpaceTime y = grid.node(i, j, k);
                       cell_nodes.push_back({idx, y});
                       probes.push_back(
                           {y, zc[idx], pc[idx], probe_floor(y), mc[idx]});
                     });

      // -- diagnostics points, drawn before the search so the stream of
      // draws never depends on how many amplitudes get rejected
      Rng rng(config.seed + 0x9e3779b97f4a7c15ULL *
                                (static_cast<std::uint64_t>(step) + 1));
      std::array<Vec2, 16> a_init;
      for (Vec2& x : a_init)
        x = {rng.uniform(ctr.x.x - r, ctr.x.x + r),
             rng.uniform(ctr.x.y - r, ctr.x.y + r)};
      std::array<SpaceTime, 8> a_mu;
      std::array<double, 8> a_mu_before;
      for (size_t q = 0; q < a_mu.size(); ++q) {
        a_mu[q] = {{rng.uniform(ctr.x.x - r, ctr.x.x + r),
                    rng.uniform(ctr.x.y - r, ctr.x.y + r)},
                   rng.uniform(ctr.t - ht, ctr.t + ht)};
        a_mu_before[q] = field(a_mu[q]).mu;
      }
      std::array<SpaceTime, 5> a_fd;
      for (SpaceTime& y : a_fd)
        y = {{rng.uniform(ctr.x.x - 0.5 * r, ctr.x.x + 0.5 * r),
              rng.uniform(ctr.x.y - 0.5 * r, ctr.x.y + 0.5 * r)},
             rng.uniform(ctr.t - 0.5 * ht, ctr.t + 0.5 * ht)};
      const size_t a_spot = cell_nodes[rng.raw() % cell_nodes.size()].idx;

      // -- single-wave quadrature rows at unit amplitude (the functionals
      // are linear in the field, so rows scale with the amplitude); the
      // same jump loci keep both quadratures on identical panels, which
      // makes the recomputed rows match the linear prediction to roundoff.
      // Computed lazily: only a candidate that passes the cheap gates pays
      // for the full-grid pass.
      const WaveField proto = time_slab_wave(wspec);
      std::optional<WeakResidualReport> wrows;
      auto wave_rows = [&]() -> const WeakResidualReport& {
        if (!wrows) {
          WeakProblem wave_problem;
          wave_problem.sample = [&proto](const SpaceTime& y) {
            SubsolutionSample s;
            s.state = proto(y);
            return s;
          };
          wave_problem.v0 = [](const Vec2&) { return Vec2{0.0, 0.0}; };
          wave_problem.e0 = [](const Vec2&) { return 0.0; };
          wave_problem.x2_loci = config.x2_loci;
          wrows = linear_system_residual(wave_problem, battery, grid, false);
        }
        return *wrows;
      };

      // -- amplitude search: geometric scan down from the full direction
      // for the first admissible scale, then bisection toward the smallest
      // rejected one, because the removed squared distance grows like the
      // square of the scale and a factor of two left on the table costs a
      // factor of four in progress
      struct Gate {
        bool ok = false;
        double post_min = 0.0;
        double mean_after = 0.0;
      };
      auto gates = [&](double a) {
        Gate g;
        WaveSpec cs = wspec;
        cs.direction = dir * a;
        const WaveField wcand = time_slab_wave(cs);
        double post_min = 1e300;
        for (const Probe& pr : probes) {
          const State z2 = pr.z + wcand(pr.y);
          const double m2 = hull_margin(z2);
          post_min = std::min(post_min, m2);
          if (!(m2 > 0.0 && z2.e < config.gamma)) return g;
          // Fresh territory respects the stationary floor; territory some
          // earlier wave already pushed below it may lose at most a fixed
          // fraction of what remains per wave.  The cap keeps every margin
          // strictly positive without letting spent regions permanently
          // blockade all overlapping supports.
          if (m2 < std::min(pr.floor, 0.75 * pr.now)) return g;
        }
        double sum = 0.0;
        for (const NodeEntry& ne : cell_nodes)
          sum += node_dist2(zc[ne.idx] + wcand(ne.y), pc[ne.idx],
                            config.gamma);
        g.mean_after = sum / static_cast<double>(nodes_per_cell);
        if (!(g.mean_after < cand.mean * (1.0 - eff_dec))) return g;
        g.ok = true;
        g.post_min = post_min;
        return g;
      };
      for (int trial = 0; trial < 30 && !accepted; ++trial) {
        double a = std::ldexp(1.0, -trial);
        Gate g = gates(a);
        if (!g.ok) continue;
        if (trial > 0) {
          double lo = a, hi = 2.0 * a;
          for (int rfn = 0; rfn < 4; ++rfn) {
            const double mid = 0.5 * (lo + hi);
            const Gate gm = gates(mid);
            if (gm.ok) {
              lo = mid;
              g = gm;
            } else {
              hi = mid;
            }
          }
          a = lo;
        }
        const double mean_after = g.mean_after;
        const double post_min = g.post_min;
        WaveSpec cs = wspec;
        cs.direction = dir * a;
        WaveField wcand = time_slab_wave(cs);

        // Recompute the functionals with the candidate in place and hold
        // every row to its headroom cap.  Linearity of the functionals
        // makes the cap a guarantee rather than a hope, but the check runs
        // on the recomputed values, not the prediction.  The half-versus-
        // full resolution cross-check stays off here: it judges absolute
        // quadrature trust, which the base assessment establishes once; on
        // the composite the rows compare against the wave's own rows over
        // identical panels, where linearity is exact at any resolution.
        const WeakResidualReport& wr = wave_rows();
        field.add(std::move(wcand));
        bool verified = true;
        {
          after = linear_system_residual(problem, battery, grid, false);
        }
        if (verified) {
          for (size_t rw = 0; rw < after.rows.size(); ++rw) {
            const double wave_row = a * std::abs(wr.rows[rw].value);
            if (after.rows[rw].residual >
                std::abs(row_value[rw]) + config.residual_headroom * wave_row +
                    1e-12 * std::max(1.0, row_scale[rw])) {
              verified = false;
              break;
            }
          }
        }
        if (!verified) {
          field.remove_last();
          continue;
        }
        accepted = true;
        ci = cand.ci;
        cj = cand.cj;
        ck = cand.ck;
        center = ctr;
        zbar = dir;
        amp = a;
        cell_before = cand.mean;
        cell_after = mean_after;
        interior_ok = post_min > 0.0;
        entries = std::move(cell_nodes);
        init_pts = a_init;
        mu_pts = a_mu;
        mu_before = a_mu_before;
        fd_pts = a_fd;
        spot_node = a_spot;
        wave_report = wr;
        break;
      }
      if (accepted) break;
    }
    };
    run_ladder(config.min_decrease);
    // A pass may come up empty only because of the decrease demand; accept
    // any strict decrease before declaring a stall.
    if (!accepted && config.min_decrease > 0.0) run_ladder(0.0);

    if (!accepted) {
      if (!any_search) {
        log.stop_reason = "no admissible support";
        break;
      }
      IterationRecord stall;
      stall.step = step;
      stall.cell = {ranked.front().ci, ranked.front().cj, ranked.front().ck};
      stall.frequency = freq;
      stall.cell_dist2_before = ranked.front().mean;
      stall.cell_dist2_after = ranked.front().mean;
      stall.global_dist2 = total_d2 / static_cast<double>(n_nodes);
      stall.residual_before = res_prev;
      stall.residual_after = res_prev;
      if (sink) write_record_json(*sink, stall);
      throw StalledIteration(
          "iterate: no ranked cell admitted a wave at step " +
          std::to_string(step));
    }

    // ---- commit: refresh the caches on every node the support touches
    // (the disk reaches well past the selected cell)
    const WaveField& wave = field.waves().back();
    for (int k = 0; k < grid.nt; ++k)
      for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
          const size_t idx = static_cast<size_t>(grid.index(i, j, k));
          const State w = wave(grid.node(i, j, k));
          if (norm2(w) == 0.0) continue;
          zc[idx] += w;
          mc[idx] = hull_margin(zc[idx]);
          total_d2 -= d2[idx];
          d2[idx] = node_dist2(zc[idx], pc[idx], config.gamma);
          total_d2 += d2[idx];
        }
    {
      double sum = 0.0;
      for (const NodeEntry& ne : entries) sum += d2[ne.idx];
      cell_after = sum / static_cast<double>(nodes_per_cell);
    }

    // ---- invariance diagnostics
    double init_drift = 0.0;
    for (const Vec2& x : init_pts)
      init_drift = std::max(init_drift, norm(wave({x, 0.0})));
    double mu_drift = 0.0;
    for (size_t q = 0; q < mu_pts.size(); ++q)
      mu_drift = std::max(mu_drift, std::abs(field(mu_pts[q]).mu - mu_before[q]));
    double pressure_spot = 0.0;
    const double h = 5e-3 / freq;
    for (const SpaceTime& y : fd_pts)
      pressure_spot =
          std::max(pressure_spot, dridetail::divdiv_spot(wave, y, h));
    double cache_spot = 0.0;
    for (const NodeEntry& ne : entries)
      if (ne.idx == spot_node) {
        cache_spot = norm(field(ne.y).state - zc[ne.idx]);
        break;
      }

    IterationRecord rec;
    rec.step = step;
    rec.cell = {ci, cj, ck};
    rec.center = center;
    rec.frequency = freq;
    rec.direction_norm = norm(zbar);
    rec.amplitude = amp;
    rec.cell_dist2_before = cell_before;
    rec.cell_dist2_after = cell_after;
    rec.global_dist2 = total_d2 / static_cast<double>(n_nodes);
    rec.residual_before = res_prev;
    rec.residual_after = after.max_residual();
    rec.wave_residual = amp * wave_report.max_residual();
    rec.initial_drift = init_drift;
    rec.mu_drift = mu_drift;
    rec.pressure_spot = pressure_spot;
    rec.cache_spot = cache_spot;
    rec.interior = interior_ok;
    log.records.push_back(rec);
    if (sink) write_record_json(*sink, rec);

    res_prev = rec.residual_after;
    for (size_t rw = 0; rw < after.rows.size(); ++rw) {
      row_value[rw] = after.rows[rw].value;
      row_scale[rw] = after.rows[rw].scale;
    }
  }

  log.final_mean_dist2 = total_d2 / static_cast<double>(n_nodes);
  return log;
}

// ---------------------------------------------------------------------------
// Density scheme, step 1: spectral mollification of shear data

struct Stage1Result {
  SubsolutionField field;  // relaxed evolution of the mollified data
  std::function<double(double)> profile;  // the mollified shear profile
  int cutoff = 0;            // largest retained frequency magnitude
  double tail_energy = 0.0;  // squared L2 distance to the input profile
  double data_slack = 0.0;   // delta - tail_energy
  double margin_min = 0.0;   // pointwise t = 0 energy margin extremes;
  double margin_max = 0.0;   //   both equal delta up to roundoff
  double margin_integral = 0.0;  // quadrature of the t = 0 energy margin
};

// Truncates the shear data w = (f(x2), 0) at the smallest frequency cutoff
// whose discarded spectral energy stays within delta, then relaxes the
// truncated flow into a subsolution whose t = 0 energy margin is delta
// everywhere.  Cutoffs are only trusted up to a quarter of the sampling
// rate; data carrying more than delta of energy beyond that band cannot be
// mollified at this resolution and is rejected.
inline Stage1Result density_stage1(
    const std::function<double(double)>& shear, double delta,
    const std::function<double(const SpaceTime&)>& mu, double horizon = 1.0,
    int samples = 256) {
  using dridetail::require;
  require(static_cast<bool>(shear), "density_stage1: missing shear profile");
  require(static_cast<bool>(mu), "density_stage1: missing mu");
  require(delta > 0.0, "density_stage1: delta must be positive");
  require(samples >= 8 && is_power_of_two(samples),
          "density_stage1: samples must be a power of two, at least 8");

  std::vector<std::complex<double>> hat(static_cast<size_t>(samples));
  for (int i = 0; i < samples; ++i)
    hat[static_cast<size_t>(i)] = shear(-0.5 + (i + 0.5) / samples);
  fft(hat, false);

  // Spectral energy per frequency magnitude (Parseval on the sample set).
  const int nyquist = samples / 2;
  std::vector<double> band(static_cast<size_t>(nyquist) + 1, 0.0);
  const double inv_n2 = 1.0 / (static_cast<double>(samples) * samples);
  for (int i = 0; i < samples; ++i)
    band[static_cast<size_t>(std::abs(fft_frequency(i, samples)))] +=
        std::norm(hat[static_cast<size_t>(i)]) * inv_n2;

  const int trusted = samples / 4;
  double tail = 0.0;
  for (int k = nyquist; k > trusted; --k)
    tail += band[static_cast<size_t>(k)];
  if (tail > delta)
    throw MollificationFailed(
        "density_stage1: more than delta of spectral energy beyond the "
        "trusted band; raise the sampling resolution");
  int cutoff = trusted;
  while (cutoff > 0 && tail + band[static_cast<size_t>(cutoff)] <= delta) {
    tail += band[static_cast<size_t>(cutoff)];
    --cutoff;
  }

  // Real reconstruction with the midpoint-lattice phase folded in.
  struct Harmonic {
    int k;
    double re, im;
  };
  constexpr double kPi = 3.14159265358979323846;
  std::vector<Harmonic> modes;
  for (int k = -cutoff; k <= cutoff; ++k) {
    const int i = ((k % samples) + samples) % samples;
    const std::complex<double> a =
        hat[static_cast<size_t>(i)] *
        std::polar(1.0 / samples, -kPi * k / samples);
    modes.push_back({k, a.real(), a.imag()});
  }
  auto profile = [modes](double x) {
    double f = 0.0;
    for (const Harmonic& m : modes) {
      const double ph = 2.0 * 3.14159265358979323846 * m.k * (x + 0.5);
      f += m.re * std::cos(ph) - m.im * std::sin(ph);
    }
    return f;
  };

  DensitySubsolutionSpec spec;
  spec.shear_profile = profile;
  spec.delta = delta;
  spec.mu = mu;
  spec.horizon = horizon;

  Stage1Result out{density_subsolution(spec),
                   profile,
                   cutoff,
                   tail,
                   delta - tail,
                   0.0,
                   0.0,
                   0.0};

  // The t = 0 energy margin is the untouched budget delta at every point.
  const int nc = 64;
  double mn = 1e300, mx = -1e300, integral = 0.0;
  for (int j = 0; j < nc; ++j)
    for (int i = 0; i < nc; ++i) {
      const Vec2 x{-0.5 + (i + 0.5) / nc, -0.5 + (j + 0.5) / nc};
      const SubsolutionSample s = out.field({x, 0.0});
      const double m = s.state.e - 0.5 * norm2(s.state.v);
      mn = std::min(mn, m);
      mx = std::max(mx, m);
      integral += m;
    }
  out.margin_min = mn;
  out.margin_max = mx;
  out.margin_integral = integral / (static_cast<double>(nc) * nc);
  return out;
}

// ---------------------------------------------------------------------------
// Density scheme, step 2: one packing of constraint-chasing waves at t = 0

struct DensityBall {
  Vec2 center{};
  double radius = 0.0;
  double dist2 = 0.0;       // squared distance at the center (oracle mode)
  double mass = 0.0;        // integral of |wave(., 0)|^2 over the ball
  double v_mass = 0.0;      // velocity share of mass
  double e_integral = 0.0;  // signed integral of the wave energy component
  double constant = 0.0;    // mass / (pi r^2 dist2)
  double amplitude = 0.0;
};

struct Stage2Config {
  double gamma = 16.0;
  double shrink = 0.5;
  double amplitude = 0.35;  // initial direction scale of the line search
  double ball_radius = 0.11;
  double cutoff_margin = 0.3;
  int candidates = 32;      // candidate-center lattice resolution
  int frequency_floor = 8;  // N = max(floor, frequency_per_j * j)
  int frequency_per_j = 4;
  double slab_fraction = 0.9;  // temporal half-width = slab_fraction / j
  double dist2_floor = 1e-7;   // centers this close to the set are left alone
  double margin_floor = 0.1;
};

struct Stage2Result {
  std::vector<WaveField> waves;
  std::vector<DensityBall> balls;
  int j = 0;
  int frequency = 0;
  double support_bound = 0.0;  // the waves vanish for t >= 1/j
  double slice_mass = 0.0;     // total squared t = 0 mass of the waves
  double slice_v_mass = 0.0;   // velocity share of slice_mass
  double slice_e_integral = 0.0;  // signed energy-component integral
  double dist2_integral = 0.0;    // t = 0 squared-distance integral (fast)
  double min_constant = 0.0;
  double max_constant = 0.0;

  State at(const SpaceTime& y) const {
    State z{};
    for (const WaveField& w : waves) z += w(y);
    return z;
  }
};

// Packs disjoint balls greedily where the t = 0 states sit farthest from
// the constraint set and plants one slab wave per ball.  Every wave lives
// in |t| < slab_fraction / j, so the perturbation vanishes for t >= 1/j;
// the t = 0 slice keeps full amplitude because the slab envelope is flat
// at its temporal center.  States already on the set (within dist2_floor)
// are left untouched.
inline Stage2Result density_stage2(
    const std::function<SubsolutionSample(const SpaceTime&)>& field, int j,
    const Stage2Config& cfg = {}) {
  using dridetail::require;
  require(static_cast<bool>(field), "density_stage2: missing field");
  require(j >= 1, "density_stage2: j must be at least 1");
  require(cfg.ball_radius > 0.0 && cfg.ball_radius < 0.25,
          "density_stage2: ball_radius must lie in (0, 1/4)");
  require(cfg.candidates >= 4, "density_stage2: candidate lattice too small");
  require(cfg.slab_fraction > 0.0 && cfg.slab_fraction < 1.0,
          "density_stage2: slab_fraction must lie in (0,1)");
  require(cfg.amplitude > 0.0, "density_stage2: amplitude must be positive");
  require(cfg.shrink > 0.0 && cfg.shrink < 1.0,
          "density_stage2: shrink must lie in (0,1)");
  require(cfg.frequency_floor >= 1 && cfg.frequency_per_j >= 1,
          "density_stage2: frequencies must be positive");
  require(cfg.margin_floor >= 0.0 && cfg.margin_floor < 1.0,
          "density_stage2: margin_floor must lie in [0,1)");

  Stage2Result out;
  out.j = j;
  out.frequency = std::max(cfg.frequency_floor, cfg.frequency_per_j * j);
  out.support_bound = 1.0 / j;
  const double th = cfg.slab_fraction / j;
  const double r = cfg.ball_radius;

  // Candidate centers on a midpoint lattice, kept a support radius clear
  // of the wrap seam: supports then never cross it, so plain euclidean
  // disjointness of the balls is disjointness on the torus.
  const int n = cfg.candidates;
  struct Cand {
    Vec2 x;
    double d2;
  };
  std::vector<Cand> cands;
  double d2_sum = 0.0;
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) {
      const Vec2 x{-0.5 + (a + 0.5) / n, -0.5 + (b + 0.5) / n};
      const SubsolutionSample s = field({x, 0.0});
      const double d2 =
          dridetail::node_dist2(s.state, s.pressure, cfg.gamma);
      d2_sum += d2;
      if (d2 <= cfg.dist2_floor) continue;
      require(hull_margin(s.state) > 0.0 && s.state.e < cfg.gamma,
              "density_stage2: a state away from the set is not strictly "
              "interior");
      if (std::abs(x.x) > 0.5 - r - 1e-12 ||
          std::abs(x.y) > 0.5 - r - 1e-12)
        continue;
      cands.push_back({x, d2});
    }
  out.dist2_integral = d2_sum / (static_cast<double>(n) * n);

  // Greedy disjoint packing, farthest-from-the-set first (lattice order on
  // ties).
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.d2 > b.d2; });
  std::vector<Vec2> placed;
  for (const Cand& c : cands) {
    bool free_slot = true;
    for (const Vec2& q : placed) {
      const double dx = c.x.x - q.x;
      const double dy = c.x.y - q.y;
      const double sep = 2.0 * r + 1e-12;
      if (dx * dx + dy * dy < sep * sep) {
        free_slot = false;
        break;
      }
    }
    if (free_slot) placed.push_back(c.x);
  }

  constexpr double kPi = 3.14159265358979323846;
  for (const Vec2& cx : placed) {
    const SubsolutionSample s0 = field({cx, 0.0});
    const State zbar =
        find_perturbation(s0.state, s0.pressure, cfg.gamma, cfg.shrink);
    if (!(norm(zbar) > 0.0)) continue;
    const WaveCovector cov = kernel_direction(zbar);

    WaveSpec ws;
    ws.xi = cov.xi;
    ws.c = cov.c;
    ws.frequency = out.frequency;
    ws.center = {cx, 0.0};
    ws.radius = r;
    ws.cutoff_margin = cfg.cutoff_margin;
    ws.time_slab = th;

    // Margin probes over the ball and the forward half of the slab (the
    // cylinder starts at t = 0).
    std::vector<SpaceTime> pts;
    std::vector<State> zs;
    std::vector<double> margins;
    double pre_min = 1e300;
    for (int a = 0; a < 7; ++a)
      for (int b = 0; b < 7; ++b)
        for (int c = 0; c < 5; ++c) {
          const SpaceTime y{{cx.x + (a - 3) * (r / 3.0),
                             cx.y + (b - 3) * (r / 3.0)},
                            th * (0.9 * c / 4.0)};
          const SubsolutionSample s = field(y);
          pts.push_back(y);
          zs.push_back(s.state);
          const double m = hull_margin(s.state);
          margins.push_back(m);
          pre_min = std::min(pre_min, m);
        }
    const double floor_m = std::max(cfg.margin_floor * pre_min, 0.0);

    std::optional<WaveField> wave;
    double amp = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
      const double a = cfg.amplitude * std::ldexp(1.0, -trial);
      WaveSpec ts = ws;
      ts.direction = zbar * a;
      WaveField cand = time_slab_wave(ts);
      bool good = true;
      for (size_t q = 0; q < pts.size(); ++q) {
        const State z2 = zs[q] + cand(pts[q]);
        const double m2 = hull_margin(z2);
        if (!(m2 > 0.0 && m2 >= floor_m && z2.e < cfg.gamma)) {
          good = false;
          break;
        }
      }
      if (good) {
        amp = a;
        wave = std::move(cand);
        break;
      }
    }
    if (!wave)
      throw StalledIteration(
          "density_stage2: amplitude search exhausted 30 halvings");

    // t = 0 slice integrals over the ball's bounding box (the wave
    // vanishes outside the ball).  Resolution tracks the frequency.
    const int nq = std::clamp(
        static_cast<int>(std::ceil(16.0 * out.frequency * r)), 64, 2048);
    const double step = 2.0 * r / nq;
    const double cell_area = step * step;
    double mass = 0.0, vmass = 0.0, eint = 0.0;
    for (int qb = 0; qb < nq; ++qb)
      for (int qa = 0; qa < nq; ++qa) {
        const Vec2 x{cx.x - r + (qa + 0.5) * step,
                     cx.y - r + (qb + 0.5) * step};
        const State z = (*wave)({x, 0.0});
        mass += norm2(z) * cell_area;
        vmass += norm2(z.v) * cell_area;
        eint += z.e * cell_area;
      }

    DensityBall ball;
    ball.center = cx;
    ball.radius = r;
    const double dd =
        dist_to_K(s0.state, s0.pressure, cfg.gamma, DistMode::kOracle).dist;
    ball.dist2 = dd * dd;
    ball.mass = mass;
    ball.v_mass = vmass;
    ball.e_integral = eint;
    ball.constant = mass / (kPi * r * r * std::max(ball.dist2, 1e-300));
    ball.amplitude = amp;
    out.balls.push_back(ball);
    out.waves.push_back(std::move(*wave));
    out.slice_mass += mass;
    out.slice_v_mass += vmass;
    out.slice_e_integral += eint;
  }

  if (!out.balls.empty()) {
    out.min_constant = 1e300;
    out.max_constant = -1e300;
    for (const DensityBall& b : out.balls) {
      out.min_constant = std::min(out.min_constant, b.constant);
      out.max_constant = std::max(out.max_constant, b.constant);
    }
  }
  return out;
}

inline Stage2Result density_stage2(const SubsolutionField& field, int j,
                                   const Stage2Config& cfg = {}) {
  return density_stage2(
      std::function<SubsolutionSample(const SpaceTime&)>(
          [&field](const SpaceTime& y) { return field(y); }),
      j, cfg);
}

// ---------------------------------------------------------------------------
// Density scheme, step 3: staged recursion toward the constraint set

struct Stage3Config {
  double gamma = 16.0;
  double shrink = 0.5;
  double amplitude = 0.35;  // stage-0 direction scale, halved per stage
  double ball_radius = 0.11;
  double cutoff_margin = 0.3;
  int candidates = 32;
  int frequency_floor = 8;
  int frequency_per_j = 4;
  double slab_fraction = 0.9;
  int slice_resolution = 128;  // t = 0 trace quadrature lattice
  int samples = 256;           // step-1 mollifier resolution
  double horizon = 1.0;
  int max_j_doublings = 16;  // support lifetimes tried: 1/2, 1/4, ... 2^-16
};

struct StageRecord {
  int stage = 0;
  int j = 0;
  int frequency = 0;
  int balls = 0;
  double amplitude = 0.0;
  double z_step2 = 0.0;   // squared t = 0 full-state change
  double w_step2 = 0.0;   // squared t = 0 velocity change
  double w_norm2 = 0.0;   // squared velocity trace before the stage
  double f_change = 0.0;  // signed energy-trace change
  double nu = 0.0;        // energy-margin integral before the stage
  double slack_z = 0.0;   // 18 nu + 2^-k       - z_step2,    >= 0 accepted
  double slack_w = 0.0;   // 18 nu + nu0 2^-k   - w_step2,    >= 0 accepted
  double slack_f = 0.0;   // nu0 2^-k           - |f_change|, >= 0 accepted
  double support_bound = 0.0;  // this stage's waves vanish for t >= 1/j
};

struct DensityStageLog {
  double delta = 0.0;
  double nu0 = 0.0;  // stage-0 margin integral; equals delta by construction
  Stage1Result stage1;
  std::vector<StageRecord> stages;
  std::vector<WaveField> waves;  // all accepted waves, in stage order
  double w_distance2 = 0.0;  // squared distance of the final velocity trace
                             // to the unmollified input data
  double bound = 0.0;        // 20 delta
  double tail = 0.0;         // 2^(2-K) schedule allowance
  bool bound_holds = false;
};

// Runs K packing stages on top of the mollified subsolution.  Stage k uses
// direction scale amplitude * 2^-k and searches the support lifetime j
// over 2, 4, ... until three trace inequalities hold simultaneously:
// the full-state and velocity changes at t = 0 stay within 18 nu (plus a
// geometric allowance), and the energy-trace shift decays like nu0 * 2^-k.
// The last one is the j-sensitive bound: the energy component of a wave
// integrates to an oscillatory remainder that shrinks as its frequency
// grows with j.  Exhausting the j schedule throws
// StageInequalityUnsatisfiable.
inline DensityStageLog density_stage3(
    const std::function<double(double)>& shear, double delta,
    const std::function<double(const SpaceTime&)>& mu, int K,
    const Stage3Config& cfg = {}) {
  using dridetail::require;
  require(K >= 1, "density_stage3: K must be at least 1");
  require(cfg.slice_resolution >= 16,
          "density_stage3: slice_resolution too small");
  require(cfg.max_j_doublings >= 1 && cfg.max_j_doublings <= 30,
          "density_stage3: max_j_doublings must lie in [1, 30]");

  Stage1Result s1 = density_stage1(shear, delta, mu, cfg.horizon, cfg.samples);

  std::vector<WaveField> waves;
  const SubsolutionField& base_field = s1.field;
  auto composite = [&base_field, &waves](const SpaceTime& y) {
    SubsolutionSample s = base_field(y);
    for (const WaveField& w : waves) s.state += w(y);
    return s;
  };
  const std::function<SubsolutionSample(const SpaceTime&)> composite_fn =
      composite;

  const int ns = cfg.slice_resolution;
  auto traces = [&]() {
    double nu = 0.0, wnorm = 0.0;
    for (int b = 0; b < ns; ++b)
      for (int a = 0; a < ns; ++a) {
        const Vec2 x{-0.5 + (a + 0.5) / ns, -0.5 + (b + 0.5) / ns};
        const SubsolutionSample s = composite({x, 0.0});
        nu += s.state.e - 0.5 * norm2(s.state.v);
        wnorm += norm2(s.state.v);
      }
    const double da = 1.0 / (static_cast<double>(ns) * ns);
    return std::pair<double, double>{nu * da, wnorm * da};
  };

  const double nu0 = traces().first;
  std::vector<StageRecord> records;

  for (int k = 0; k < K; ++k) {
    const auto [nu_k, wn_k] = traces();
    const double sched = std::ldexp(1.0, -k);

    Stage2Config c2;
    c2.gamma = cfg.gamma;
    c2.shrink = cfg.shrink;
    c2.amplitude = cfg.amplitude * sched;
    c2.ball_radius = cfg.ball_radius;
    c2.cutoff_margin = cfg.cutoff_margin;
    c2.candidates = cfg.candidates;
    c2.frequency_floor = cfg.frequency_floor;
    c2.frequency_per_j = cfg.frequency_per_j;
    c2.slab_fraction = cfg.slab_fraction;

    bool advanced = false;
    for (int lvl = 1; lvl <= cfg.max_j_doublings; ++lvl) {
      const int j = 1 << lvl;
      Stage2Result s2 = density_stage2(composite_fn, j, c2);
      const double slack_z = 18.0 * nu_k + sched - s2.slice_mass;
      const double slack_w = 18.0 * nu_k + nu0 * sched - s2.slice_v_mass;
      const double slack_f = nu0 * sched - std::abs(s2.slice_e_integral);
      if (slack_z >= 0.0 && slack_w >= 0.0 && slack_f >= 0.0) {
        StageRecord rec;
        rec.stage = k;
        rec.j = j;
        rec.frequency = s2.frequency;
        rec.balls = static_cast<int>(s2.balls.size());
        rec.amplitude = c2.amplitude;
        rec.z_step2 = s2.slice_mass;
        rec.w_step2 = s2.slice_v_mass;
        rec.w_norm2 = wn_k;
        rec.f_change = s2.slice_e_integral;
        rec.nu = nu_k;
        rec.slack_z = slack_z;
        rec.slack_w = slack_w;
        rec.slack_f = slack_f;
        rec.support_bound = s2.support_bound;
        records.push_back(rec);
        for (WaveField& w : s2.waves) waves.push_back(std::move(w));
        advanced = true;
        break;
      }
    }
    if (!advanced)
      throw StageInequalityUnsatisfiable(
          "density_stage3: no admissible support lifetime for stage " +
          std::to_string(k));
  }

  // Distance of the final velocity trace to the unmollified input data.
  double w_d2 = 0.0;
  for (int b = 0; b < ns; ++b)
    for (int a = 0; a < ns; ++a) {
      const Vec2 x{-0.5 + (a + 0.5) / ns, -0.5 + (b + 0.5) / ns};
      const SubsolutionSample s = composite({x, 0.0});
      const Vec2 dv{s.state.v.x - shear(x.y), s.state.v.y};
      w_d2 += norm2(dv);
    }
  w_d2 /= static_cast<double>(ns) * ns;

  const double bound = 20.0 * delta;
  const double tail = std::ldexp(4.0, -K);
  DensityStageLog log{delta,
                      nu0,
                      std::move(s1),
                      std::move(records),
                      std::move(waves),
                      w_d2,
                      bound,
                      tail,
                      w_d2 <= bound + tail};
  return log;
}

}  // namespace eulerci
