#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "eulerci/types.hpp"

// Uniform midpoint lattices on the torus [-1/2, 1/2)^2 cross a time window,
// and state fields stored on them.  Midpoint placement keeps every node off
// the wrap seam x = +-1/2 and off the t-window endpoints, which is where
// the closed-form fields carry their stationary discontinuities.

namespace eulerci {

struct TorusGrid {
  int nx = 32;
  int ny = 32;
  int nt = 16;
  double t0 = 0.0;
  double t1 = 1.0;

  double dx() const { return 1.0 / nx; }
  double dy() const { return 1.0 / ny; }
  double dt() const { return (t1 - t0) / nt; }

  Vec2 x_node(int i, int j) const {
    return {-0.5 + (i + 0.5) * dx(), -0.5 + (j + 0.5) * dy()};
  }
  double t_node(int k) const { return t0 + (k + 0.5) * dt(); }
  SpaceTime node(int i, int j, int k) const { return {x_node(i, j), t_node(k)}; }

  long cells() const { return static_cast<long>(nx) * ny * nt; }
  long index(int i, int j, int k) const {
    return (static_cast<long>(k) * ny + j) * nx + i;
  }

  void validate() const {
    if (nx <= 0 || ny <= 0 || nt <= 0 || !(t1 > t0))
      throw PreconditionViolated("TorusGrid: positive extents required");
  }

  // Nearest lattice indices for an arbitrary point (coordinates wrapped,
  // time clamped to the window).
  int i_of(double x1) const {
    const double u = x1 - std::floor(x1 + 0.5);  // [-1/2, 1/2)
    int i = static_cast<int>(std::floor((u + 0.5) * nx));
    return std::min(std::max(i, 0), nx - 1);
  }
  int j_of(double x2) const {
    const double u = x2 - std::floor(x2 + 0.5);
    int j = static_cast<int>(std::floor((u + 0.5) * ny));
    return std::min(std::max(j, 0), ny - 1);
  }
  int k_of(double t) const {
    int k = static_cast<int>(std::floor((t - t0) / dt()));
    return std::min(std::max(k, 0), nt - 1);
  }
};

// State tuple sampled on every lattice node.
struct StateField {
  TorusGrid grid;
  std::vector<State> values;

  explicit StateField(const TorusGrid& g) : grid(g) {
    grid.validate();
    values.resize(static_cast<size_t>(grid.cells()));
  }

  State& at(int i, int j, int k) {
    return values[static_cast<size_t>(grid.index(i, j, k))];
  }
  const State& at(int i, int j, int k) const {
    return values[static_cast<size_t>(grid.index(i, j, k))];
  }

  // Nearest-node lookup for off-lattice queries.
  const State& nearest(const SpaceTime& y) const {
    return at(grid.i_of(y.x.x), grid.j_of(y.x.y), grid.k_of(y.t));
  }
};

// Fill a field by sampling an evaluator at every node.
template <typename F>
StateField sample_field(const TorusGrid& grid, F&& evaluator) {
  StateField field(grid);
  for (int k = 0; k < grid.nt; ++k)
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        field.at(i, j, k) = evaluator(grid.node(i, j, k));
  return field;
}

// CSV dump, one row per node, deterministic %.17g formatting.
inline void write_state_csv(std::ostream& out, const StateField& field) {
  out << "x1,x2,t,v1,v2,m1,m2,sigma_a,sigma_b,e\n";
  char line[512];
  const TorusGrid& g = field.grid;
  for (int k = 0; k < g.nt; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const SpaceTime y = g.node(i, j, k);
        const State& z = field.at(i, j, k);
        std::snprintf(line, sizeof line,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g\n",
                      y.x.x, y.x.y, y.t, z.v.x, z.v.y, z.m.x, z.m.y, z.s.a,
                      z.s.b, z.e);
        out << line;
      }
}

}  // namespace eulerci
