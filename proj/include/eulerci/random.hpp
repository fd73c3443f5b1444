#pragma once

#include <cstdint>
#include <random>

#include "eulerci/types.hpp"

// Deterministic random sources.  Raw mt19937_64 output is mapped to doubles
// by hand so that streams are identical across standard libraries; the
// distribution adapters in <random> are not pinned by the standard.

namespace eulerci {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1).
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Vec2 vec2(double lo, double hi) {
    const double a = uniform(lo, hi);
    const double b = uniform(lo, hi);
    return {a, b};
  }

  // State with all seven flattened components uniform in [lo, hi].
  State state_in_box(double lo, double hi) {
    std::array<double, 7> f;
    for (double& c : f) c = uniform(lo, hi);
    return state_from_flat(f);
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace eulerci
