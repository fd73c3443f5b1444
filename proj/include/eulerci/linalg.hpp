#pragma once

#include <array>
#include <cmath>
#include <utility>

// Small fixed-size dense kernels: a cyclic Jacobi eigensolver for symmetric
// 3x3 matrices and singular values / kernel vectors of 4x3 matrices through
// the normal-equations route.  Inputs here are tiny and well scaled, so the
// squared condition number of A^T A is acceptable; rank decisions downstream
// use relative gaps far above the resulting noise floor.

namespace eulerci::linalg {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat43 = std::array<std::array<double, 3>, 4>;

// Rotation sign helper for Jacobi: never returns zero.
constexpr double sgn0(double x) { return x >= 0.0 ? 1.0 : -1.0; }

struct Eig3 {
  std::array<double, 3> values;                  // ascending
  std::array<std::array<double, 3>, 3> vectors;  // vectors[i] pairs values[i]
};

// Cyclic Jacobi on a symmetric 3x3.  Converges to machine precision in a
// handful of sweeps for these inputs.
inline Eig3 eig_sym3(Mat3 a) {
  std::array<std::array<double, 3>, 3> v = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int sweep = 0; sweep < 32; ++sweep) {
    const double off =
        std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a[p][q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        const double t =
            sgn0(theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double app = a[p][p], aqq = a[q][q];
        a[p][p] = app - t * apq;
        a[q][q] = aqq + t * apq;
        a[p][q] = a[q][p] = 0.0;
        for (int r = 0; r < 3; ++r) {
          if (r == p || r == q) continue;
          const double arp = a[r][p], arq = a[r][q];
          a[r][p] = a[p][r] = c * arp - s * arq;
          a[r][q] = a[q][r] = s * arp + c * arq;
        }
        for (int r = 0; r < 3; ++r) {
          const double vrp = v[r][p], vrq = v[r][q];
          v[r][p] = c * vrp - s * vrq;
          v[r][q] = s * vrp + c * vrq;
        }
      }
    }
  }
  Eig3 out;
  std::array<int, 3> idx = {0, 1, 2};
  const std::array<double, 3> d = {a[0][0], a[1][1], a[2][2]};
  for (int i = 1; i < 3; ++i)
    for (int j = i; j > 0 && d[idx[j]] < d[idx[j - 1]]; --j)
      std::swap(idx[j], idx[j - 1]);
  for (int i = 0; i < 3; ++i) {
    out.values[i] = d[idx[i]];
    for (int r = 0; r < 3; ++r) out.vectors[i][r] = v[r][idx[i]];
  }
  return out;
}

inline Mat3 normal_matrix(const Mat43& a) {
  Mat3 ata{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int r = 0; r < 4; ++r) s += a[r][i] * a[r][j];
      ata[i][j] = s;
    }
  return ata;
}

struct Svd43 {
  std::array<double, 3> singular;              // ascending
  std::array<std::array<double, 3>, 3> right;  // right[i] pairs singular[i]
};

inline Svd43 svd_4x3(const Mat43& a) {
  const Eig3 eig = eig_sym3(normal_matrix(a));
  Svd43 out;
  for (int i = 0; i < 3; ++i) {
    out.singular[i] = std::sqrt(std::max(0.0, eig.values[i]));
    out.right[i] = eig.vectors[i];
  }
  return out;
}

inline std::array<double, 4> apply_4x3(const Mat43& a,
                                       const std::array<double, 3>& x) {
  std::array<double, 4> y{};
  for (int r = 0; r < 4; ++r)
    y[r] = a[r][0] * x[0] + a[r][1] * x[1] + a[r][2] * x[2];
  return y;
}

}  // namespace eulerci::linalg
