#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "eulerci/types.hpp"

// Self-contained power-of-two FFT, sized for the torus grids used here
// (spectral pressure solves at up to a few hundred points per axis).

namespace eulerci {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 transform.  Forward uses the e^{-i 2 pi k n / N}
// convention; the inverse conjugates the twiddles and divides by N, so
// fft(a, false) followed by fft(a, true) is the identity up to rounding.
inline void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const int n = static_cast<int>(a.size());
  if (!is_power_of_two(n))
    throw PreconditionViolated("fft: length must be a power of two");

  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  constexpr double two_pi = 6.28318530717958647692;
  for (int len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? two_pi : -two_pi) / len;
    const std::complex<double> step(std::cos(angle), std::sin(angle));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= step;
      }
    }
  }
  if (inverse)
    for (auto& value : a) value /= static_cast<double>(n);
}

// 2D transform of a row-major nx-by-ny array (index j*nx + i, i fastest):
// rows first, then columns through a gather/scatter buffer.
inline void fft_2d(std::vector<std::complex<double>>& a, int nx, int ny,
                   bool inverse) {
  if (static_cast<long>(nx) * ny != static_cast<long>(a.size()))
    throw PreconditionViolated("fft_2d: size mismatch");
  std::vector<std::complex<double>> row(nx), col(ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) row[i] = a[static_cast<long>(j) * nx + i];
    fft(row, inverse);
    for (int i = 0; i < nx; ++i) a[static_cast<long>(j) * nx + i] = row[i];
  }
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) col[j] = a[static_cast<long>(j) * nx + i];
    fft(col, inverse);
    for (int j = 0; j < ny; ++j) a[static_cast<long>(j) * nx + i] = col[j];
  }
}

// Signed integer frequency for index i of an n-point transform.
inline int fft_frequency(int i, int n) { return i <= n / 2 ? i : i - n; }

}  // namespace eulerci
