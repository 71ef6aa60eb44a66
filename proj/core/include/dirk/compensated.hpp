#pragma once

#include <cmath>
#include <cstddef>

namespace dirk {

/// Dot product in twice the working precision (Ogita-Rump-Oishi Dot2).
/// Elementary weights at order 8 mix terms up to D^8 that cancel to ~1e-6.
template <class X, class Y>
double dot2(const X& x, const Y& y, std::size_t n) {
  double sum = 0.0;
  double err = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = x[k] * y[k];
    const double pe = std::fma(x[k], y[k], -p);
    const double t = sum + p;
    const double z = t - sum;
    err += ((sum - (t - z)) + (p - z)) + pe;
    sum = t;
  }
  return sum + err;
}

}  // namespace dirk
