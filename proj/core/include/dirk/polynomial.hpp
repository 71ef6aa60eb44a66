#pragma once

#include <algorithm>
#include <complex>
#include <vector>

namespace dirk {

/// Dense polynomial, coefficients in ascending powers.
template <class T>
using Poly = std::vector<T>;

template <class T>
Poly<T> poly_mul(const Poly<T>& x, const Poly<T>& y) {
  if (x.empty() || y.empty()) return {};
  Poly<T> out(x.size() + y.size() - 1, T(0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  }
  return out;
}

template <class T>
Poly<T> poly_add(const Poly<T>& x, const Poly<T>& y) {
  Poly<T> out(std::max(x.size(), y.size()), T(0));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += x[i];
  for (std::size_t i = 0; i < y.size(); ++i) out[i] += y[i];
  return out;
}

template <class T, class S>
Poly<T> poly_scale(Poly<T> x, const S& factor) {
  for (auto& v : x) v *= factor;
  return x;
}

/// z * x(z)
template <class T>
Poly<T> poly_shift(const Poly<T>& x) {
  Poly<T> out(x.size() + 1, T(0));
  std::copy(x.begin(), x.end(), out.begin() + 1);
  return out;
}

template <class T, class Z>
Z poly_eval(const Poly<T>& p, Z z) {
  Z acc(0);
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * z + Z(*it);
  return acc;
}

/// Index of the highest nonzero coefficient, or -1 for the zero polynomial.
template <class T>
int poly_degree(const Poly<T>& p) {
  for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k) {
    if (p[k] != T(0)) return k;
  }
  return -1;
}

}  // namespace dirk
