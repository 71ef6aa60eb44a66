#include "dirk/stability.hpp"

#include "dirk/error.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

namespace dirk {

namespace {

using cd = std::complex<double>;
using Quad = boost::multiprecision::cpp_bin_float_quad;

bool lower_triangular(const ButcherTableau& t) { return t.flags().is_dirk; }

bool nonzero_diagonal(const ButcherTableau& t) {
  for (int i = 0; i < t.stages(); ++i) {
    if (t.a(i, i) == 0.0) return false;
  }
  return true;
}

/// P and Q for lower-triangular A. With d_k = 1 - a_kk z and D_i = d_1 ... d_i,
/// the scaled stage values N_i = u_i D_i satisfy
///   N_i = D_{i-1} + z sum_{j<i} a_ij N_j d_{j+1} ... d_{i-1},
/// and P = D_s + z sum_i b_i N_i d_{i+1} ... d_s, Q = D_s.
/// With magnitude set, every coefficient enters by absolute value, so the
/// result bounds the size of the terms summed into each coefficient.
template <class T>
std::pair<Poly<T>, Poly<T>> triangular_pq(const ButcherTableau& t, bool magnitude = false) {
  const int s = t.stages();
  auto coef = [&](double v) { return magnitude ? T(std::abs(v)) : T(v); };
  std::vector<Poly<T>> d(s);
  for (int k = 0; k < s; ++k) d[k] = {T(1), magnitude ? T(std::abs(t.a(k, k))) : -T(t.a(k, k))};

  std::vector<Poly<T>> n(s);
  Poly<T> prefix{T(1)};  // D_{i-1}
  for (int i = 0; i < s; ++i) {
    Poly<T> acc;
    Poly<T> between{T(1)};  // d_{j+1} ... d_{i-1}
    for (int j = i - 1; j >= 0; --j) {
      if (t.a(i, j) != 0.0) acc = poly_add(acc, poly_scale(poly_mul(n[j], between), coef(t.a(i, j))));
      between = poly_mul(between, d[j]);
    }
    n[i] = poly_add(prefix, poly_shift(acc));
    prefix = poly_mul(prefix, d[i]);
  }

  Poly<T> sum;
  Poly<T> tail{T(1)};  // d_{i+1} ... d_s
  for (int i = s - 1; i >= 0; --i) {
    if (t.b()(i) != 0.0) sum = poly_add(sum, poly_scale(poly_mul(n[i], tail), coef(t.b()(i))));
    tail = poly_mul(tail, d[i]);
  }
  Poly<T> p = poly_add(prefix, poly_shift(sum));
  Poly<T> q = prefix;
  p.resize(s + 1, T(0));
  q.resize(s + 1, T(0));
  return {p, q};
}

void snap(Poly<double>& p, double rel) {
  double m = 0.0;
  for (double v : p) m = std::max(m, std::abs(v));
  for (double& v : p) {
    if (std::abs(v) < rel * m) v = 0.0;
  }
}

Eigen::MatrixXcd stage_matrix(const ButcherTableau& t, cd z) {
  const int s = t.stages();
  return Eigen::MatrixXcd::Identity(s, s) - z * t.A().cast<cd>();
}

/// Roots of a real polynomial via the eigenvalues of its companion matrix.
std::vector<cd> poly_roots(const Poly<double>& p) {
  const int deg = poly_degree(p);
  if (deg < 1) return {};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int k = 1; k < deg; ++k) comp(k, k - 1) = 1.0;
  for (int k = 0; k < deg; ++k) comp(k, deg - 1) = -p[k] / p[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<cd> out;
  for (int k = 0; k < deg; ++k) out.push_back(es.eigenvalues()(k));
  return out;
}

}  // namespace

StabilityPolynomials stability_polynomials(const ButcherTableau& t) {
  if (!lower_triangular(t)) return stability_polynomials_interpolated(t);
  // P cancels heavily, so the recursion runs in quad. A coefficient is snapped
  // when it is tiny next to the terms that produced it; a cut relative to the
  // largest coefficient would drop genuine high-degree terms.
  const auto [pw, qw] = triangular_pq<Quad>(t);
  const auto bound = triangular_pq<Quad>(t, true).first;
  Poly<double> p;
  Poly<double> q;
  for (std::size_t k = 0; k < pw.size(); ++k) {
    const bool noise = abs(pw[k]) < kCoefficientSnap * bound[k];
    p.push_back(noise ? 0.0 : static_cast<double>(pw[k]));
  }
  for (const auto& c : qw) q.push_back(static_cast<double>(c));
  return {p, q};
}

StabilityPolynomials stability_polynomials_interpolated(const ButcherTableau& t) {
  const int s = t.stages();
  const int n = s + 1;
  // Work in zeta = z / 2 so the Chebyshev nodes sit on [-1, 1].
  Eigen::MatrixXd vander(n, n);
  Eigen::VectorXd pvals(n);
  Eigen::VectorXd qvals(n);
  for (int k = 0; k < n; ++k) {
    double zeta = std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * n));
    double z = 2.0 * zeta;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    for (int attempt = 0;; ++attempt) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Identity(s, s) - z * t.A();
      lu.compute(m);
      if (std::abs(lu.determinant()) > 1e-8 || attempt > 20) break;
      // Sample sits on (or next to) a pole: nudge it.
      zeta += 1e-3 * (attempt + 1) * (zeta > 0 ? -1.0 : 1.0);
      z = 2.0 * zeta;
    }
    const double det = lu.determinant();
    const Eigen::VectorXd x = lu.solve(Eigen::VectorXd::Ones(s));
    const double r = 1.0 + z * t.b().dot(x);
    qvals(k) = det;
    pvals(k) = r * det;
    double pw = 1.0;
    for (int j = 0; j < n; ++j, pw *= zeta) vander(k, j) = pw;
  }
  const auto qr = vander.colPivHouseholderQr();
  const Eigen::VectorXd pc = qr.solve(pvals);
  const Eigen::VectorXd qc = qr.solve(qvals);
  StabilityPolynomials out;
  out.p.resize(n);
  out.q.resize(n);
  double scale = 1.0;
  for (int j = 0; j < n; ++j, scale *= 0.5) {
    out.p[j] = pc(j) * scale;
    out.q[j] = qc(j) * scale;
  }
  snap(out.p, kCoefficientSnap);
  snap(out.q, kCoefficientSnap);
  return out;
}

std::complex<double> stability_function(const ButcherTableau& t, std::complex<double> z) {
  const int s = t.stages();
  const Eigen::VectorXcd x = stage_matrix(t, z).partialPivLu().solve(Eigen::VectorXcd::Ones(s));
  return 1.0 + z * (t.b().cast<cd>().transpose() * x)(0);
}

std::complex<double> evaluate(const StabilityPolynomials& pq, std::complex<double> z) {
  return poly_eval(pq.p, z) / poly_eval(pq.q, z);
}

Poly<double> e_polynomial(const StabilityPolynomials& pq) {
  const int np = static_cast<int>(pq.p.size());
  const int nq = static_cast<int>(pq.q.size());
  const int deg = std::max(np, nq) - 1;
  auto coef = [](const Poly<double>& x, int i) { return i < static_cast<int>(x.size()) ? x[i] : 0.0; };
  Poly<double> e(deg + 1, 0.0);
  for (int k = 0; k <= deg; ++k) {
    double sum = 0.0;
    double mag = 0.0;
    for (int i = 0; i <= 2 * k; ++i) {
      const int j = 2 * k - i;
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      const double qq = coef(pq.q, i) * coef(pq.q, j);
      const double pp = coef(pq.p, i) * coef(pq.p, j);
      sum += sign * (qq - pp);
      mag += std::abs(qq) + std::abs(pp);
    }
    e[k] = (k % 2 == 0) ? sum : -sum;
    if (std::abs(e[k]) <= 64.0 * std::numeric_limits<double>::epsilon() * mag) e[k] = 0.0;
  }
  return e;
}

double e_direct(const StabilityPolynomials& pq, double y) {
  const cd iy(0.0, y);
  return std::norm(poly_eval(pq.q, iy)) - std::norm(poly_eval(pq.p, iy));
}

void check_nondegenerate(const StabilityPolynomials& pq) {
  // Distance between roots of P and Q; Newton-polished P roots keep multiple roots of Q
  // (repeated diagonal entries) from confusing the comparison.
  Poly<double> dp;
  for (std::size_t k = 1; k < pq.p.size(); ++k) dp.push_back(static_cast<double>(k) * pq.p[k]);
  std::vector<cd> p_roots = poly_roots(pq.p);
  for (cd& r : p_roots) {
    for (int it = 0; it < 3; ++it) {
      const cd d = poly_eval(dp, r);
      if (d == 0.0) break;
      r -= poly_eval(pq.p, r) / d;
    }
  }
  for (const cd rq : poly_roots(pq.q)) {
    for (const cd rp : p_roots) {
      if (std::abs(rp - rq) <= 1e-10 * std::max(1.0, std::abs(rq))) {
        throw DegenerateStabilityFunction("P and Q share the root z = " + std::to_string(rq.real()) +
                                          (rq.imag() != 0.0 ? " + " + std::to_string(rq.imag()) + "i" : ""));
      }
    }
  }
}

AStabilityVerdict a_stability_check(const StabilityPolynomials& pq) {
  check_nondegenerate(pq);
  AStabilityVerdict v;
  v.e_coeffs = e_polynomial(pq);
  const auto& e = v.e_coeffs;

  double maxabs = 0.0;
  for (double c : e) maxabs = std::max(maxabs, std::abs(c));
  v.tolerance = 1e-9 * maxabs;
  if (maxabs == 0.0) {
    // |R(iy)| = 1 identically.
    v.a_stable = true;
    return v;
  }
  const double tol = v.tolerance;

  // Dense scan of w in [1e-8, 1e16].
  constexpr int kPerDecade = 200;
  v.min_e_scan = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 24 * kPerDecade; ++k) {
    const double w = std::pow(10.0, -8.0 + static_cast<double>(k) / kPerDecade);
    const double ew = poly_eval(e, w);
    if (ew < v.min_e_scan) {
      v.min_e_scan = ew;
      v.argmin_w = w;
    }
  }

  int lo = 0;
  while (lo < static_cast<int>(e.size()) && e[lo] == 0.0) ++lo;
  const int hi = poly_degree(e);

  // w -> 0: E ~ e_lo w^lo. A negative leading term is tolerated only while it stays
  // inside tau_E on all of [0, 1e-8].
  if (e[lo] < 0.0) {
    double bound = 0.0;
    for (int k = lo; k <= hi; ++k) bound += std::abs(e[k]) * std::pow(1e-8, k);
    v.small_w_ok = bound <= tol;
  }
  // w -> infinity.
  v.large_w_ok = e[hi] > 0.0;

  // Real positive roots of E(w) / w^lo.
  Poly<double> reduced(e.begin() + lo, e.begin() + hi + 1);
  for (const cd r : poly_roots(reduced)) {
    if (r.real() <= 0.0 || std::abs(r.imag()) > 1e-6 * std::max(1.0, std::abs(r))) continue;
    const double w = r.real();
    v.nonnegative_roots.push_back(w);
    const double left = poly_eval(e, w * (1.0 - 1e-6));
    const double mid = poly_eval(e, w);
    const double right = poly_eval(e, w * (1.0 + 1e-6));
    v.worst_root_defect = std::min({v.worst_root_defect, left, mid, right});
    if ((left < -tol && right > tol) || (left > tol && right < -tol)) ++v.odd_multiplicity_roots;
  }
  std::sort(v.nonnegative_roots.begin(), v.nonnegative_roots.end());

  v.a_stable = v.small_w_ok && v.large_w_ok && v.min_e_scan >= -tol && v.worst_root_defect >= -tol &&
               v.odd_multiplicity_roots == 0;
  return v;
}

double r_at_infinity(const ButcherTableau& t) {
  const int s = t.stages();
  if (lower_triangular(t) && nonzero_diagonal(t)) {
    // x^T = b^T A^{-1}, i.e. A^T x = b, solved from the last stage upwards.
    Eigen::VectorXd x(s);
    for (int i = s - 1; i >= 0; --i) {
      double acc = t.b()(i);
      for (int k = i + 1; k < s; ++k) acc -= t.a(k, i) * x(k);
      x(i) = acc / t.a(i, i);
    }
    double sum = 0.0;
    double comp = 0.0;
    for (int i = 0; i < s; ++i) {
      const double y = x(i) - comp;
      const double tt = sum + y;
      comp = (tt - sum) - y;
      sum = tt;
    }
    return 1.0 - sum;
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(t.A());
  if (lu.isInvertible()) {
    const Eigen::VectorXd x = lu.solve(Eigen::VectorXd::Ones(s));
    return 1.0 - t.b().dot(x);
  }
  const auto pq = stability_polynomials(t);
  const int dp = poly_degree(pq.p);
  const int dq = poly_degree(pq.q);
  if (dp > dq) return std::numeric_limits<double>::infinity();
  if (dp < dq) return 0.0;
  return pq.p[dp] / pq.q[dq];
}

LStabilityResult l_stability_check(const ButcherTableau& t) {
  LStabilityResult r;
  r.r_infinity = r_at_infinity(t);
  const bool a_stable = a_stability_check(stability_polynomials(t)).a_stable;
  r.l_stable = a_stable && std::abs(r.r_infinity) <= 1e-12;
  return r;
}

std::vector<std::complex<double>> internal_r(const ButcherTableau& t, std::complex<double> z) {
  const int s = t.stages();
  std::vector<cd> u(s);
  for (int i = 0; i < s; ++i) {
    cd acc = 0.0;
    for (int j = 0; j < i; ++j) acc += t.a(i, j) * u[j];
    u[i] = (1.0 + z * acc) / (1.0 - z * t.a(i, i));
  }
  return u;
}

std::vector<std::complex<double>> internal_q(const ButcherTableau& t, std::complex<double> z) {
  const int s = t.stages();
  std::vector<cd> x(s);
  for (int j = s - 1; j >= 0; --j) {
    cd acc = 0.0;
    for (int i = j + 1; i < s; ++i) acc += t.a(i, j) * x[i];
    x[j] = (t.b()(j) + z * acc) / (1.0 - z * t.a(j, j));
  }
  return x;
}

namespace {

struct StageMax {
  double value = 0.0;
  double log_y = -std::numeric_limits<double>::infinity();  // -inf encodes y = 0
};

template <class F>
double golden_max(F&& f, double a, double b, double& arg) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  // log10 bracket; 1e-6 relative in y is ~4.3e-7 in log10 y.
  while (b - a > 4e-7) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  arg = f1 > f2 ? x1 : x2;
  return std::max(f1, f2);
}

}  // namespace

InternalStability internal_stability_maxima(const ButcherTableau& t) {
  if (!lower_triangular(t) || !nonzero_diagonal(t)) {
    throw UnsupportedError("internal stability maxima need a DIRK tableau with nonzero diagonal ('" + t.name() +
                           "')");
  }
  const int s = t.stages();
  constexpr double kLogLo = -6.0;
  constexpr double kLogHi = 8.0;
  constexpr int kPerDecade = 2000;
  constexpr int kPoints = static_cast<int>((kLogHi - kLogLo) * kPerDecade) + 1;
  auto log_y_at = [&](int k) { return kLogLo + static_cast<double>(k) / kPerDecade; };

  // R_j and Q_j are conjugate-symmetric in y, so y >= 0 suffices.
  std::vector<StageMax> best_r(s);
  std::vector<StageMax> best_q(s);
  {
    const auto r0 = internal_r(t, 0.0);
    const auto q0 = internal_q(t, 0.0);
    for (int j = 0; j < s; ++j) {
      best_r[j].value = std::abs(r0[j]);
      best_q[j].value = std::abs(q0[j]);
    }
  }
  for (int k = 0; k < kPoints; ++k) {
    const double ly = log_y_at(k);
    const cd z(0.0, std::pow(10.0, ly));
    const auto r = internal_r(t, z);
    const auto q = internal_q(t, z);
    for (int j = 0; j < s; ++j) {
      if (const double v = std::abs(r[j]); v > best_r[j].value) best_r[j] = {v, ly};
      if (const double v = std::abs(q[j]); v > best_q[j].value) best_q[j] = {v, ly};
    }
  }

  auto refine = [&](std::vector<StageMax>& best, bool use_r) {
    for (int j = 0; j < s; ++j) {
      if (!std::isfinite(best[j].log_y)) continue;
      const double step = 1.0 / kPerDecade;
      auto f = [&](double ly) {
        const cd z(0.0, std::pow(10.0, ly));
        return std::abs(use_r ? internal_r(t, z)[j] : internal_q(t, z)[j]);
      };
      double arg = best[j].log_y;
      const double v = golden_max(f, best[j].log_y - step, best[j].log_y + step, arg);
      if (v > best[j].value) best[j] = {v, arg};
    }
  };
  refine(best_r, true);
  refine(best_q, false);

  InternalStability out;
  auto y_of = [](const StageMax& m) { return std::isfinite(m.log_y) ? std::pow(10.0, m.log_y) : 0.0; };
  for (int j = 0; j < s; ++j) {
    if (best_r[j].value > out.max_r) {
      out.max_r = best_r[j].value;
      out.argmax_r_stage = j + 1;
      out.argmax_r_y = y_of(best_r[j]);
    }
    if (best_q[j].value > out.max_q) {
      out.max_q = best_q[j].value;
      out.argmax_q_stage = j + 1;
      out.argmax_q_y = y_of(best_q[j]);
    }
  }
  return out;
}

EConsistency e_consistency(const ButcherTableau& t, int n_terms) {
  if (n_terms < 1 || n_terms > 25) throw RangeError("e-consistency supports 1..25 Taylor terms");
  Poly<Quad> p;
  Poly<Quad> q;
  if (lower_triangular(t)) {
    std::tie(p, q) = triangular_pq<Quad>(t);
  } else {
    const auto pq = stability_polynomials_interpolated(t);
    for (double c : pq.p) p.emplace_back(c);
    for (double c : pq.q) q.emplace_back(c);
  }
  auto coef = [](const Poly<Quad>& x, int k) { return k < static_cast<int>(x.size()) ? x[k] : Quad(0); };

  std::vector<Quad> r(n_terms);
  EConsistency out;
  out.taylor_defect.resize(n_terms);
  Quad factorial = 1;
  for (int k = 0; k < n_terms; ++k) {
    Quad acc = coef(p, k);
    for (int j = 1; j <= k; ++j) acc -= coef(q, j) * r[k - j];
    r[k] = acc / q[0];
    if (k > 0) factorial *= k;
    out.taylor_defect[k] = static_cast<double>(Quad(1) / factorial - r[k]);
  }
  out.order = -1;
  while (out.order + 1 < n_terms && std::abs(out.taylor_defect[out.order + 1]) <= kEConsistencyTolerance) {
    ++out.order;
  }
  return out;
}

std::complex<double> e_consistency_error(const ButcherTableau& t, std::complex<double> z) {
  return std::exp(z) - stability_function(t, z);
}

StabilityReport analyze_stability(const ButcherTableau& t) {
  StabilityReport rep;
  rep.pq = stability_polynomials(t);
  rep.a_stability = a_stability_check(rep.pq);
  rep.l_stability.r_infinity = r_at_infinity(t);
  rep.l_stability.l_stable = rep.a_stability.a_stable && std::abs(rep.l_stability.r_infinity) <= 1e-12;
  rep.e_consistency_order = e_consistency(t, 20).order;
  if (lower_triangular(t) && nonzero_diagonal(t)) {
    rep.has_internal = true;
    rep.internal = internal_stability_maxima(t);
  }
  return rep;
}

void write_report(std::ostream& os, const StabilityReport& r) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(3) << std::scientific;
  os << "deg P = " << poly_degree(r.pq.p) << ", deg Q = " << poly_degree(r.pq.q) << '\n';
  os << "A-stable        " << (r.a_stability.a_stable ? "yes" : "no") << "  (margin " << r.a_stability.margin()
     << ", tau_E " << r.a_stability.tolerance << ", positive real roots of E: " << r.a_stability.nonnegative_roots.size()
     << ")\n";
  os << "R(infinity)     " << r.l_stability.r_infinity << '\n';
  os << "L-stable        " << (r.l_stability.l_stable ? "yes" : "no") << '\n';
  os << "e-consistency   " << r.e_consistency_order << '\n';
  if (r.has_internal) {
    os << std::fixed << std::setprecision(4);
    os << "max |R_j(iy)|   " << r.internal.max_r << "  (stage " << r.internal.argmax_r_stage << ")\n";
    os << "max |Q_j(iy)|   " << r.internal.max_q << "  (stage " << r.internal.argmax_q_stage << ")\n";
  }
  os.flags(flags);
  os.precision(prec);
}

void write_stability_plot(std::ostream& os, const ButcherTableau& t, PlotKind kind, const PlotRange& range) {
  if (range.points < 2 || !(range.hi > range.lo) || (range.log_spaced && range.lo <= 0.0)) {
    throw RangeError("invalid plot range");
  }
  const auto pq = stability_polynomials(t);
  const Poly<double> e = kind == PlotKind::EPolynomial ? e_polynomial(pq) : Poly<double>{};
  const auto prec = os.precision();
  os << std::setprecision(17);
  switch (kind) {
    case PlotKind::ModulusImaginaryAxis: os << "y,abs_R\n"; break;
    case PlotKind::EPolynomial: os << "w,E\n"; break;
    case PlotKind::EConsistencyReal: os << "x,abs_eps\n"; break;
    case PlotKind::EConsistencyImaginary: os << "y,abs_eps\n"; break;
  }
  for (int k = 0; k < range.points; ++k) {
    const double frac = static_cast<double>(k) / (range.points - 1);
    const double x = range.log_spaced
                         ? std::exp(std::log(range.lo) + frac * (std::log(range.hi) - std::log(range.lo)))
                         : range.lo + frac * (range.hi - range.lo);
    double value = 0.0;
    switch (kind) {
      case PlotKind::ModulusImaginaryAxis: value = std::abs(evaluate(pq, cd(0.0, x))); break;
      case PlotKind::EPolynomial: value = poly_eval(e, x); break;
      case PlotKind::EConsistencyReal: value = std::abs(e_consistency_error(t, cd(x, 0.0))); break;
      case PlotKind::EConsistencyImaginary: value = std::abs(e_consistency_error(t, cd(0.0, x))); break;
    }
    os << x << ',' << value << '\n';
  }
  os.precision(prec);
}

}  // namespace dirk
