#pragma once

#include "dirk/polynomial.hpp"
#include "dirk/tableau.hpp"

#include <complex>
#include <iosfwd>
#include <vector>

namespace dirk {

/// R(z) = P(z) / Q(z), coefficients in ascending powers of z.
struct StabilityPolynomials {
  Poly<double> p;
  Poly<double> q;
};

/// Snap threshold. For DIRK tableaus a P coefficient is zeroed when it falls below
/// this fraction of the summed magnitudes of its contributing terms; Q is a plain
/// product and is kept. Interpolated P and Q are cut relative to their largest coefficient.
inline constexpr double kCoefficientSnap = 1e-14;

/// For DIRK tableaus, Q is the product of (1 - a_ii z) and P follows from
/// forward substitution carried out in polynomial arithmetic. Anything else goes
/// through stability_polynomials_interpolated().
StabilityPolynomials stability_polynomials(const ButcherTableau& t);

/// P and Q by sampling det(I - zA) and R(z) det(I - zA) at s+1 Chebyshev points on
/// [-2, 2] (moved off poles) and interpolating. Works for any tableau.
StabilityPolynomials stability_polynomials_interpolated(const ButcherTableau& t);

/// 1 + z b^T (I - zA)^{-1} e, by a direct linear solve.
std::complex<double> stability_function(const ButcherTableau& t, std::complex<double> z);

/// P(z)/Q(z).
std::complex<double> evaluate(const StabilityPolynomials& pq, std::complex<double> z);

/// Coefficients of E(w) = |Q(iy)|^2 - |P(iy)|^2 as a polynomial in w = y^2.
/// Coefficients at rounding level relative to their summands are set to zero.
Poly<double> e_polynomial(const StabilityPolynomials& pq);

/// |Q(iy)|^2 - |P(iy)|^2 evaluated directly.
double e_direct(const StabilityPolynomials& pq, double y);

struct AStabilityVerdict {
  bool a_stable = false;
  Poly<double> e_coeffs;
  /// tau_E = 1e-9 * max |E coefficient|.
  double tolerance = 0.0;
  /// Minimum of E over the log-spaced scan of w.
  double min_e_scan = 0.0;
  double argmin_w = 0.0;
  /// Most negative E in the neighbourhood of a real nonnegative root (0 if none).
  double worst_root_defect = 0.0;
  std::vector<double> nonnegative_roots;
  /// Roots across which E changes sign by more than tau_E.
  int odd_multiplicity_roots = 0;
  /// Sign checks on the lowest and highest significant coefficients.
  bool small_w_ok = true;
  bool large_w_ok = true;

  /// min(min_e_scan, worst_root_defect); >= -tolerance when A-stable.
  double margin() const { return std::min(min_e_scan, worst_root_defect); }
};

/// Throws DegenerateStabilityFunction if a root of P lies within 1e-10 (relative to
/// max(1, |z|)) of a root of Q.
void check_nondegenerate(const StabilityPolynomials& pq);

AStabilityVerdict a_stability_check(const StabilityPolynomials& pq);
inline AStabilityVerdict a_stability_check(const ButcherTableau& t) {
  return a_stability_check(stability_polynomials(t));
}

struct LStabilityResult {
  double r_infinity = 0.0;
  bool l_stable = false;
};

/// R(inf) = 1 - b^T A^{-1} e. For lower-triangular A the row vector b^T A^{-1} is
/// formed by back substitution, which is exact for stiffly accurate tableaus.
/// Singular A falls back to the leading-coefficient ratio of P/Q.
double r_at_infinity(const ButcherTableau& t);
LStabilityResult l_stability_check(const ButcherTableau& t);

struct InternalStability {
  double max_r = 0.0;  // max_{j,y} |R_j(iy)|
  double max_q = 0.0;  // max_{j,y} |Q_j(iy)|
  int argmax_r_stage = 0;
  int argmax_q_stage = 0;
  double argmax_r_y = 0.0;
  double argmax_q_y = 0.0;
};

/// R_j(z) = [(I - zA)^{-1} e]_j.
std::vector<std::complex<double>> internal_r(const ButcherTableau& t, std::complex<double> z);
/// Q_j(z) = [b^T (I - zA)^{-1}]_j.
std::vector<std::complex<double>> internal_q(const ButcherTableau& t, std::complex<double> z);

/// Log-spaced scan of y in [1e-6, 1e8] at 2000 points per decade, plus y = 0,
/// followed by golden-section refinement around the scan maxima. Requires a DIRK
/// tableau with nonzero diagonal (UnsupportedError otherwise).
InternalStability internal_stability_maxima(const ButcherTableau& t);

struct EConsistency {
  /// taylor_defect[k] = 1/k! - r_k for k = 0..n_terms-1.
  std::vector<double> taylor_defect;
  int order = 0;
};

inline constexpr double kEConsistencyTolerance = 1e-13;

/// Taylor coefficients of P/Q by power-series division in 113-bit arithmetic.
EConsistency e_consistency(const ButcherTableau& t, int n_terms = 20);

/// exp(z) - R(z).
std::complex<double> e_consistency_error(const ButcherTableau& t, std::complex<double> z);

struct StabilityReport {
  StabilityPolynomials pq;
  AStabilityVerdict a_stability;
  LStabilityResult l_stability;
  int e_consistency_order = 0;
  /// Present only for DIRK tableaus with nonzero diagonal.
  bool has_internal = false;
  InternalStability internal;
};

StabilityReport analyze_stability(const ButcherTableau& t);

void write_report(std::ostream& os, const StabilityReport& report);

enum class PlotKind {
  ModulusImaginaryAxis,  // y, |R(iy)|
  EPolynomial,           // w, E(w)
  EConsistencyReal,      // x, |eps(x)|
  EConsistencyImaginary  // y, |eps(iy)|
};

struct PlotRange {
  double lo = 1e-3;
  double hi = 1e3;
  int points = 601;
  bool log_spaced = true;
};

/// CSV with a two-column header matching the PlotKind comments.
void write_stability_plot(std::ostream& os, const ButcherTableau& t, PlotKind kind, const PlotRange& range = {});

}  // namespace dirk
