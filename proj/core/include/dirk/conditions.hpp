#pragma once

#include "dirk/tableau.hpp"
#include "dirk/trees.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

namespace dirk {

/// Phi(t): all-ones for a single vertex, otherwise the componentwise product
/// over children of A * Phi(child).
Eigen::VectorXd elementary_weights(const ButcherTableau& t, const RootedTree& tree);

/// (b^T Phi(tree) - 1/gamma(tree)) / sigma(tree).
double residual(const ButcherTableau& t, const RootedTree& tree);

/// Same residual without the 1/sigma factor.
double unweighted_residual(const ButcherTableau& t, const RootedTree& tree);

/// Residuals of every tree of order q, in enumeration order.
std::vector<double> residuals_of_order(const ButcherTableau& t, int q, bool sigma_weighted = true);

/// Residuals of every tree of order 1..p stacked in enumeration order.
std::vector<double> stacked_residuals(const ButcherTableau& t, int p);

inline constexpr double kDefaultOrderTolerance = 5e-13;
/// Stage-order residuals involve only degree-k products of A; anything above
/// rounding level is a genuine defect. DIRK(8,6)SA misses C(2) by a11^2/2 ~ 3.4e-13.
inline constexpr double kDefaultStageOrderTolerance = 1e-14;

struct VerifyOptions {
  double tolerance = kDefaultOrderTolerance;
  double stage_tolerance = kDefaultStageOrderTolerance;
};

struct ErrorNorms {
  int order = 0;
  double l2 = 0.0;
  double linf = 0.0;
  /// The same norms without the 1/sigma weighting.
  double l2_unweighted = 0.0;
  double linf_unweighted = 0.0;
};

struct OrderReport {
  std::string scheme;
  int declared_order = 0;
  int achieved_order = 0;
  int stage_order = 0;
  /// Residuals for every evaluated order (declared + 2, capped at 10), per tree.
  std::map<int, std::vector<double>> residuals;
  /// max_i |(A c^{k-1})_i - c_i^k / k| for k = 1, 2, ...
  std::vector<double> stage_residuals;
  /// Orders p+1 and p+2 where they fit under the order-10 cap.
  std::vector<ErrorNorms> error_norms;
  double max_coefficient = 0.0;  // D
  double tolerance_used = 0.0;
  double stage_tolerance_used = 0.0;

  /// Largest |residual| over orders 1..q.
  double max_residual_through(int q) const;
  const ErrorNorms* norms_at(int order) const;
};

OrderReport verify_order(const ButcherTableau& t, const VerifyOptions& options = {});

/// max over |a_ij|, |b_i|, |c_i|.
double max_coefficient(const ButcherTableau& t);

/// Largest r with max_i |(A c^{k-1})_i - c_i^k/k| <= tol for k = 1..r.
int stage_order(const ButcherTableau& t, double tol = kDefaultStageOrderTolerance);

void write_report(std::ostream& os, const OrderReport& report);
/// Header "order,tree_index,residual"; one row per evaluated tree.
void write_residual_csv(std::ostream& os, const OrderReport& report);

}  // namespace dirk
