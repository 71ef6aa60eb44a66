#pragma once

#include "dirk/error.hpp"
#include "dirk/stability.hpp"
#include "dirk/tableau.hpp"

#include <iosfwd>
#include <set>
#include <utility>
#include <vector>

namespace dirk {

/// Coefficient position: (i, j) addresses a_ij for i < s and b_j for i == s.
using CoefficientPosition = std::pair<int, int>;

struct RefineSpec {
  /// Conditions of orders 1..target_order are driven to zero. At most 8.
  int target_order = 1;
  /// Lower-triangle and b positions held at their input values. The strict upper
  /// triangle is always fixed.
  std::set<CoefficientPosition> fixed;
  /// b_j = a_sj for every j, with b following the last row of A.
  bool tie_b_to_last_row = false;
  int max_iterations = 100;
  /// Target sup-norm of the stacked residual vector.
  double convergence_tol = 5e-13;
};

/// Declared order, every exact zero of the lower triangle and b held fixed, and b tied to
/// the last row for stiffly accurate input.
RefineSpec default_refine_spec(const ButcherTableau& t);

/// Positions the refinement may change, in row-major order (b last).
std::vector<CoefficientPosition> free_variables(const ButcherTableau& t, const RefineSpec& spec);

struct RefineIteration {
  int iteration = 0;
  double residual = 0.0;  // sup-norm after the step if accepted, of the trial otherwise
  double damping = 0.0;   // damping used for the step
  bool accepted = false;
};

struct RefineResult {
  ButcherTableau tableau;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<RefineIteration> log;
  /// Set by a_stability_guard(); polished output is unverified until then.
  bool stability_verified = false;
};

/// Initial residual sup-norm above the local-method threshold.
class RefinePreconditionError : public Error {
 public:
  RefinePreconditionError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Five consecutive rejected steps. Carries the best iterate reached.
class StagnationError : public Error {
 public:
  StagnationError(const std::string& what, RefineResult best) : Error(what), best_(std::move(best)) {}
  const RefineResult& best() const noexcept { return best_; }

 private:
  RefineResult best_;
};

inline constexpr double kRefineMaxInitialResidual = 1e-3;

/// Levenberg-Marquardt on the sigma-weighted order-condition residuals over the free
/// coefficients, forward-difference Jacobian with step 1e-7 (1 + |x|). A step is accepted
/// only if it lowers the residual sup-norm. Input already within convergence_tol is
/// returned unchanged.
RefineResult polish(const ButcherTableau& t, const RefineSpec& spec);

/// A-stability verdict for a polished tableau; a degenerate stability function counts as
/// not A-stable.
AStabilityVerdict a_stability_guard(const ButcherTableau& refined);
/// Same, recording the outcome in result.stability_verified.
AStabilityVerdict a_stability_guard(RefineResult& result);

/// Header "iteration,residual,damping,accepted".
void write_refine_log(std::ostream& os, const RefineResult& result);

}  // namespace dirk
