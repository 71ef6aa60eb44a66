#pragma once

#include "dirk/linear_solver.hpp"
#include "dirk/problems.hpp"
#include "dirk/tableau.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>

namespace dirk {

enum class JacobianReuse {
  EveryIteration,  // re-evaluate and refactor every Newton iteration
  PerStage,        // evaluate at the stage predictor, factor once per stage
  PerStep          // evaluate once per step at (t_n, y_n); refactor only when h a_ii changes
};

const char* to_string(JacobianReuse r);

struct StepperConfig {
  double dt = 1e-2;
  /// Newton stops when ||G||_inf <= newton_tol (1 + ||u||_inf) / w_i, or when the Newton
  /// update satisfies the same bound. w_i = max(1, |a_ji| / a_ii, |b_i| / a_ii over j > i)
  /// bounds how much stage i's error grows through k_i = z_i / (h a_ii).
  double newton_tol = 1e-12;
  int newton_max_iters = 25;
  JacobianReuse jacobian_reuse = JacobianReuse::PerStage;
  /// Auto picks the solver matching the problem's Jacobian structure.
  LinearSolverKind linear_solver = LinearSolverKind::Auto;
  /// Called after each residual evaluation with (stage, iteration, ||G||_inf); stages are 1-based.
  std::function<void(int, int, double)> newton_observer;

  /// Throws RangeError unless dt > 0, newton_tol > 0, newton_max_iters >= 1.
  void validate() const;
};

struct SolveTrace {
  long steps_taken = 0;
  long total_newton_iters = 0;
  int max_newton_iters_in_a_stage = 0;
  /// Newton iterations whose residual grew relative to the previous one.
  long divergence_events = 0;
  /// The last step was shortened to land on t_end.
  bool final_step_shortened = false;

  SolveTrace& operator+=(const SolveTrace& other);
};

/// Reusable stepper for one (tableau, problem) pair. Not thread-safe; use one per thread.
class DirkStepper {
 public:
  DirkStepper(const ButcherTableau& tableau, const OdeProblem& problem, const StepperConfig& cfg);
  ~DirkStepper();
  DirkStepper(const DirkStepper&) = delete;
  DirkStepper& operator=(const DirkStepper&) = delete;

  /// Advances y from tn by h (defaults to cfg.dt) in place.
  void step(double tn, Eigen::VectorXd& y, SolveTrace& trace, double h = 0.0);

 private:
  void solve_stage(int i, double t_stage, double gamma, Eigen::VectorXd& z, SolveTrace& trace);
  void factor(double t, const Eigen::VectorXd& at, double gamma);

  ButcherTableau tab_;
  OdeProblem prob_;
  StepperConfig cfg_;
  std::unique_ptr<StageSolver> solver_;
  BandMatrix jac_;
  double factored_gamma_ = 0.0;
  double jac_norm_ = 0.0;
  bool have_factor_ = false;
  bool have_step_jacobian_ = false;
  std::vector<Eigen::VectorXd> k_;
  /// Per-stage Newton tolerance divisor: how much a stage error is amplified downstream.
  std::vector<double> stage_weight_;
  Eigen::VectorXd known_, u_, g_, f_, delta_;
};

struct StepResult {
  Eigen::VectorXd y;
  SolveTrace trace;
};

/// One step of the DIRK scheme from (tn, yn).
StepResult dirk_step(const ButcherTableau& t, const OdeProblem& f, double tn, const Eigen::VectorXd& yn,
                     const StepperConfig& cfg);

struct IntegrateResult {
  Eigen::VectorXd y;
  SolveTrace trace;
};

/// Fixed-step integration from t0 to t_end. When (t_end - t0)/dt is within 1e-9 of an
/// integer n, the steps land on t0 + k (t_end - t0)/n; otherwise the last step is shortened.
/// If `trajectory` is non-null, writes "t,y1,...,ym" rows for every step. `on_step`, when
/// set, sees the state after every step.
using StepCallback = std::function<void(double t, const Eigen::VectorXd& y)>;
IntegrateResult integrate(const ButcherTableau& t, const OdeProblem& f, double t0, const Eigen::VectorXd& y0,
                          double t_end, const StepperConfig& cfg, std::ostream* trajectory = nullptr,
                          const StepCallback& on_step = {});

/// Runs y_{n+1} = R(z) y_n for z = lambda dt with the exact coefficients and with
/// coefficients perturbed by uniform noise in [-eps_scale, eps_scale] (lower triangle of A
/// and b), both by explicit stage recursion in complex arithmetic. Returns
/// max_n |y~_n - y_n| / |y_n|.
double perturbation_experiment(const ButcherTableau& t, double eps_scale, std::complex<double> lambda, double dt,
                               int n_steps, std::uint64_t seed);

}  // namespace dirk
