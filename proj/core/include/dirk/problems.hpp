#pragma once

#include "dirk/linear_solver.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dirk {

enum class JacobianStructure { Dense, Tridiagonal, Banded };
enum class ErrorNorm { Max, Rms };

const char* to_string(JacobianStructure s);
const char* to_string(ErrorNorm n);

/// A self-describing initial value problem y' = f(t, y).
struct OdeProblem {
  using Rhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;
  /// Fills a BandMatrix already shaped by jacobian_shape(); entries start at zero.
  using Jacobian = std::function<void(double t, const Eigen::VectorXd& y, BandMatrix& jac)>;
  using Solution = std::function<Eigen::VectorXd(double t)>;

  std::string name;
  int dimension = 0;
  Rhs rhs;
  Jacobian jacobian;
  JacobianStructure structure = JacobianStructure::Dense;
  /// Half bandwidth for Banded (kl = ku); ignored otherwise.
  int bandwidth = 0;
  std::optional<Solution> exact_solution;
  double t0 = 0.0;
  double t_end = 1.0;
  Eigen::VectorXd y0;
  ErrorNorm error_norm = ErrorNorm::Max;
  /// Measure the error as the maximum over every output time rather than at t_end only.
  /// Requires exact_solution.
  bool error_over_trajectory = false;
  std::map<std::string, double> parameters;
  /// Step sizes where design-order convergence is expected; (0, inf) when unrestricted.
  std::pair<double, double> slope_window{0.0, std::numeric_limits<double>::infinity()};

  Eigen::VectorXd eval_rhs(double t, const Eigen::VectorXd& y) const;
  BandMatrix jacobian_shape() const;
  BandMatrix eval_jacobian(double t, const Eigen::VectorXd& y) const;
  /// Error in the problem's declared norm.
  double error(const Eigen::VectorXd& y, const Eigen::VectorXd& reference) const;
  double norm(const Eigen::VectorXd& y) const;
  /// Solver matching the declared Jacobian structure.
  LinearSolverKind default_solver() const;
  /// Name, dimension, interval and parameters in a canonical text form.
  std::string cache_key() const;
};

/// y' = mu (y - g) + g', g(t) = exp(-t) cos(20t) + sin(10t), mu = -100, on [0, 10].
OdeProblem prothero_robinson(double mu = -100.0);
/// Van der Pol in the form y1' = y2, y2' = mu (1 - y1^2) y2 - y1, y(0) = (2, 0), on [0, 10].
OdeProblem van_der_pol(double mu = 100.0);
/// Kaps: y1' = -(1/eps + 2) y1 + y2^2 / eps, y2' = y1 - y2 - y2^2, exact (exp(-2t), exp(-t)).
OdeProblem kaps(double epsilon = 1e-8);
/// Chain of 2m masses with alternating stiff linear and soft cubic springs, on [0, 1].
/// State ordering: x0[0..m), x1[0..m), y0[0..m), y1[0..m).
OdeProblem fermi_pasta_ulam(double omega = 50.0, int m = 3);
/// Hamiltonian of the FPU chain for a state laid out as in fermi_pasta_ulam().
double fpu_energy(const Eigen::VectorXd& state, double omega, int m);

/// u_t = u_xx + g on (0, 1) with Dirichlet data, dx = 1/m, unknowns at the m - 1 interior
/// nodes. The forcing is manufactured so u = exp(-t/10) sin(pi x) solves the PDE; the
/// problem's exact_solution is the exact solution of the semidiscrete system, which keeps
/// spatial error out of time-convergence studies. With forcing = false the problem is
/// u_t = u_xx with zero boundary values.
OdeProblem heat_equation(int m = 200, bool forcing = true);
/// exp(-t/10) sin(pi x_i) at the interior nodes of heat_equation(m).
Eigen::VectorXd heat_pde_solution(int m, double t);
/// Largest eigenvalue magnitude of the discrete Laplacian of heat_equation(m),
/// (4 / dx^2) sin^2((m - 1) pi dx / 2).
double heat_spectral_radius(int m);

/// Brusselator reaction-diffusion with alpha = 1, beta = 3, gamma = 0.02 on m interior
/// nodes (dx = 1/(m+1)), interleaved as (u_1, v_1, u_2, v_2, ...).
OdeProblem brusselator(int m = 500);
/// gamma * 4 / dx^2 bound on the diffusion eigenvalues of brusselator(m).
double brusselator_diffusion_bound(int m);

/// y' = lambda y. Real lambda gives a scalar problem; complex lambda is embedded as the
/// 2x2 real system for (Re y, Im y).
OdeProblem linear_test(std::complex<double> lambda, std::complex<double> y0 = 1.0);

/// Lookup by name: prothero-robinson, van-der-pol, kaps, fpu, heat, brusselator, plus the
/// short forms pr, vdp, fermi-pasta-ulam and the zero-forcing heat-unforced.
OdeProblem make_problem(const std::string& name);
std::vector<std::string> problem_names();

}  // namespace dirk
