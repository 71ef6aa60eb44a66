#include "dirk/error.hpp"
#include "dirk/integrator.hpp"
#include "dirk/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace dirk;
using cd = std::complex<double>;

TEST_CASE("n steps on the linear test equation reproduce R(z)^n") {
  const int n = 10;
  const double dt = 0.1;
  for (const auto& name : builtin_names()) {
    const auto t = load_builtin(name);
    for (const cd z : {cd(-0.1), cd(-1.0), cd(-10.0), cd(-10.0, 10.0)}) {
      const auto p = linear_test(z / dt);
      StepperConfig cfg;
      cfg.dt = dt;
      cfg.newton_tol = 1e-14;
      const auto out = integrate(t, p, 0.0, p.y0, n * dt, cfg);
      const cd got = out.y.size() == 1 ? cd(out.y(0)) : cd(out.y(0), out.y(1));
      const cd expect = std::pow(stability_function(t, z), n);
      CAPTURE(name);
      CAPTURE(z);
      CHECK(std::abs(got - expect) <= 1e-11 * std::max(std::abs(expect), 1e-300) + 1e-300);
    }
  }
}

TEST_CASE("stiffly accurate update equals the last stage") {
  const auto p = van_der_pol();
  for (const char* name : {"DIRK(8,6)SA", "DIRK(10,7)SA", "DIRK(15,8)SA"}) {
    StepperConfig cfg;
    cfg.dt = 0.05;
    // The stepper itself asserts the equality and throws otherwise.
    CHECK_NOTHROW(integrate(load_builtin(name), p, 0.0, p.y0, 1.0, cfg));
  }
}

TEST_CASE("Jacobian policies and linear solvers agree") {
  const auto t = load_builtin("DIRK(9,7)A");
  const auto p = heat_equation(30);
  Eigen::VectorXd reference;
  for (auto reuse : {JacobianReuse::EveryIteration, JacobianReuse::PerStage, JacobianReuse::PerStep}) {
    for (auto solver : {LinearSolverKind::Auto, LinearSolverKind::DenseLU, LinearSolverKind::Banded}) {
      StepperConfig cfg;
      cfg.dt = 0.05;
      cfg.newton_tol = 1e-14;
      cfg.jacobian_reuse = reuse;
      cfg.linear_solver = solver;
      const auto y = integrate(t, p, 0.0, p.y0, 1.0, cfg).y;
      if (reference.size() == 0) reference = y;
      CHECK((y - reference).lpNorm<Eigen::Infinity>() <= 1e-13);
    }
  }
}

TEST_CASE("Newton converges quadratically with a fresh Jacobian") {
  const auto p = van_der_pol();
  std::vector<std::vector<double>> per_stage(20);
  StepperConfig cfg;
  cfg.dt = 1e-3;
  cfg.newton_tol = 1e-15;
  cfg.jacobian_reuse = JacobianReuse::EveryIteration;
  cfg.newton_observer = [&](int stage, int, double r) { per_stage[stage].push_back(r); };
  // Start away from equilibrium so the first residuals are not already tiny.
  Eigen::VectorXd y(2);
  y << 2.0, -0.3;
  SolveTrace trace;
  DirkStepper stepper(load_builtin("DIRK(6,6)A"), p, cfg);
  stepper.step(0.0, y, trace);
  int checked = 0;
  for (const auto& r : per_stage) {
    for (std::size_t k = 1; k < r.size(); ++k) {
      if (r[k - 1] < 1e-4 && r[k - 1] > 1e-13) {
        CHECK(r[k] <= 0.1 * r[k - 1]);
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("unforced heat energy never grows under A-stable schemes") {
  const auto p = heat_equation(200, false);
  for (const auto& name : builtin_names()) {
    for (double dt : {0.1, 1.0}) {
      StepperConfig cfg;
      cfg.dt = dt;
      DirkStepper stepper(load_builtin(name), p, cfg);
      SolveTrace trace;
      Eigen::VectorXd y = p.y0;
      double prev = y.norm();
      for (int k = 0; k < 10; ++k) {
        stepper.step(k * dt, y, trace);
        CHECK(y.norm() <= prev * (1.0 + 1e-14));
        prev = y.norm();
      }
    }
  }
}

TEST_CASE("grid handling and trajectory output") {
  const auto p = linear_test(-1.0);
  const auto t = backward_euler();
  StepperConfig cfg;
  cfg.dt = 0.1;
  const auto even = integrate(t, p, 0.0, p.y0, 1.0, cfg);
  CHECK(even.trace.steps_taken == 10);
  CHECK_FALSE(even.trace.final_step_shortened);
  cfg.dt = 0.3;
  std::ostringstream traj;
  const auto odd = integrate(t, p, 0.0, p.y0, 1.0, cfg, &traj);
  CHECK(odd.trace.steps_taken == 4);
  CHECK(odd.trace.final_step_shortened);
  std::istringstream in(traj.str());
  std::string line, last;
  std::getline(in, line);
  CHECK(line == "t,y1");
  int rows = 0;
  while (std::getline(in, line)) {
    last = line;
    ++rows;
  }
  CHECK(rows == 5);
  CHECK(last.rfind("1,", 0) == 0);
  CHECK(std::stod(last.substr(2)) == odd.y(0));
  std::vector<double> seen;
  integrate(t, p, 0.0, p.y0, 1.0, cfg, nullptr, [&](double time, const Eigen::VectorXd&) { seen.push_back(time); });
  CHECK(seen.size() == 4);
  CHECK(seen.back() == 1.0);
}

TEST_CASE("invalid configuration and failures") {
  StepperConfig cfg;
  cfg.dt = -1.0;
  CHECK_THROWS_AS(cfg.validate(), RangeError);
  cfg.dt = 0.1;
  cfg.newton_max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), RangeError);

  // One Newton iteration cannot solve a strongly nonlinear stage.
  StepperConfig tight;
  tight.dt = 0.5;
  tight.newton_max_iters = 1;
  tight.jacobian_reuse = JacobianReuse::PerStep;
  const auto p = van_der_pol();
  try {
    integrate(load_builtin("DIRK(6,6)A"), p, 0.0, p.y0, 10.0, tight);
    FAIL("expected a step failure");
  } catch (const StepFailure& e) {
    CHECK(e.stage() >= 1);
    CHECK(e.step_index() >= 0);
  }
  CHECK_THROWS_AS(DirkStepper(parse_tableau("name f\norder 1\nstages 2\n0.5 0.5\n0.5 0.5\n0.5 0.5\n"), p, StepperConfig{}),
                  UnsupportedError);
}

TEST_CASE("perturbation experiment") {
  for (const auto& name : builtin_names()) {
    const auto t = load_builtin(name);
    const double d = perturbation_experiment(t, 1e-13, -1.0, 0.1, 1000, 42);
    CHECK(d <= 1e-7);
    CHECK(d > 0.0);
    CHECK(perturbation_experiment(t, 1e-13, -1.0, 0.1, 1000, 42) == d);
  }
  CHECK(perturbation_experiment(load_builtin("DIRK(6,6)A"), 0.0, -1.0, 0.1, 100, 1) == 0.0);
  CHECK_THROWS_AS(perturbation_experiment(load_builtin("DIRK(6,6)A"), 1e-13, 1.0, 0.1, 10, 1), RangeError);
}
