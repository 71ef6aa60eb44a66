#include "dirk/error.hpp"
#include "dirk/problems.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace dirk;

namespace {

/// Central differences of the rhs, column by column.
Eigen::MatrixXd fd_jacobian(const OdeProblem& p, double t, const Eigen::VectorXd& y) {
  const int n = p.dimension;
  Eigen::MatrixXd j(n, n);
  for (int c = 0; c < n; ++c) {
    const double h = 1e-6 * (1.0 + std::abs(y(c)));
    Eigen::VectorXd yp = y, ym = y;
    yp(c) += h;
    ym(c) -= h;
    j.col(c) = (p.eval_rhs(t, yp) - p.eval_rhs(t, ym)) / (2.0 * h);
  }
  return j;
}

std::vector<OdeProblem> small_problems() {
  return {prothero_robinson(), van_der_pol(), kaps(1e-3), fermi_pasta_ulam(), heat_equation(12),
          brusselator(6), linear_test({-2.0, 3.0})};
}

}  // namespace

TEST_CASE("Jacobians match central differences at random states") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (const auto& p : small_problems()) {
    CAPTURE(p.name);
    for (int rep = 0; rep < 3; ++rep) {
      Eigen::VectorXd y(p.dimension);
      for (int i = 0; i < p.dimension; ++i) y(i) = u(rng);
      const double t = 0.37 * rep;
      const Eigen::MatrixXd exact = p.eval_jacobian(t, y).to_dense();
      const Eigen::MatrixXd fd = fd_jacobian(p, t, y);
      CHECK((exact - fd).lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + exact.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("exact solutions satisfy their ODEs") {
  for (const auto& p : {prothero_robinson(), kaps(1e-3), heat_equation(50), linear_test({-2.0, 3.0}),
                        linear_test(-4.0)}) {
    REQUIRE(p.exact_solution);
    CAPTURE(p.name);
    const auto& sol = *p.exact_solution;
    CHECK((sol(p.t0) - p.y0).lpNorm<Eigen::Infinity>() <= 1e-14);
    for (double t : {0.1, 0.55, 0.9}) {
      const double h = 1e-5;
      const Eigen::VectorXd dydt = (sol(t + h) - sol(t - h)) / (2.0 * h);
      const Eigen::VectorXd f = p.eval_rhs(t, sol(t));
      CHECK((dydt - f).lpNorm<Eigen::Infinity>() <= 1e-8 * (1.0 + f.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("FPU energy and gradient") {
  const double omega = 50.0;
  const auto p = fermi_pasta_ulam(omega, 3);
  const auto& y = p.y0;
  const double quartic = 0.25 * std::pow(1.0 - 1.0 / omega, 4) + 0.25 * std::pow(-1.0 - 1.0 / omega, 4);
  CHECK(fpu_energy(y, omega, 3) == doctest::Approx(1.0 + 0.5 + quartic).epsilon(1e-15));

  // The rhs is (dH/dy, -dH/dx); compare with differences of H in every coordinate.
  Eigen::VectorXd s = y;
  s(1) = 0.3;
  s(4) = -0.02;
  const Eigen::VectorXd f = p.eval_rhs(0.0, s);
  const int m = 3;
  for (int c = 0; c < 4 * m; ++c) {
    const double h = 1e-6;
    Eigen::VectorXd sp = s, sm = s;
    sp(c) += h;
    sm(c) -= h;
    const double dh = (fpu_energy(sp, omega, m) - fpu_energy(sm, omega, m)) / (2.0 * h);
    const double expect = c < 2 * m ? -f(c + 2 * m) : f(c - 2 * m);
    CHECK(dh == doctest::Approx(expect).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("heat problem setup") {
  const int m = 200;
  const auto p = heat_equation(m);
  CHECK(p.dimension == m - 1);
  CHECK(p.structure == JacobianStructure::Tridiagonal);
  for (int i = 0; i < p.dimension; ++i) CHECK(std::abs(p.y0(i) - std::sin(std::numbers::pi * (i + 1) / m)) <= 1e-15);
  CHECK((p.y0 - heat_pde_solution(m, 0.0)).lpNorm<Eigen::Infinity>() <= 1e-15);
  CHECK(heat_spectral_radius(m) == doctest::Approx(1.6e5).epsilon(1e-3));
  // The semidiscrete solution follows the PDE to spatial accuracy.
  CHECK(((*p.exact_solution)(1.0) - heat_pde_solution(m, 1.0)).lpNorm<Eigen::Infinity>() < 1e-4);
  const auto unforced = heat_equation(m, false);
  CHECK(unforced.eval_rhs(0.0, Eigen::VectorXd::Zero(m - 1)).norm() == 0.0);
}

TEST_CASE("Brusselator steady reaction state and banded shape") {
  const int m = 8;
  const auto p = brusselator(m);
  CHECK(p.dimension == 2 * m);
  CHECK(p.structure == JacobianStructure::Banded);
  CHECK(p.bandwidth == 2);
  Eigen::VectorXd y(2 * m);
  for (int i = 0; i < m; ++i) {
    y(2 * i) = 1.0;
    y(2 * i + 1) = 3.0;
  }
  CHECK(p.eval_rhs(0.0, y).lpNorm<Eigen::Infinity>() <= 1e-12);
  const auto j = p.eval_jacobian(0.0, y);
  const double c = 0.02 * (m + 1) * (m + 1);
  CHECK(j(2, 2) == doctest::Approx(2.0 - 2.0 * c));
  CHECK(j(2, 3) == 1.0);
  CHECK(j(3, 2) == -3.0);
  CHECK(j(3, 3) == doctest::Approx(-1.0 - 2.0 * c));
  CHECK(brusselator_diffusion_bound(500) == doctest::Approx(0.02 * 4.0 * 501.0 * 501.0));
  CHECK(p.y0(0) == doctest::Approx(1.0 + std::sin(2.0 * std::numbers::pi / (m + 1))));
}

TEST_CASE("registry, norms and cache keys") {
  for (const auto& name : problem_names()) CHECK(make_problem(name).name == name);
  CHECK(make_problem("pr").name == "prothero-robinson");
  CHECK_THROWS_AS(make_problem("lorenz"), NotFoundError);
  CHECK_THROWS_AS(kaps(0.0), RangeError);
  CHECK(kaps(1e-8).cache_key() != kaps(1e-7).cache_key());
  const auto fpu = fermi_pasta_ulam();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(12);
  e(0) = 2.0;
  CHECK(fpu.norm(e) == doctest::Approx(2.0 / std::sqrt(12.0)));
  CHECK(kaps().norm(Eigen::Vector2d(-3.0, 1.0)) == 3.0);
}
