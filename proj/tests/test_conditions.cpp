#include "dirk/conditions.hpp"
#include "dirk/tableau.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace dirk;

namespace {

ButcherTableau classical_rk4() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a(1, 0) = 0.5;
  a(2, 1) = 0.5;
  a(3, 2) = 1.0;
  Eigen::VectorXd b(4);
  b << 1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6;
  return ButcherTableau("rk4", 4, a, b);
}

}  // namespace

TEST_CASE("recursive elementary weights match brute-force label sums") {
  std::mt19937_64 rng(20240611);
  for (int rep = 0; rep < 10; ++rep) {
    for (int s = 1; s <= 3; ++s) {
      const auto t = oracle::random_tableau(rng, s);
      for (int q = 1; q <= 6; ++q) {
        for (const auto& tree : trees_of_order(q)) {
          const double fast = t.b().dot(elementary_weights(t, tree));
          CHECK(std::abs(fast - oracle::brute_force_weight(t.A(), t.b(), tree)) <= 1e-14 * (1.0 + std::abs(fast)));
        }
      }
    }
  }
}

TEST_CASE("residual definition") {
  const auto t = backward_euler();
  // b^T Phi = 1 for every tree; the residual is (1 - 1/gamma)/sigma.
  for (int q = 1; q <= 5; ++q) {
    for (const auto& tree : trees_of_order(q)) {
      const double expect = (1.0 - 1.0 / static_cast<double>(tree.density())) / static_cast<double>(tree.symmetry());
      CHECK(residual(t, tree) == doctest::Approx(expect).epsilon(1e-15));
      CHECK(unweighted_residual(t, tree) * (1.0 / static_cast<double>(tree.symmetry())) ==
            doctest::Approx(expect).epsilon(1e-15));
    }
  }
}

TEST_CASE("classical schemes reach their known orders") {
  const auto rk4 = verify_order(classical_rk4());
  CHECK(rk4.achieved_order == 4);
  CHECK(rk4.max_residual_through(4) < 1e-15);
  CHECK(verify_order(backward_euler()).achieved_order == 1);
  CHECK(verify_order(implicit_midpoint()).achieved_order == 2);
  CHECK(stage_order(implicit_midpoint()) == 1);
}

TEST_CASE("builtins: declared order, failure at p+1, stage order one") {
  for (const auto& name : builtin_names()) {
    const auto t = load_builtin(name);
    const auto r = verify_order(t);
    CAPTURE(name);
    CHECK(r.achieved_order == t.order());
    CHECK(r.max_residual_through(t.order()) <= kDefaultOrderTolerance);
    double worst = 0.0;
    for (double v : r.residuals.at(t.order() + 1)) worst = std::max(worst, std::abs(v));
    CHECK(worst > 1e-6);
    CHECK(r.stage_order == 1);
    REQUIRE(r.norms_at(t.order() + 1) != nullptr);
  }
}

TEST_CASE("error norms are consistent with the residual vectors") {
  const auto r = verify_order(load_builtin("DIRK(6,6)A"));
  const auto* n = r.norms_at(7);
  REQUIRE(n != nullptr);
  double l2 = 0.0;
  double linf = 0.0;
  for (double v : r.residuals.at(7)) {
    l2 += v * v;
    linf = std::max(linf, std::abs(v));
  }
  CHECK(n->l2 == doctest::Approx(std::sqrt(l2)).epsilon(1e-14));
  CHECK(n->linf == doctest::Approx(linf).epsilon(1e-14));
  CHECK(n->l2_unweighted >= n->l2);
}

TEST_CASE("reports and CSV render") {
  const auto r = verify_order(implicit_midpoint());
  std::ostringstream rep;
  write_report(rep, r);
  CHECK(rep.str().find("achieved order  2") != std::string::npos);
  std::ostringstream csv;
  write_residual_csv(csv, r);
  CHECK(csv.str().rfind("order,tree_index,residual\n", 0) == 0);
}
