#include "dirk/conditions.hpp"
#include "dirk/refine.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>

using namespace dirk;

namespace {

double round8(double x) {
  if (x == 0.0) return 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.7e", x);
  return std::strtod(buf, nullptr);
}

ButcherTableau truncated(const ButcherTableau& t) {
  Eigen::MatrixXd a = t.A().unaryExpr(&round8);
  Eigen::VectorXd b = t.b().unaryExpr(&round8);
  if (t.is_stiffly_accurate()) b = a.row(a.rows() - 1).transpose();
  return t.with_coefficients(a, b);
}

}  // namespace

TEST_CASE("default spec fixes zeros and ties stiffly accurate b") {
  const auto t = load_builtin("DIRK(8,6)SA");
  const auto spec = default_refine_spec(t);
  CHECK(spec.target_order == 6);
  CHECK(spec.tie_b_to_last_row);
  const auto free = free_variables(t, spec);
  for (const auto& [i, j] : free) {
    CHECK(i < t.stages());  // b is never free when tied
    CHECK(j <= i);
    CHECK(t.A()(i, j) != 0.0);
  }
  const auto a = default_refine_spec(load_builtin("DIRK(6,6)A"));
  CHECK_FALSE(a.tie_b_to_last_row);
  CHECK(free_variables(load_builtin("DIRK(6,6)A"), a).size() == 27);
}

TEST_CASE("polishing truncated coefficients restores the order conditions") {
  const auto orig = load_builtin("DIRK(6,6)A");
  const auto start = truncated(orig);
  auto res = polish(start, default_refine_spec(start));
  CHECK(res.converged);
  CHECK(res.initial_residual > 1e-9);
  CHECK(res.final_residual <= 5e-13);
  CHECK(verify_order(res.tableau).achieved_order == 6);
  CHECK((res.tableau.A() - orig.A()).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK((res.tableau.b() - orig.b()).cwiseAbs().maxCoeff() <= 1e-7);
  for (int i = 0; i < orig.stages(); ++i) {
    for (int j = i + 1; j < orig.stages(); ++j) CHECK(res.tableau.A()(i, j) == 0.0);
  }
  CHECK_FALSE(res.stability_verified);
  CHECK(a_stability_guard(res).a_stable);
  CHECK(res.stability_verified);
  // The log ends at the reported residual.
  REQUIRE_FALSE(res.log.empty());
  std::ostringstream os;
  write_refine_log(os, res);
  CHECK(os.str().rfind("iteration,residual,damping,accepted\n", 0) == 0);
}

TEST_CASE("stiffly accurate structure survives polishing") {
  const auto start = truncated(load_builtin("DIRK(10,7)SA"));
  const auto res = polish(start, default_refine_spec(start));
  CHECK(res.converged);
  CHECK(res.tableau.is_stiffly_accurate());
  const int s = res.tableau.stages();
  for (int j = 0; j < s; ++j) CHECK(res.tableau.b()(j) == res.tableau.A()(s - 1, j));
}

TEST_CASE("converged input is returned unchanged") {
  const auto t = load_builtin("DIRK(9,7)A");
  const auto res = polish(t, default_refine_spec(t));
  CHECK(res.iterations == 0);
  CHECK(res.tableau.identical_to(t));
}

TEST_CASE("far-off starting points are refused") {
  const auto t = load_builtin("DIRK(6,6)A");
  Eigen::MatrixXd a = t.A();
  a(3, 1) += 0.2;
  const auto bad = t.with_coefficients(a, t.b());
  CHECK_THROWS_AS(polish(bad, default_refine_spec(bad)), RefinePreconditionError);
}

TEST_CASE("the guard rejects schemes that are not A-stable") {
  CHECK_FALSE(a_stability_guard(explicit_euler()).a_stable);
}
