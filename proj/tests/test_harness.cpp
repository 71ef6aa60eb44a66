#include "dirk/error.hpp"
#include "dirk/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace dirk;

namespace {

std::filesystem::path fresh_dir(const char* tag) {
  auto dir = std::filesystem::temp_directory_path() / (std::string("dirk_test_") + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("slope fit recovers an exact power law") {
  std::vector<std::pair<double, double>> pts;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) pts.emplace_back(dt, 3.0 * std::pow(dt, 5.0));
  CHECK(fit_slope(pts, {0.0, 1.0}) == doctest::Approx(5.0).epsilon(1e-12));
  // Window and floor exclusions.
  CHECK(fit_slope(pts, {0.02, 1.0}) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_slope(pts, {0.06, 1.0}), InsufficientDataError);
  FitBounds b;
  b.error_floor = 1e-6;
  CHECK_THROWS_AS(fit_slope(pts, {0.0, 1.0}, b), InsufficientDataError);
  pts.emplace_back(0.001, 0.0);
  pts.emplace_back(0.002, std::nan(""));
  CHECK(fit_slope(pts, {0.0, 1.0}) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("convergence sweep on a problem with an exact solution") {
  const auto p = linear_test(-1.0);
  auto res = run_convergence(load_builtin("DIRK(6,6)A"), p, {0.05, 0.2, 0.1, 0.1}, StepperConfig{});
  REQUIRE(res.points.size() == 3);
  CHECK(res.points[0].dt == 0.2);
  CHECK(res.points[2].dt == 0.05);
  CHECK(res.fitted_slope == doctest::Approx(6.0).epsilon(0.05));
  CHECK(res.points_in_fit == 3);
  CHECK(res.fitted_dt_range.first == 0.05);
  CHECK(res.fitted_dt_range.second == 0.2);
  CHECK_THROWS_AS(run_convergence(load_builtin("DIRK(6,6)A"), p, {}, StepperConfig{}), RangeError);
  CHECK_THROWS_AS(run_convergence(load_builtin("DIRK(6,6)A"), p, {-0.1}, StepperConfig{}), RangeError);
}

TEST_CASE("trajectory maximum is used where the problem asks for it") {
  const auto p = prothero_robinson();
  REQUIRE(p.error_over_trajectory);
  auto res = run_convergence(load_builtin("DIRK(6,6)A"), p, {0.02}, StepperConfig{});
  StepperConfig cfg;
  cfg.dt = 0.02;
  const auto end = integrate(load_builtin("DIRK(6,6)A"), p, p.t0, p.y0, p.t_end, cfg).y;
  CHECK(res.points[0].error >= p.error(end, (*p.exact_solution)(p.t_end)));
}

TEST_CASE("failed points are data, not errors") {
  StepperConfig cfg;
  cfg.newton_max_iters = 1;
  cfg.jacobian_reuse = JacobianReuse::PerStep;
  SweepOptions so;
  so.reference_state = Eigen::Vector2d(0.0, 0.0);
  const auto res = run_convergence(load_builtin("DIRK(6,6)A"), van_der_pol(), {0.5}, cfg, so);
  REQUIRE(res.points.size() == 1);
  CHECK(res.points[0].failed);
  CHECK(std::isnan(res.points[0].error));
  CHECK(std::isnan(res.fitted_slope));
  std::ostringstream os;
  write_convergence_csv(os, {res});
  CHECK(os.str().find(",nan,") != std::string::npos);
}

TEST_CASE("roundoff plateau is excluded from the fit") {
  const auto p = linear_test(-1.0);
  // DIRK(15,8)SA reaches rounding level well before dt = 1e-2 on this problem.
  const auto res = run_convergence(load_builtin("DIRK(15,8)SA"), p, {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625},
                                   StepperConfig{});
  CHECK(res.points_in_fit < 6);
  CHECK(res.fitted_slope > 6.5);
}

TEST_CASE("reference solutions: Richardson check and cache") {
  const auto dir = fresh_dir("cache");
  const auto p = van_der_pol(10.0);
  ReferenceOptions ro;
  ro.dt_ref = 2e-3;
  ro.cache_dir = dir;
  const auto first = reference_solution(p, ro);
  REQUIRE(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator{}) == 1);
  const auto second = reference_solution(p, ro);
  CHECK((first - second).norm() == 0.0);
  ro.cache_dir.clear();
  const auto uncached = reference_solution(p, ro);
  CHECK((first - uncached).norm() == 0.0);
  ro.tolerance = 1e-300;
  CHECK_THROWS_AS(reference_solution(p, ro), ReferenceQualityError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("parallel sweeps match serial sweeps exactly") {
  const auto p = kaps(1e-6);
  const std::vector<double> dts{0.4, 0.2, 0.1, 0.05};
  SweepOptions serial;
  SweepOptions parallel;
  parallel.jobs = 4;
  const auto a = run_convergence(load_builtin("DIRK(10,7)SA"), p, dts, StepperConfig{}, serial);
  const auto b = run_convergence(load_builtin("DIRK(10,7)SA"), p, dts, StepperConfig{}, parallel);
  for (std::size_t i = 0; i < dts.size(); ++i) CHECK(a.points[i].error == b.points[i].error);
  CHECK(a.fitted_slope == b.fitted_slope);
  std::ostringstream sa, sb;
  write_slope_csv(sa, {a});
  write_slope_csv(sb, {b});
  CHECK(sa.str() == sb.str());
}

TEST_CASE("parallel_for visits every index once and forwards exceptions") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 7, [&](int i) { ++hits[i]; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](int i) {
                    if (i == 5) throw RangeError("boom");
                  }),
                  RangeError);
}
