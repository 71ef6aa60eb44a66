// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed here.

#include "dirk/conditions.hpp"
#include "dirk/harness.hpp"
#include "dirk/integrator.hpp"
#include "dirk/problems.hpp"
#include "dirk/refine.hpp"
#include "dirk/stability.hpp"
#include "dirk/tableau.hpp"
#include "dirk/trees.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace dirk;
using cd = std::complex<double>;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    details.push_back(std::string(ok ? "" : "[miss] ") + what);
  }
};

std::string num(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<ButcherTableau> builtins() {
  std::vector<ButcherTableau> out;
  for (const auto& n : builtin_names()) out.push_back(load_builtin(n));
  return out;
}

// --- 1 ----------------------------------------------------------------------
Verdict tree_combinatorics() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::size_t> expected{1, 1, 2, 4, 9, 20, 48, 115, 286, 719};
  bool counts = true;
  for (int q = 1; q <= 10; ++q) counts = counts && enumerate_trees(q).size() == expected[q - 1];
  const double secs = seconds_since(t0);
  v.require(counts, "|T_q| = 1,1,2,4,9,20,48,115,286,719");
  v.require(cumulative_condition_count(8) == 200, "cumulative count at p = 8 is " + std::to_string(cumulative_condition_count(8)));
  v.require(secs < 1.0, "enumeration took " + num(secs, 3) + " s (< 1 s)");
  return v;
}

// --- 2 ----------------------------------------------------------------------
Verdict order_verification() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& t : builtins()) {
    const auto r = verify_order(t);
    const double through = r.max_residual_through(t.order());
    double next = 0.0;
    for (double x : r.residuals.at(t.order() + 1)) next = std::max(next, std::abs(x));
    v.require(r.achieved_order == t.order() && through <= 5e-13 && next > 1e-6,
              t.name() + ": max|tau| through p = " + num(through, 2) + ", max at p+1 = " + num(next, 3));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 5.0, "took " + num(secs, 3) + " s (< 5 s)");
  return v;
}

// --- 3 ----------------------------------------------------------------------
Verdict stage_order_one() {
  Verdict v;
  for (const auto& t : builtins()) {
    const int q = stage_order(t);
    v.require(q == 1, t.name() + ": stage order " + std::to_string(q));
  }
  return v;
}

// --- 4 ----------------------------------------------------------------------
/// |ours - expected| within half a unit in the third significant digit.
bool three_digits(double ours, double expected) {
  const double unit = std::pow(10.0, std::floor(std::log10(std::abs(expected))) - 2.0);
  return std::abs(ours - expected) <= 0.5 * unit * (1.0 + 1e-9);
}

Verdict truncation_table() {
  Verdict v;
  const std::map<std::string, std::vector<double>> expected{
      {"DIRK(6,6)A", {4.21e-3, 2.41e-3, 1.01e-2, 7.45e-3, 3.98}},
      {"DIRK(8,6)SA", {9.04e-3, 6.61e-3, 2.50e-2, 9.18e-3, 3.92}},
      {"DIRK(9,7)A", {6.70e-5, 4.15e-5, 1.15e-4, 3.87e-5, 1.22}},
      {"DIRK(10,7)SA", {1.49e-4, 3.67e-5, 2.54e-4, 5.95e-5, 1.00}},
      {"DIRK(13,8)A", {8.98e-6, 2.74e-6, 2.19e-5, 4.75e-6, 7.85}},
      {"DIRK(15,8)SA", {4.60e-6, 1.18e-6, 9.50e-6, 1.64e-6, 1.00}},
  };
  for (const auto& t : builtins()) {
    const auto r = verify_order(t);
    const auto* a = r.norms_at(t.order() + 1);
    const auto* b = r.norms_at(t.order() + 2);
    const std::vector<double> ours{a->l2, a->linf, b->l2, b->linf, r.max_coefficient};
    const auto& ref = expected.at(t.name());
    bool ok = true;
    std::string row;
    for (std::size_t k = 0; k < ours.size(); ++k) {
      ok = ok && three_digits(ours[k], ref[k]);
      row += (k ? " " : "") + num(ours[k], 4);
    }
    v.require(ok, t.name() + ": " + row);
  }
  return v;
}

// --- 5 ----------------------------------------------------------------------
Verdict a_stability() {
  Verdict v;
  for (const auto& t : builtins()) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = a_stability_check(t);
    const double secs = seconds_since(t0);
    v.require(r.a_stable && r.margin() >= -r.tolerance && secs < 1.0,
              t.name() + ": margin " + num(r.margin(), 3) + " vs -tau_E " + num(-r.tolerance, 3) + ", " +
                  num(secs, 2) + " s");
  }
  v.require(!a_stability_check(explicit_euler()).a_stable, "explicit Euler rejected");
  const ButcherTableau theta("theta", 1, Eigen::MatrixXd::Constant(1, 1, 0.5 - 1e-4), Eigen::VectorXd::Ones(1));
  v.require(!a_stability_check(theta).a_stable, "one-stage a = 0.5 - 1e-4 rejected");
  return v;
}

// --- 6 ----------------------------------------------------------------------
Verdict l_stability() {
  Verdict v;
  for (const auto& t : builtins()) {
    if (!t.is_stiffly_accurate()) continue;
    const double r = r_at_infinity(t);
    v.require(std::abs(r) <= 1e-12, t.name() + ": |R(inf)| = " + num(std::abs(r), 3));
  }
  const double mid = r_at_infinity(implicit_midpoint());
  v.require(mid == -1.0, "implicit midpoint R(inf) = " + num(mid, 17));
  return v;
}

// --- 7 ----------------------------------------------------------------------
Verdict internal_table() {
  Verdict v;
  const std::map<std::string, std::pair<double, double>> expected{
      {"DIRK(6,6)A", {1.05, 0.72}},   {"DIRK(8,6)SA", {5.38, 2.44}}, {"DIRK(9,7)A", {4.77, 0.34}},
      {"DIRK(10,7)SA", {4.85, 0.62}}, {"DIRK(13,8)A", {17.87, 0.41}}, {"DIRK(15,8)SA", {2.65, 0.25}},
  };
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& t : builtins()) {
    const auto m = internal_stability_maxima(t);
    const auto [r, q] = expected.at(t.name());
    v.require(std::abs(m.max_r - r) <= 0.01, t.name() + ": max|R_j| " + num(m.max_r, 5) + " vs " + num(r));
    v.require(std::abs(m.max_q - q) <= 0.01, t.name() + ": max|Q_j| " + num(m.max_q, 5) + " vs " + num(q));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 30.0, "took " + num(secs, 3) + " s (< 30 s)");
  return v;
}

// --- 8 ----------------------------------------------------------------------
Verdict integrator_consistency() {
  Verdict v;
  const int n = 20;
  const double dt = 0.05;
  for (const auto& t : builtins()) {
    double worst = 0.0;
    for (const cd z : {cd(-0.1), cd(-1.0), cd(-10.0), cd(-10.0, 10.0)}) {
      const auto p = linear_test(z / dt);
      StepperConfig cfg;
      cfg.dt = dt;
      cfg.newton_tol = 1e-14;
      const auto y = integrate(t, p, 0.0, p.y0, n * dt, cfg).y;
      const cd got = y.size() == 1 ? cd(y(0)) : cd(y(0), y(1));
      const cd expect = std::pow(stability_function(t, z), n);
      worst = std::max(worst, std::abs(got - expect) / std::abs(expect));
    }
    v.require(worst <= 1e-11, t.name() + ": worst relative gap " + num(worst, 3));
  }
  return v;
}

// --- 9 ----------------------------------------------------------------------
Verdict kaps_convergence() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = kaps(1e-8);
  const std::vector<double> dts{0.2, 0.1, 0.05, 0.025};
  std::map<std::string, ConvergenceResult> res;
  for (const auto& t : builtins()) res.emplace(t.name(), run_convergence(t, p, dts, StepperConfig{}));
  for (const auto& [name, order] : std::vector<std::pair<std::string, int>>{
           {"DIRK(8,6)SA", 6}, {"DIRK(10,7)SA", 7}, {"DIRK(15,8)SA", 8}}) {
    const double s = res.at(name).fitted_slope;
    v.require(std::abs(s - order) <= 0.7, name + ": slope " + num(s, 3) + " (design " + std::to_string(order) + ")");
  }
  // Same design order, merely A-stable vs stiffly accurate: an order of magnitude apart at every dt.
  for (const auto& [a, sa] : std::vector<std::pair<std::string, std::string>>{
           {"DIRK(6,6)A", "DIRK(8,6)SA"}, {"DIRK(9,7)A", "DIRK(10,7)SA"}, {"DIRK(13,8)A", "DIRK(15,8)SA"}}) {
    double ratio = INFINITY;
    for (std::size_t i = 0; i < dts.size(); ++i) {
      ratio = std::min(ratio, res.at(a).points[i].error / res.at(sa).points[i].error);
    }
    v.require(ratio >= 10.0, a + " vs " + sa + ": smallest error ratio " + num(ratio, 3));
  }
  const double secs = seconds_since(t0);
  v.require(secs < 60.0, "took " + num(secs, 3) + " s (< 60 s)");
  return v;
}

// --- 10 ---------------------------------------------------------------------
Verdict prothero_robinson_convergence() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = prothero_robinson();
  const std::vector<double> small{0.005, 0.004, 0.003125, 0.0025, 0.002, 0.0016, 0.00125, 0.001};
  const std::vector<double> large{0.1, 0.05, 0.025, 0.0125};
  SweepOptions so;
  so.jobs = 2;
  for (const auto& t : builtins()) {
    so.window = std::make_pair(0.0, 0.01);
    const auto fine = run_convergence(t, p, small, StepperConfig{}, so);
    so.window = std::make_pair(0.01, 1.0);
    const auto coarse = run_convergence(t, p, large, StepperConfig{}, so);
    const double need = t.order() - 0.7;
    v.require(fine.fitted_slope >= need && coarse.fitted_slope <= fine.fitted_slope - 0.5,
              t.name() + ": slope " + num(fine.fitted_slope, 3) + " for dt < 1/100 (need " + num(need, 2) + "), " +
                  num(coarse.fitted_slope, 3) + " above");
  }
  const double secs = seconds_since(t0);
  v.require(secs < 120.0, "took " + num(secs, 3) + " s (< 120 s)");
  return v;
}

// --- 11 ---------------------------------------------------------------------
Verdict pde_and_nonlinear_properties() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();

  // Richardson-verified references at (smallest experiment dt) / 20.
  const std::vector<std::pair<std::string, double>> refs{
      {"van-der-pol", 0.01}, {"fpu", 0.01}, {"heat", 0.008}, {"brusselator", 0.025}};
  std::map<std::string, Eigen::VectorXd> reference;
  for (const auto& [name, dt_min] : refs) {
    ReferenceOptions ro;
    ro.dt_ref = dt_min / 20.0;
    try {
      reference[name] = reference_solution(make_problem(name), ro);
      v.require(true, name + ": reference at dt " + num(ro.dt_ref) + " agrees with dt/2 to 1e-12");
    } catch (const ReferenceQualityError& e) {
      v.require(false, name + ": " + e.what());
    }
  }
  if (reference.count("heat")) {
    const auto heat = heat_equation();
    const double gap = heat.error(reference.at("heat"), (*heat.exact_solution)(heat.t_end));
    v.require(gap <= 1e-12, "heat: reference vs exact semidiscrete solution " + num(gap, 3));
  }

  // Heat: design-order slopes in the small-dt window.
  const auto heat = heat_equation();
  const std::vector<double> heat_dts{0.1, 0.0625, 0.05, 0.04, 0.03125, 0.025, 0.02, 0.016, 0.0125, 0.01, 0.008};
  SweepOptions so;
  so.jobs = 2;
  for (const auto& t : builtins()) {
    const auto r = run_convergence(t, heat, heat_dts, StepperConfig{}, so);
    const double need = t.order() - 0.7;
    v.require(r.fitted_slope >= need, "heat " + t.name() + ": slope " + num(r.fitted_slope, 3) + " from " +
                                          std::to_string(r.points_in_fit) + " points (need " + num(need, 2) + ")");
  }

  // Brusselator: order below design at large dt. Full Newton keeps the large steps convergent.
  if (reference.count("brusselator")) {
    const auto bru = brusselator();
    SweepOptions bo;
    bo.jobs = 2;
    bo.reference_state = reference.at("brusselator");
    StepperConfig cfg;
    cfg.newton_tol = 1e-14;
    cfg.jacobian_reuse = JacobianReuse::EveryIteration;
    for (const auto& t : builtins()) {
      const auto r = run_convergence(t, bru, {0.2, 0.1, 0.05, 0.025}, cfg, bo);
      v.require(r.points_in_fit >= 3 && r.fitted_slope < t.order(),
                "brusselator " + t.name() + ": slope " + num(r.fitted_slope, 3) + " from " +
                    std::to_string(r.points_in_fit) + " points (design " + std::to_string(t.order()) + ")");
    }
  }
  const double secs = seconds_since(t0);
  v.require(secs < 600.0, "took " + num(secs, 3) + " s (< 600 s)");
  return v;
}

// --- 12 ---------------------------------------------------------------------
Verdict refinement() {
  Verdict v;
  const auto orig = load_builtin("DIRK(6,6)A");
  auto round8 = [](double x) {
    if (x == 0.0) return 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.7e", x);
    return std::strtod(buf, nullptr);
  };
  const auto start = orig.with_coefficients(orig.A().unaryExpr(round8), orig.b().unaryExpr(round8));
  auto res = polish(start, default_refine_spec(start));
  const double shift = std::max((res.tableau.A() - orig.A()).cwiseAbs().maxCoeff(),
                                (res.tableau.b() - orig.b()).cwiseAbs().maxCoeff());
  bool zeros = true;
  for (int i = 0; i < orig.stages(); ++i) {
    for (int j = 0; j < orig.stages(); ++j) {
      if (orig.A()(i, j) == 0.0) zeros = zeros && res.tableau.A()(i, j) == 0.0;
    }
    if (orig.b()(i) == 0.0) zeros = zeros && res.tableau.b()(i) == 0.0;
  }
  v.require(res.final_residual <= 5e-13, "residual " + num(res.initial_residual, 3) + " -> " + num(res.final_residual, 3));
  v.require(shift <= 1e-7, "largest change from original coefficients " + num(shift, 3));
  v.require(zeros, "zero pattern preserved exactly");
  v.require(a_stability_guard(res).a_stable && res.stability_verified, "A-stability guard passed");
  return v;
}

// --- 13 ---------------------------------------------------------------------
Verdict perturbation() {
  Verdict v;
  for (const auto& t : builtins()) {
    const double d = perturbation_experiment(t, 1e-13, -1.0, 0.1, 1000, 2024);
    v.require(d <= 1e-7, t.name() + ": relative divergence " + num(d, 3));
  }
  return v;
}

// --- 14 ---------------------------------------------------------------------
Verdict oracle_equivalence() {
  Verdict v;
  std::mt19937_64 rng(14);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto t = oracle::random_tableau(rng, 1 + k % 3);
    for (int q = 1; q <= 6; ++q) {
      for (const auto& tree : trees_of_order(q)) {
        const double fast = t.b().dot(elementary_weights(t, tree));
        const double gap = std::abs(fast - oracle::brute_force_weight(t.A(), t.b(), tree));
        worst = std::max(worst, gap / (1.0 + std::abs(fast)));
      }
    }
  }
  v.require(worst <= 1e-14, "20 tableaus, all trees to order 6: worst gap / (1 + |weight|) " + num(worst, 3));
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"tree combinatorics", tree_combinatorics},
      {"order verification", order_verification},
      {"stage order one", stage_order_one},
      {"truncation-error table", truncation_table},
      {"A-stability", a_stability},
      {"L-stability", l_stability},
      {"internal stability table", internal_table},
      {"integrator matches R(z)^n", integrator_consistency},
      {"Kaps convergence", kaps_convergence},
      {"Prothero-Robinson convergence", prothero_robinson_convergence},
      {"PDE and nonlinear problem properties", pde_and_nonlinear_properties},
      {"coefficient refinement", refinement},
      {"perturbation robustness", perturbation},
      {"elementary-weight oracle", oracle_equivalence},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << ' ' << std::setw(2) << i + 1 << ' ' << criteria[i].first << " ("
              << num(seconds_since(t0), 3) << " s)\n";
    for (const auto& d : v.details) std::cout << "       " << d << '\n';
    std::cout.flush();
  }
  std::cout << criteria.size() - failures << '/' << criteria.size() << " criteria pass\n";
  return failures == 0 ? 0 : 1;
}
