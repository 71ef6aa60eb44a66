#include "cli.hpp"

#include "dirk/conditions.hpp"
#include "dirk/csv.hpp"
#include "dirk/error.hpp"
#include "dirk/harness.hpp"
#include "dirk/integrator.hpp"
#include "dirk/problems.hpp"
#include "dirk/refine.hpp"
#include "dirk/stability.hpp"
#include "dirk/tableau.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>

namespace dirk::cli {
namespace {

/// Bad invocation detected after parsing (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ButcherTableau resolve_scheme(const std::string& selector) {
  try {
    return load_builtin(selector);
  } catch (const NotFoundError&) {
    if (std::filesystem::is_regular_file(selector)) return read_tableau_file(selector);
    throw;
  }
}

std::vector<ButcherTableau> resolve_schemes(const std::string& selector) {
  std::vector<ButcherTableau> out;
  if (selector == "all") {
    for (const auto& n : builtin_names()) out.push_back(load_builtin(n));
  } else {
    out.push_back(resolve_scheme(selector));
  }
  return out;
}

JacobianReuse parse_reuse(const std::string& s) {
  if (s == "every-iteration") return JacobianReuse::EveryIteration;
  if (s == "per-stage") return JacobianReuse::PerStage;
  if (s == "per-step") return JacobianReuse::PerStep;
  throw UsageError("unknown Jacobian policy '" + s + "'");
}

LinearSolverKind parse_solver(const std::string& s) {
  if (s == "auto") return LinearSolverKind::Auto;
  if (s == "dense-lu") return LinearSolverKind::DenseLU;
  if (s == "tridiagonal") return LinearSolverKind::Tridiagonal;
  if (s == "banded") return LinearSolverKind::Banded;
  throw UsageError("unknown linear solver '" + s + "'");
}

/// Writes to `path`, or to `fallback` when the path is empty.
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  std::ofstream f(path);
  if (!f) throw UsageError("cannot open '" + path + "' for writing");
  fn(f);
  if (!f) throw Error("failed writing '" + path + "'");
}

std::string sci(double v, int digits = 3) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(digits) << v;
  return os.str();
}

std::string fixed(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

struct StepperFlags {
  double tol = StepperConfig{}.newton_tol;
  int max_iters = StepperConfig{}.newton_max_iters;
  std::string jacobian = "per-stage";
  std::string solver = "auto";

  void add(CLI::App* app) {
    app->add_option("--tol", tol, "Newton tolerance")->capture_default_str();
    app->add_option("--max-iters", max_iters, "Newton iteration limit")->capture_default_str();
    app->add_option("--jacobian", jacobian, "every-iteration, per-stage or per-step")->capture_default_str();
    app->add_option("--solver", solver, "auto, dense-lu, tridiagonal or banded")->capture_default_str();
  }
  StepperConfig config() const {
    StepperConfig c;
    c.newton_tol = tol;
    c.newton_max_iters = max_iters;
    c.jacobian_reuse = parse_reuse(jacobian);
    c.linear_solver = parse_solver(solver);
    return c;
  }
};

// ---------------------------------------------------------------------------

int cmd_list(std::ostream& out) {
  out << std::left << std::setw(15) << "scheme" << std::setw(15) << "alias" << std::setw(8) << "stages"
      << std::setw(7) << "order" << "flags\n";
  for (const auto& n : builtin_names()) {
    const auto t = load_builtin(n);
    std::string flags = t.is_dirk() ? "dirk" : "";
    if (t.is_stiffly_accurate()) flags += ",stiffly-accurate";
    out << std::setw(15) << n << std::setw(15) << scheme_alias(n) << std::setw(8) << t.stages() << std::setw(7)
        << t.order() << flags << '\n';
  }
  return kExitOk;
}

int cmd_verify(const std::string& selector, double tol, const std::string& csv, std::ostream& out) {
  const auto t = resolve_scheme(selector);
  VerifyOptions vo;
  vo.tolerance = tol;
  const auto order = verify_order(t, vo);
  write_report(out, order);
  if (!csv.empty()) emit(csv, out, [&](std::ostream& os) { write_residual_csv(os, order); });

  bool ok = order.achieved_order >= order.declared_order;
  bool a_stable = false;
  bool l_ok = true;
  try {
    const auto stab = analyze_stability(t);
    out << '\n';
    write_report(out, stab);
    a_stable = stab.a_stability.a_stable;
    if (t.is_stiffly_accurate()) l_ok = stab.l_stability.l_stable;
  } catch (const DegenerateStabilityFunction& e) {
    out << "\nstability analysis refused: " << e.what() << '\n';
  }
  ok = ok && a_stable && l_ok;
  out << "\nverdict: " << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? kExitOk : kExitNumerical;
}

int cmd_analyze(int table, int jobs, const std::string& path, std::ostream& out) {
  const auto& names = builtin_names();
  const int n = static_cast<int>(names.size());
  std::vector<std::string> rows(n);
  if (table == 2) {
    parallel_for(n, jobs, [&](int i) {
      const auto m = internal_stability_maxima(load_builtin(names[i]));
      std::ostringstream os;
      os << csv_field(names[i]) << ',' << std::setprecision(6) << m.max_r << ',' << m.max_q;
      rows[i] = os.str();
    });
  } else {
    parallel_for(n, jobs, [&](int i) {
      const auto r = verify_order(load_builtin(names[i]));
      const auto* p1 = r.norms_at(r.declared_order + 1);
      const auto* p2 = r.norms_at(r.declared_order + 2);
      std::ostringstream os;
      os << csv_field(names[i]) << std::setprecision(6);
      for (const auto* e : {p1, p2}) {
        if (e) {
          os << ',' << e->l2 << ',' << e->linf;
        } else {
          os << ",nan,nan";
        }
      }
      os << ',' << r.max_coefficient;
      rows[i] = os.str();
    });
  }
  emit(path, out, [&](std::ostream& os) {
    os << (table == 2 ? "scheme,max_abs_R,max_abs_Q\n" : "scheme,E2_p1,Einf_p1,E2_p2,Einf_p2,D\n");
    for (const auto& r : rows) os << r << '\n';
  });
  return kExitOk;
}

int cmd_integrate(const std::string& selector, const std::string& problem_name, double dt, double t_end,
                  const StepperFlags& sf, const std::string& path, std::ostream& out) {
  const auto t = resolve_scheme(selector);
  const auto p = make_problem(problem_name);
  auto cfg = sf.config();
  cfg.dt = dt;
  const double end = std::isnan(t_end) ? p.t_end : t_end;
  IntegrateResult res;
  if (path.empty()) {
    res = integrate(t, p, p.t0, p.y0, end, cfg);
  } else {
    std::ofstream f(path);
    if (!f) throw UsageError("cannot open '" + path + "' for writing");
    res = integrate(t, p, p.t0, p.y0, end, cfg, &f);
  }
  out << "scheme   " << t.name() << "\nproblem  " << p.name << "\nt_end    " << end << "\ndt       " << dt
      << "\nsteps    " << res.trace.steps_taken << (res.trace.final_step_shortened ? " (last shortened)" : "")
      << "\nnewton   " << res.trace.total_newton_iters << " iterations, at most "
      << res.trace.max_newton_iters_in_a_stage << " per stage, " << res.trace.divergence_events
      << " residual increases\n";
  if (p.exact_solution) out << "error    " << sci(p.error(res.y, (*p.exact_solution)(end))) << " (" << to_string(p.error_norm) << ")\n";
  out << "y(t_end)";
  const int shown = std::min<int>(8, static_cast<int>(res.y.size()));
  for (int i = 0; i < shown; ++i) out << ' ' << std::setprecision(17) << res.y(i);
  if (shown < res.y.size()) out << " ...";
  out << '\n';
  return kExitOk;
}

struct ConvergeFlags {
  std::vector<double> dts;
  std::vector<double> window;
  int jobs = 1;
  std::string out_path, slope_path, cache_dir;
  StepperFlags stepper;
};

int cmd_converge(const std::string& selector, const std::string& problem_name, const ConvergeFlags& cf,
                 std::ostream& out) {
  if (cf.dts.empty()) throw UsageError("--dt needs at least one step size");
  if (!cf.window.empty() && cf.window.size() != 2) throw UsageError("--window takes lo,hi");
  const auto schemes = resolve_schemes(selector);
  const auto p = make_problem(problem_name);
  SweepOptions so;
  so.jobs = cf.jobs;
  if (cf.window.size() == 2) so.window = std::make_pair(cf.window[0], cf.window[1]);
  so.reference.cache_dir = cf.cache_dir;
  if (!p.exact_solution) {
    // One reference for every scheme in the run.
    ReferenceOptions ro = so.reference;
    ro.dt_ref = *std::min_element(cf.dts.begin(), cf.dts.end()) / 20.0;
    so.reference_state = reference_solution(p, ro);
  }
  const auto cfg = cf.stepper.config();
  std::vector<ConvergenceResult> results;
  for (const auto& t : schemes) results.push_back(run_convergence(t, p, cf.dts, cfg, so));

  for (const auto& r : results) {
    out << r.scheme << " on " << r.problem << ": slope "
        << (std::isnan(r.fitted_slope) ? std::string("n/a") : fixed(r.fitted_slope)) << " from " << r.points_in_fit
        << " points\n";
    for (const auto& pt : r.points) {
      out << "  dt " << std::setw(10) << pt.dt << "  error " << (pt.failed ? "failed" : sci(pt.error)) << '\n';
    }
    for (const auto& note : r.notes) out << "  note: " << note << '\n';
  }
  if (!cf.out_path.empty()) emit(cf.out_path, out, [&](std::ostream& os) { write_convergence_csv(os, results); });
  if (!cf.slope_path.empty()) emit(cf.slope_path, out, [&](std::ostream& os) { write_slope_csv(os, results); });
  const bool any_failed = std::any_of(results.begin(), results.end(), [](const ConvergenceResult& r) {
    return std::all_of(r.points.begin(), r.points.end(), [](const ConvergencePoint& p) { return p.failed; });
  });
  return any_failed ? kExitNumerical : kExitOk;
}

PlotKind parse_kind(const std::string& s) {
  if (s == "modulus") return PlotKind::ModulusImaginaryAxis;
  if (s == "e-poly") return PlotKind::EPolynomial;
  if (s == "eps-real") return PlotKind::EConsistencyReal;
  if (s == "eps-imag") return PlotKind::EConsistencyImaginary;
  throw UsageError("unknown plot kind '" + s + "'");
}

struct RefineFlags {
  int digits = 0;
  double perturb = 0.0;
  std::uint64_t seed = 1;
  double tol = RefineSpec{}.convergence_tol;
  int max_iters = RefineSpec{}.max_iterations;
  std::string out_path, log_path;
};

double round_digits(double x, int digits) {
  if (x == 0.0 || digits <= 0) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
  return std::strtod(buf, nullptr);
}

int cmd_refine(const std::string& selector, const RefineFlags& rf, std::ostream& out) {
  const auto input = resolve_scheme(selector);
  if (rf.perturb < 0.0) throw UsageError("--perturb must be nonnegative");
  Eigen::MatrixXd a = input.A();
  Eigen::VectorXd b = input.b();
  std::mt19937_64 rng(rf.seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j <= i; ++j) {
      if (a(i, j) == 0.0) continue;
      a(i, j) = round_digits(a(i, j) * (1.0 + rf.perturb * noise(rng)), rf.digits);
    }
  }
  for (int j = 0; j < b.size(); ++j) {
    if (b(j) != 0.0) b(j) = round_digits(b(j) * (1.0 + rf.perturb * noise(rng)), rf.digits);
  }
  if (input.is_stiffly_accurate()) b = a.row(a.rows() - 1).transpose();
  const auto start = input.with_coefficients(a, b);

  auto spec = default_refine_spec(input);
  spec.convergence_tol = rf.tol;
  spec.max_iterations = rf.max_iters;
  int status = kExitOk;
  auto res = [&] {
    try {
      return polish(start, spec);
    } catch (const StagnationError& e) {
      out << "stagnated: " << e.what() << '\n';
      status = kExitNumerical;
      return e.best();
    }
  }();
  const auto guard = a_stability_guard(res);
  const double shift = std::max((res.tableau.A() - input.A()).cwiseAbs().maxCoeff(),
                                (res.tableau.b() - input.b()).cwiseAbs().maxCoeff());
  out << "scheme            " << input.name() << "\nfree coefficients " << free_variables(start, spec).size()
      << "\ninitial residual  " << sci(res.initial_residual) << "\nfinal residual    " << sci(res.final_residual)
      << "\niterations        " << res.iterations << "\nconverged         " << (res.converged ? "yes" : "no")
      << "\nA-stable          " << (guard.a_stable ? "yes" : "no") << "\nmax change vs input " << sci(shift) << '\n';
  if (!rf.out_path.empty()) emit(rf.out_path, out, [&](std::ostream& os) { write_tableau(os, res.tableau); });
  if (!rf.log_path.empty()) emit(rf.log_path, out, [&](std::ostream& os) { write_refine_log(os, res); });
  if (!res.converged || !guard.a_stable) status = kExitNumerical;
  return status;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diagonally implicit Runge-Kutta toolkit"};
  app.name("dirk");
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  auto* list = app.add_subcommand("list-schemes", "Builtin schemes with stages, order and flags");

  std::string scheme;
  const char* scheme_help = "Builtin name, alias such as dirk-13-8-a, or tableau file";

  auto* verify = app.add_subcommand("verify", "Order conditions and linear stability of one scheme");
  double verify_tol = kDefaultOrderTolerance;
  std::string verify_csv;
  verify->add_option("scheme", scheme, scheme_help)->required();
  verify->add_option("--tol", verify_tol, "Order-condition tolerance")->capture_default_str();
  verify->add_option("--out", verify_csv, "Per-tree residual CSV");

  auto* analyze = app.add_subcommand("analyze", "Internal stability (2) or truncation-error (3) table");
  int table = 3;
  int jobs = 1;
  std::string analyze_out;
  analyze->add_option("--table", table, "2 or 3")->required()->check(CLI::IsMember({2, 3}));
  analyze->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  analyze->add_option("--out", analyze_out, "CSV path (stdout if omitted)");

  auto* integ = app.add_subcommand("integrate", "Fixed-step run of one scheme on one problem");
  std::string problem;
  double dt = 0.0;
  double t_end = std::nan("");
  std::string traj;
  StepperFlags integ_flags;
  integ->add_option("scheme", scheme, scheme_help)->required();
  integ->add_option("--problem", problem, "Problem name")->required();
  integ->add_option("--dt", dt, "Step size")->required()->check(CLI::PositiveNumber);
  integ->add_option("--t-end", t_end, "Final time (problem default if omitted)");
  integ->add_option("--out", traj, "Trajectory CSV");
  integ_flags.add(integ);

  auto* conv = app.add_subcommand("converge", "Convergence sweep over step sizes");
  ConvergeFlags cf;
  conv->add_option("scheme", scheme, "Scheme selector, or 'all' for every builtin")->required();
  conv->add_option("--problem", problem, "Problem name")->required();
  conv->add_option("--dt", cf.dts, "Comma-separated step sizes")->required()->delimiter(',');
  conv->add_option("--window", cf.window, "Fit window lo,hi in dt")->delimiter(',');
  conv->add_option("--jobs", cf.jobs, "Worker threads")->check(CLI::PositiveNumber);
  conv->add_option("--out", cf.out_path, "Per-point CSV");
  conv->add_option("--slopes", cf.slope_path, "Fitted-slope CSV");
  conv->add_option("--cache", cf.cache_dir, "Reference-solution cache directory");
  cf.stepper.add(conv);

  auto* plot = app.add_subcommand("stability-plot", "CSV samples of |R(iy)|, E(w) or the e-consistency error");
  std::string kind = "modulus";
  PlotRange range;
  bool linear = false;
  std::string plot_out;
  plot->add_option("scheme", scheme, scheme_help)->required();
  plot->add_option("--kind", kind, "modulus, e-poly, eps-real or eps-imag")->capture_default_str();
  plot->add_option("--lo", range.lo, "Lower end of the sample range")->capture_default_str();
  plot->add_option("--hi", range.hi, "Upper end of the sample range")->capture_default_str();
  plot->add_option("--points", range.points, "Number of samples")->capture_default_str();
  plot->add_flag("--linear", linear, "Linear instead of logarithmic spacing");
  plot->add_option("--out", plot_out, "CSV path (stdout if omitted)");

  auto* refine = app.add_subcommand("refine", "Polish coefficients against the order conditions");
  RefineFlags rf;
  refine->add_option("scheme", scheme, scheme_help)->required();
  refine->add_option("--digits", rf.digits, "Round the input to this many significant digits first");
  refine->add_option("--perturb", rf.perturb, "Relative uniform noise applied to nonzero coefficients first");
  refine->add_option("--seed", rf.seed, "Noise seed")->capture_default_str();
  refine->add_option("--tol", rf.tol, "Target residual sup-norm")->capture_default_str();
  refine->add_option("--max-iters", rf.max_iters, "Iteration limit")->capture_default_str();
  refine->add_option("--out", rf.out_path, "Refined tableau file");
  refine->add_option("--log", rf.log_path, "Iteration log CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*list) return cmd_list(out);
    if (*verify) return cmd_verify(scheme, verify_tol, verify_csv, out);
    if (*analyze) return cmd_analyze(table, jobs, analyze_out, out);
    if (*integ) return cmd_integrate(scheme, problem, dt, t_end, integ_flags, traj, out);
    if (*conv) return cmd_converge(scheme, problem, cf, out);
    if (*plot) {
      range.log_spaced = !linear;
      const auto t = resolve_scheme(scheme);
      const auto k = parse_kind(kind);
      emit(plot_out, out, [&](std::ostream& os) { write_stability_plot(os, t, k, range); });
      return kExitOk;
    }
    if (*refine) return cmd_refine(scheme, rf, out);
  } catch (const UsageError& e) {
    err << "dirk: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NotFoundError& e) {
    err << "dirk: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "dirk: " << e.what() << '\n';
    return kExitUsage;
  } catch (const RangeError& e) {
    err << "dirk: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "dirk: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace dirk::cli
