#pragma once

#include "dirk/error.hpp"
#include "dirk/integrator.hpp"
#include "dirk/problems.hpp"
#include "dirk/tableau.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dirk {

/// Fewer than two usable points for a slope fit.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

struct ConvergencePoint {
  double dt = 0.0;
  /// Error in the problem's norm, at t_end or over the whole trajectory when the problem
  /// asks for it; NaN when the integration failed.
  double error = 0.0;
  bool failed = false;
  std::string note;
};

struct ConvergenceResult {
  std::string scheme;
  std::string problem;
  ErrorNorm norm = ErrorNorm::Max;
  /// Sorted by strictly decreasing dt.
  std::vector<ConvergencePoint> points;
  /// NaN when fewer than two points qualify for the fit.
  double fitted_slope = 0.0;
  std::pair<double, double> slope_window{0.0, 0.0};
  int points_in_fit = 0;
  /// Smallest and largest dt that entered the fit; NaN when nothing did.
  std::pair<double, double> fitted_dt_range{0.0, 0.0};
  std::vector<std::string> notes;
};

/// Sweeps drop points whose error is below this many ulps of the reference norm.
inline constexpr double kFitFloorFactor = 100.0;
/// Below this local slope a sweep is taken to have reached its roundoff plateau; that point
/// and every smaller dt are left out of the fit.
inline constexpr double kPlateauSlope = 1.0;

/// Machine-precision floor and pre-asymptotic ceiling on errors admitted to a fit.
struct FitBounds {
  double error_floor = 0.0;
  double error_ceiling = 1e-2;
};

/// Least-squares slope of log(error) against log(dt) over points with dt in the window and
/// error in [bounds.error_floor, bounds.error_ceiling]. Failed, zero and non-finite points
/// are skipped. Throws InsufficientDataError with fewer than two qualifying points.
double fit_slope(const std::vector<ConvergencePoint>& points, std::pair<double, double> window,
                 const FitBounds& bounds = {});
/// Convenience overload for plain (dt, error) pairs.
double fit_slope(const std::vector<std::pair<double, double>>& points, std::pair<double, double> window,
                 const FitBounds& bounds = {});

struct ReferenceOptions {
  /// Step of the fine run; the check run uses half of it.
  double dt_ref = 1e-3;
  double tolerance = 1e-12;
  /// Empty disables the on-disk cache.
  std::filesystem::path cache_dir;
  /// dt is ignored. The Newton tolerance is tight enough that stage solves stop at the
  /// floating-point floor of the residual.
  StepperConfig stepper = [] {
    StepperConfig c;
    c.newton_tol = 1e-16;
    return c;
  }();
};

/// State at t_end from DIRK(15,8)SA at dt_ref, accepted only if a run at dt_ref/2 agrees to
/// `tolerance` in the problem norm (ReferenceQualityError otherwise). Cached as text keyed
/// by the problem's cache_key() and dt_ref; a cache hit returns the stored state exactly.
Eigen::VectorXd reference_solution(const OdeProblem& problem, const ReferenceOptions& options);

struct SweepOptions {
  /// Overrides the problem's own slope window.
  std::optional<std::pair<double, double>> window;
  /// Worker threads for the (dt) jobs; results do not depend on it.
  int jobs = 1;
  /// Used when the problem has no exact solution. dt_ref = 0 means min(dts)/20.
  ReferenceOptions reference = [] {
    ReferenceOptions r;
    r.dt_ref = 0.0;
    return r;
  }();
  /// Precomputed reference state at t_end; skips reference_solution().
  std::optional<Eigen::VectorXd> reference_state;
};

/// One integration per dt over the problem's default interval, error against the exact or
/// reference solution, slope fitted over the window above the roundoff floor and plateau.
/// Step failures become failed points.
ConvergenceResult run_convergence(const ButcherTableau& scheme, const OdeProblem& problem, std::vector<double> dts,
                                  const StepperConfig& cfg, const SweepOptions& options = {});

/// Header "scheme,problem,dt,error,norm"; failed points carry error "nan".
void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceResult>& results);
/// Header "scheme,problem,slope,dt_min,dt_max,points"; the dt columns give the fitted range.
void write_slope_csv(std::ostream& os, const std::vector<ConvergenceResult>& results);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace dirk
