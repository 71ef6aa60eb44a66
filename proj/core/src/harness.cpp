#include "dirk/harness.hpp"

#include "dirk/csv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace dirk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::optional<Eigen::VectorXd> read_cache(const std::filesystem::path& file, const std::string& key) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != "key " + key) return std::nullopt;
  int n = 0;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "n %d", &n) != 1 || n < 0) return std::nullopt;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(in, line)) return std::nullopt;
    char* end = nullptr;
    v(i) = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) return std::nullopt;
  }
  return v;
}

void write_cache(const std::filesystem::path& file, const std::string& key, const Eigen::VectorXd& v) {
  std::filesystem::create_directories(file.parent_path());
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write reference cache " + tmp);
    out << "key " << key << '\n' << "n " << v.size() << '\n';
    for (int i = 0; i < v.size(); ++i) out << format17(v(i)) << '\n';
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace

double fit_slope(const std::vector<ConvergencePoint>& points, std::pair<double, double> window,
                 const FitBounds& bounds) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (const auto& p : points) {
    if (p.failed || !std::isfinite(p.error) || p.error <= 0.0 || !(p.dt > 0.0)) continue;
    if (p.dt < window.first || p.dt > window.second) continue;
    if (p.error < bounds.error_floor || p.error > bounds.error_ceiling) continue;
    const double x = std::log(p.dt);
    const double y = std::log(p.error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw InsufficientDataError("slope fit needs at least two points in the window");
  const double denom = n * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) throw InsufficientDataError("slope fit needs two distinct step sizes");
  return (n * sxy - sx * sy) / denom;
}

double fit_slope(const std::vector<std::pair<double, double>>& points, std::pair<double, double> window,
                 const FitBounds& bounds) {
  std::vector<ConvergencePoint> pts;
  pts.reserve(points.size());
  for (const auto& [dt, err] : points) pts.push_back({dt, err, false, {}});
  return fit_slope(pts, window, bounds);
}

Eigen::VectorXd reference_solution(const OdeProblem& problem, const ReferenceOptions& options) {
  if (!(options.dt_ref > 0.0)) throw RangeError("reference step must be positive");
  const std::string key = problem.cache_key() + " dt_ref=" + format17(options.dt_ref);
  std::filesystem::path file;
  if (!options.cache_dir.empty()) {
    char name[40];
    std::snprintf(name, sizeof name, "ref-%016llx.txt", static_cast<unsigned long long>(fnv1a(key)));
    file = options.cache_dir / name;
    std::lock_guard lock(cache_mutex());
    if (auto hit = read_cache(file, key)) return *hit;
  }

  const ButcherTableau scheme = load_builtin("DIRK(15,8)SA");
  StepperConfig cfg = options.stepper;
  cfg.dt = options.dt_ref;
  const Eigen::VectorXd coarse = integrate(scheme, problem, problem.t0, problem.y0, problem.t_end, cfg).y;
  cfg.dt = options.dt_ref / 2.0;
  const Eigen::VectorXd fine = integrate(scheme, problem, problem.t0, problem.y0, problem.t_end, cfg).y;
  const double diff = problem.error(coarse, fine);
  if (!(diff <= options.tolerance)) {
    throw ReferenceQualityError("reference for '" + problem.name + "' at dt " + format17(options.dt_ref) +
                                    " differs from the half-step run by " + format17(diff),
                                diff);
  }

  if (!file.empty()) {
    std::lock_guard lock(cache_mutex());
    write_cache(file, key, fine);
    // Return what a later cache hit would return.
    if (auto stored = read_cache(file, key)) return *stored;
  }
  return fine;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(jobs, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

ConvergenceResult run_convergence(const ButcherTableau& scheme, const OdeProblem& problem, std::vector<double> dts,
                                  const StepperConfig& cfg, const SweepOptions& options) {
  if (dts.empty()) throw RangeError("convergence sweep needs at least one step size");
  for (double dt : dts) {
    if (!(dt > 0.0)) throw RangeError("step sizes must be positive");
  }
  std::sort(dts.begin(), dts.end(), std::greater<>());
  dts.erase(std::unique(dts.begin(), dts.end()), dts.end());

  ConvergenceResult res;
  res.scheme = scheme.name();
  res.problem = problem.name;
  res.norm = problem.error_norm;
  res.slope_window = options.window.value_or(problem.slope_window);

  Eigen::VectorXd reference;
  if (problem.exact_solution) {
    reference = (*problem.exact_solution)(problem.t_end);
  } else if (options.reference_state) {
    reference = *options.reference_state;
  } else {
    ReferenceOptions ro = options.reference;
    if (!(ro.dt_ref > 0.0)) ro.dt_ref = dts.back() / 20.0;
    reference = reference_solution(problem, ro);
  }

  res.points.resize(dts.size());
  parallel_for(static_cast<int>(dts.size()), options.jobs, [&](int i) {
    ConvergencePoint& pt = res.points[i];
    pt.dt = dts[i];
    StepperConfig c = cfg;
    c.dt = dts[i];
    try {
      double worst = 0.0;
      StepCallback track;
      if (problem.error_over_trajectory && problem.exact_solution) {
        track = [&](double t, const Eigen::VectorXd& y) {
          worst = std::max(worst, problem.error(y, (*problem.exact_solution)(t)));
        };
      }
      const auto out = integrate(scheme, problem, problem.t0, problem.y0, problem.t_end, c, nullptr, track);
      pt.error = track ? std::max(worst, problem.error(out.y, reference)) : problem.error(out.y, reference);
      if (!std::isfinite(pt.error)) {
        pt.failed = true;
        pt.error = kNaN;
        pt.note = "non-finite solution";
      }
    } catch (const Error& e) {
      pt.failed = true;
      pt.error = kNaN;
      pt.note = e.what();
    }
  });

  for (const auto& pt : res.points) {
    if (!pt.failed && pt.error == 0.0) res.notes.push_back("zero error at dt " + format17(pt.dt) + " left out of the fit");
    if (pt.failed) res.notes.push_back("dt " + format17(pt.dt) + " failed: " + pt.note);
  }

  FitBounds bounds;
  bounds.error_floor = kFitFloorFactor * std::numeric_limits<double>::epsilon() * problem.norm(reference);
  auto usable = [&](const ConvergencePoint& pt) {
    return !pt.failed && pt.error > 0.0 && std::isfinite(pt.error) && pt.dt >= res.slope_window.first &&
           pt.dt <= res.slope_window.second && pt.error >= bounds.error_floor && pt.error <= bounds.error_ceiling;
  };
  std::vector<ConvergencePoint> fit_points;
  const ConvergencePoint* prev = nullptr;
  for (const auto& pt : res.points) {
    if (!usable(pt)) continue;
    if (prev && std::log(prev->error / pt.error) < kPlateauSlope * std::log(prev->dt / pt.dt)) {
      res.notes.push_back("roundoff plateau from dt " + format17(pt.dt) + "; smaller steps left out of the fit");
      break;
    }
    fit_points.push_back(pt);
    prev = &fit_points.back();
  }
  res.points_in_fit = static_cast<int>(fit_points.size());
  res.fitted_dt_range = fit_points.empty() ? std::make_pair(kNaN, kNaN)
                                           : std::make_pair(fit_points.back().dt, fit_points.front().dt);
  try {
    res.fitted_slope = fit_slope(fit_points, res.slope_window, bounds);
  } catch (const InsufficientDataError& e) {
    res.fitted_slope = kNaN;
    res.notes.emplace_back(e.what());
  }
  return res;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceResult>& results) {
  os << "scheme,problem,dt,error,norm\n";
  for (const auto& r : results) {
    for (const auto& p : r.points) {
      os << csv_field(r.scheme) << ',' << csv_field(r.problem) << ',' << format17(p.dt) << ',' << (p.failed ? "nan" : format17(p.error))
         << ',' << to_string(r.norm) << '\n';
    }
  }
}

void write_slope_csv(std::ostream& os, const std::vector<ConvergenceResult>& results) {
  os << "scheme,problem,slope,dt_min,dt_max,points\n";
  for (const auto& r : results) {
    os << csv_field(r.scheme) << ',' << csv_field(r.problem) << ',' << format17(r.fitted_slope) << ',' << format17(r.fitted_dt_range.first)
       << ',' << format17(r.fitted_dt_range.second) << ',' << r.points_in_fit << '\n';
  }
}

}  // namespace dirk
