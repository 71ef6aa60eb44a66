#include "dirk/integrator.hpp"

#include "dirk/error.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <string>

namespace dirk {

const char* to_string(JacobianReuse r) {
  switch (r) {
    case JacobianReuse::EveryIteration: return "every-iteration";
    case JacobianReuse::PerStage: return "per-stage";
    case JacobianReuse::PerStep: return "per-step";
  }
  return "?";
}

void StepperConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw RangeError("dt must be positive");
  if (!(newton_tol > 0.0)) throw RangeError("newton_tol must be positive");
  if (newton_max_iters < 1) throw RangeError("newton_max_iters must be at least 1");
}

SolveTrace& SolveTrace::operator+=(const SolveTrace& o) {
  steps_taken += o.steps_taken;
  total_newton_iters += o.total_newton_iters;
  max_newton_iters_in_a_stage = std::max(max_newton_iters_in_a_stage, o.max_newton_iters_in_a_stage);
  divergence_events += o.divergence_events;
  final_step_shortened = final_step_shortened || o.final_step_shortened;
  return *this;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

LinearSolverKind resolve_solver(const OdeProblem& p, LinearSolverKind requested) {
  if (requested == LinearSolverKind::Auto) return p.default_solver();
  if (requested == LinearSolverKind::Tridiagonal && p.structure != JacobianStructure::Tridiagonal &&
      p.dimension > 1) {
    throw UnsupportedError("tridiagonal solver requested for a problem with " +
                           std::string(to_string(p.structure)) + " Jacobian");
  }
  return requested;
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

DirkStepper::DirkStepper(const ButcherTableau& tableau, const OdeProblem& problem, const StepperConfig& cfg)
    : tab_(tableau), prob_(problem), cfg_(cfg) {
  cfg_.validate();
  if (!tab_.is_dirk()) throw UnsupportedError("'" + tab_.name() + "' is not a DIRK tableau");
  if (prob_.dimension < 1 || prob_.y0.size() != prob_.dimension) {
    throw RangeError("problem '" + prob_.name + "' has inconsistent dimension");
  }
  solver_ = make_stage_solver(resolve_solver(prob_, cfg_.linear_solver));
  jac_ = prob_.jacobian_shape();
  k_.assign(tab_.stages(), Eigen::VectorXd(prob_.dimension));
  known_.resize(prob_.dimension);
  u_.resize(prob_.dimension);
  g_.resize(prob_.dimension);
  f_.resize(prob_.dimension);
  delta_.resize(prob_.dimension);
  const int s = tab_.stages();
  stage_weight_.assign(s, 1.0);
  for (int i = 0; i < s; ++i) {
    const double aii = std::abs(tab_.A()(i, i));
    if (aii == 0.0) continue;
    double w = std::abs(tab_.b()(i)) / aii;
    for (int j = i + 1; j < s; ++j) w = std::max(w, std::abs(tab_.A()(j, i)) / aii);
    stage_weight_[i] = std::max(1.0, w);
  }
}

DirkStepper::~DirkStepper() = default;

void DirkStepper::factor(double t, const Eigen::VectorXd& at, double gamma) {
  if (cfg_.jacobian_reuse != JacobianReuse::PerStep) {
    jac_.set_zero();
    prob_.jacobian(t, at, jac_);
  }
  solver_->factor(jac_, gamma);
  jac_norm_ = jac_.inf_norm();
  factored_gamma_ = gamma;
  have_factor_ = true;
}

void DirkStepper::solve_stage(int i, double ti, double gamma, Eigen::VectorXd& z, SolveTrace& trace) {
  // Newton on the increment z = u - known, G(z) = z - gamma f(ti, known + z). Keeping z
  // as the unknown lets k = z / gamma retain full relative accuracy even for tiny gamma,
  // where forming u first and subtracting known again would cancel.
  const auto reuse = cfg_.jacobian_reuse;
  Eigen::VectorXd& u = u_;
  u = known_ + z;
  if (reuse == JacobianReuse::PerStage) factor(ti, u, gamma);
  if (reuse == JacobianReuse::PerStep && (!have_factor_ || factored_gamma_ != gamma)) factor(ti, u, gamma);

  double prev = std::numeric_limits<double>::infinity();
  auto finish = [&](int n) {
    trace.total_newton_iters += n;
    trace.max_newton_iters_in_a_stage = std::max(trace.max_newton_iters_in_a_stage, n);
  };
  for (int it = 1; it <= cfg_.newton_max_iters + 1; ++it) {
    prob_.rhs(ti, u, f_);
    g_ = z - gamma * f_;
    const double r = inf_norm(g_);
    if (cfg_.newton_observer) cfg_.newton_observer(i + 1, it, r);
    if (!std::isfinite(r)) throw StepFailure("Newton residual is not finite", i + 1, r);
    if (r > prev) ++trace.divergence_events;
    prev = r;

    // At least one update, so that an unrefined predictor never yields k = 0 when gamma
    // is tiny. The residual test never asks for more than G can resolve in floating point.
    const int updates = it - 1;
    const double bound = cfg_.newton_tol * (1.0 + inf_norm(u)) / stage_weight_[i];
    const double resolvable = 8.0 * kEps * (inf_norm(z) + gamma * (inf_norm(f_) + jac_norm_ * inf_norm(u)));
    if (updates > 0 && r <= std::max(bound, resolvable)) {
      finish(updates);
      return;
    }
    if (updates == cfg_.newton_max_iters) break;

    if (reuse == JacobianReuse::EveryIteration) factor(ti, u, gamma);
    delta_ = g_;
    solver_->solve(delta_);
    z -= delta_;
    u = known_ + z;
    if (inf_norm(delta_) <= cfg_.newton_tol * (1.0 + inf_norm(u)) / stage_weight_[i]) {
      finish(updates + 1);
      return;
    }
  }
  throw StepFailure("Newton did not converge in stage " + std::to_string(i + 1) + " (residual " +
                        std::to_string(prev) + ")",
                    i + 1, prev);
}

void DirkStepper::step(double tn, Eigen::VectorXd& y, SolveTrace& trace, double h) {
  if (h <= 0.0) h = cfg_.dt;
  const int s = tab_.stages();
  if (cfg_.jacobian_reuse == JacobianReuse::PerStep) {
    jac_.set_zero();
    prob_.jacobian(tn, y, jac_);
    have_factor_ = false;
  }

  Eigen::VectorXd z(prob_.dimension);
  for (int i = 0; i < s; ++i) {
    const double ti = tn + tab_.c()(i) * h;
    known_ = y;
    for (int j = 0; j < i; ++j) {
      if (tab_.a(i, j) != 0.0) known_ += (h * tab_.a(i, j)) * k_[j];
    }
    const double aii = tab_.a(i, i);
    if (aii == 0.0) {
      u_ = known_;
      prob_.rhs(ti, u_, k_[i]);
      continue;
    }
    const double gamma = h * aii;
    z.setZero();
    solve_stage(i, ti, gamma, z, trace);
    // Stage derivative from the stage equation, so stiffly accurate schemes reproduce the
    // last stage in the update below.
    k_[i] = z / gamma;
  }

  Eigen::VectorXd next = y;
  double scale = inf_norm(y);
  for (int i = 0; i < s; ++i) {
    if (tab_.b()(i) == 0.0) continue;
    const double w = h * tab_.b()(i);
    next += w * k_[i];
    scale += std::abs(w) * inf_norm(k_[i]);
  }
  if (tab_.is_stiffly_accurate()) {
    const double diff = inf_norm(next - u_);
    if (diff > 1e-12 * std::max(scale, std::numeric_limits<double>::min())) {
      throw StepFailure("stiffly accurate update differs from the last stage by " + std::to_string(diff), s, diff);
    }
  }
  y = std::move(next);
  ++trace.steps_taken;
}

StepResult dirk_step(const ButcherTableau& t, const OdeProblem& f, double tn, const Eigen::VectorXd& yn,
                     const StepperConfig& cfg) {
  DirkStepper stepper(t, f, cfg);
  StepResult out{yn, {}};
  stepper.step(tn, out.y, out.trace);
  return out;
}

IntegrateResult integrate(const ButcherTableau& t, const OdeProblem& f, double t0, const Eigen::VectorXd& y0,
                          double t_end, const StepperConfig& cfg, std::ostream* trajectory,
                          const StepCallback& on_step) {
  cfg.validate();
  if (t_end < t0) throw RangeError("integrate needs t_end >= t0");
  if (y0.size() != f.dimension) throw RangeError("initial state has the wrong dimension");
  IntegrateResult out{y0, {}};

  auto dump = [&](double time) {
    if (on_step && time != t0) on_step(time, out.y);
    if (!trajectory) return;
    *trajectory << time;
    for (int i = 0; i < out.y.size(); ++i) *trajectory << ',' << out.y(i);
    *trajectory << '\n';
  };
  struct PrecisionGuard {
    std::ostream* os;
    std::streamsize saved;
    ~PrecisionGuard() {
      if (os) os->precision(saved);
    }
  } guard{trajectory, trajectory ? trajectory->precision(17) : 0};
  if (trajectory) {
    *trajectory << 't';
    for (int i = 1; i <= f.dimension; ++i) *trajectory << ",y" << i;
    *trajectory << '\n';
  }
  dump(t0);
  if (t_end == t0) return out;

  DirkStepper stepper(t, f, cfg);
  const double span = t_end - t0;
  const double ratio = span / cfg.dt;
  const double n_round = std::round(ratio);
  long k = 0;
  try {
    if (n_round >= 1.0 && std::abs(ratio - n_round) <= 1e-9 * n_round) {
      const long n = static_cast<long>(n_round);
      for (k = 0; k < n; ++k) {
        const double ta = t0 + span * static_cast<double>(k) / static_cast<double>(n);
        const double tb = k + 1 == n ? t_end : t0 + span * static_cast<double>(k + 1) / static_cast<double>(n);
        stepper.step(ta, out.y, out.trace, tb - ta);
        dump(tb);
      }
    } else {
      const long n_full = static_cast<long>(std::floor(ratio));
      for (k = 0; k < n_full; ++k) {
        const double ta = t0 + static_cast<double>(k) * cfg.dt;
        stepper.step(ta, out.y, out.trace, cfg.dt);
        dump(ta + cfg.dt);
      }
      const double t_last = t0 + static_cast<double>(n_full) * cfg.dt;
      if (t_end - t_last > 0.0) {
        stepper.step(t_last, out.y, out.trace, t_end - t_last);
        out.trace.final_step_shortened = true;
        dump(t_end);
      }
    }
  } catch (StepFailure& e) {
    e.set_step_index(k);
    throw;
  }
  return out;
}

double perturbation_experiment(const ButcherTableau& t, double eps_scale, std::complex<double> lambda, double dt,
                               int n_steps, std::uint64_t seed) {
  using cd = std::complex<double>;
  if (lambda.real() > 0.0) throw RangeError("perturbation experiment needs Re(lambda) <= 0");
  if (eps_scale < 0.0 || !(dt > 0.0) || n_steps < 0) throw RangeError("invalid perturbation experiment arguments");
  if (!t.is_dirk()) throw UnsupportedError("perturbation experiment needs a DIRK tableau");

  const int s = t.stages();
  Eigen::MatrixXd a = t.A();
  Eigen::VectorXd b = t.b();
  Eigen::MatrixXd ap = a;
  Eigen::VectorXd bp = b;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j <= i; ++j) ap(i, j) += eps_scale * noise(rng);
  }
  for (int i = 0; i < s; ++i) bp(i) += eps_scale * noise(rng);

  const cd z = lambda * dt;
  std::vector<cd> u(s);
  auto advance = [&](const Eigen::MatrixXd& m, const Eigen::VectorXd& w, cd y) {
    cd acc = 0.0;
    for (int i = 0; i < s; ++i) {
      cd sum = 0.0;
      for (int j = 0; j < i; ++j) sum += m(i, j) * u[j];
      u[i] = (y + z * sum) / (1.0 - z * m(i, i));
      acc += w(i) * u[i];
    }
    return y + z * acc;
  };

  cd y = 1.0;
  cd yp = 1.0;
  double worst = 0.0;
  for (int n = 0; n < n_steps; ++n) {
    y = advance(a, b, y);
    yp = advance(ap, bp, yp);
    if (std::abs(y) > 0.0) worst = std::max(worst, std::abs(yp - y) / std::abs(y));
  }
  return worst;
}

}  // namespace dirk
