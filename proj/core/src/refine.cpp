#include "dirk/refine.hpp"

#include "dirk/conditions.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <ostream>

namespace dirk {

RefineSpec default_refine_spec(const ButcherTableau& t) {
  RefineSpec spec;
  spec.target_order = t.order();
  spec.tie_b_to_last_row = t.is_stiffly_accurate();
  const int s = t.stages();
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j <= i; ++j) {
      if (t.a(i, j) == 0.0) spec.fixed.insert({i, j});
    }
  }
  for (int j = 0; j < s; ++j) {
    if (t.b()(j) == 0.0) spec.fixed.insert({s, j});
  }
  return spec;
}

std::vector<CoefficientPosition> free_variables(const ButcherTableau& t, const RefineSpec& spec) {
  const int s = t.stages();
  std::vector<CoefficientPosition> vars;
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j <= i; ++j) {
      if (!spec.fixed.count({i, j})) vars.push_back({i, j});
    }
  }
  if (!spec.tie_b_to_last_row) {
    for (int j = 0; j < s; ++j) {
      if (!spec.fixed.count({s, j})) vars.push_back({s, j});
    }
  }
  return vars;
}

namespace {

void validate(const ButcherTableau& t, const RefineSpec& spec) {
  if (!t.is_dirk()) throw UnsupportedError("refinement works on DIRK tableaus only");
  if (spec.target_order < 1 || spec.target_order > 8) throw RangeError("refinement target order must be in 1..8");
  if (spec.max_iterations < 1) throw RangeError("max_iterations must be at least 1");
  if (!(spec.convergence_tol > 0.0)) throw RangeError("convergence_tol must be positive");
  const int s = t.stages();
  for (const auto& [i, j] : spec.fixed) {
    const bool in_a = i >= 0 && i < s && j >= 0 && j <= i;
    const bool in_b = i == s && j >= 0 && j < s;
    if (!in_a && !in_b) throw RangeError("fixed position outside the lower triangle and b");
  }
}

class Problem {
 public:
  Problem(const ButcherTableau& t, const RefineSpec& spec)
      : base_(t), spec_(spec), vars_(free_variables(t, spec)) {}

  int size() const { return static_cast<int>(vars_.size()); }

  Eigen::VectorXd initial() const {
    Eigen::VectorXd x(size());
    for (int k = 0; k < size(); ++k) x(k) = value(base_, vars_[k]);
    return x;
  }

  ButcherTableau build(const Eigen::VectorXd& x) const {
    const int s = base_.stages();
    Eigen::MatrixXd a = base_.A();
    Eigen::VectorXd b = base_.b();
    for (int k = 0; k < size(); ++k) {
      const auto [i, j] = vars_[k];
      if (i < s) {
        a(i, j) = x(k);
      } else {
        b(j) = x(k);
      }
    }
    if (spec_.tie_b_to_last_row) b = a.row(s - 1).transpose();
    return base_.with_coefficients(a, b);
  }

  Eigen::VectorXd residuals(const Eigen::VectorXd& x) const {
    const auto r = stacked_residuals(build(x), spec_.target_order);
    return Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& r0) const {
    Eigen::MatrixXd jac(r0.size(), size());
    Eigen::VectorXd xp = x;
    for (int k = 0; k < size(); ++k) {
      const double h = 1e-7 * (1.0 + std::abs(x(k)));
      xp(k) = x(k) + h;
      const double step = xp(k) - x(k);  // representable step
      jac.col(k) = (residuals(xp) - r0) / step;
      xp(k) = x(k);
    }
    return jac;
  }

 private:
  static double value(const ButcherTableau& t, CoefficientPosition p) {
    return p.first < t.stages() ? t.a(p.first, p.second) : t.b()(p.second);
  }

  const ButcherTableau& base_;
  const RefineSpec& spec_;
  std::vector<CoefficientPosition> vars_;
};

double sup(const Eigen::VectorXd& r) { return r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace

RefineResult polish(const ButcherTableau& t, const RefineSpec& spec) {
  validate(t, spec);
  const Problem prob(t, spec);
  Eigen::VectorXd x = prob.initial();
  Eigen::VectorXd r = prob.residuals(x);
  double res = sup(r);

  RefineResult out{t, res, res, 0, false, {}, false};
  if (res <= spec.convergence_tol) {
    out.converged = true;
    return out;
  }
  if (res > kRefineMaxInitialResidual) {
    throw RefinePreconditionError("initial residual " + sci(res) + " exceeds " + sci(kRefineMaxInitialResidual) +
                                      "; refinement is a local method",
                                  res);
  }
  if (prob.size() == 0) {
    out.iterations = 0;
    return out;
  }

  double mu = 1e-3;
  int rejects = 0;
  Eigen::MatrixXd jac = prob.jacobian(x, r);
  const int n = prob.size();
  for (int iter = 1; iter <= spec.max_iterations; ++iter) {
    out.iterations = iter;
    // min ||r + J d||^2 + mu ||d||^2 via QR of the stacked system.
    Eigen::MatrixXd aug(jac.rows() + n, n);
    aug << jac, std::sqrt(mu) * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(jac.rows() + n);
    rhs << -r, Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd d = aug.householderQr().solve(rhs);

    const Eigen::VectorXd x_try = x + d;
    const Eigen::VectorXd r_try = prob.residuals(x_try);
    const double res_try = sup(r_try);
    const bool accept = std::isfinite(res_try) && res_try < res;
    out.log.push_back({iter, res_try, mu, accept});
    if (accept) {
      x = x_try;
      r = r_try;
      res = res_try;
      out.tableau = prob.build(x);
      out.final_residual = res;
      mu /= 10.0;
      rejects = 0;
      if (res <= spec.convergence_tol) {
        out.converged = true;
        return out;
      }
      jac = prob.jacobian(x, r);
    } else {
      mu *= 10.0;
      if (++rejects >= 5) {
        throw StagnationError("refinement stagnated at residual " + sci(res) + " after " + std::to_string(iter) +
                                  " iterations",
                              out);
      }
    }
  }
  return out;
}

AStabilityVerdict a_stability_guard(const ButcherTableau& refined) {
  try {
    return a_stability_check(refined);
  } catch (const DegenerateStabilityFunction&) {
    AStabilityVerdict v;
    v.a_stable = false;
    return v;
  }
}

AStabilityVerdict a_stability_guard(RefineResult& result) {
  auto v = a_stability_guard(result.tableau);
  result.stability_verified = v.a_stable;
  return v;
}

void write_refine_log(std::ostream& os, const RefineResult& result) {
  os << "iteration,residual,damping,accepted\n";
  char buf[96];
  for (const auto& e : result.log) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.3g,%d\n", e.iteration, e.residual, e.damping, e.accepted ? 1 : 0);
    os << buf;
  }
}

}  // namespace dirk
