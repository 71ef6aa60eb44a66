#include "dirk/conditions.hpp"

#include "dirk/compensated.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace dirk {

namespace {

Eigen::VectorXd apply_a(const ButcherTableau& t, const Eigen::VectorXd& v) {
  const int s = t.stages();
  const Eigen::MatrixXd& a = t.A();
  Eigen::VectorXd out(s);
  // A is column-major; copy each row once so dot2 walks contiguous memory.
  Eigen::RowVectorXd row(s);
  for (int i = 0; i < s; ++i) {
    row = a.row(i);
    out(i) = dot2(row.data(), v.data(), static_cast<std::size_t>(s));
  }
  return out;
}

double raw_residual(const ButcherTableau& t, const RootedTree& tree) {
  const Eigen::VectorXd phi = elementary_weights(t, tree);
  const double weight = dot2(t.b().data(), phi.data(), static_cast<std::size_t>(t.stages()));
  return weight - 1.0 / static_cast<double>(tree.density());
}

}  // namespace

Eigen::VectorXd elementary_weights(const ButcherTableau& t, const RootedTree& tree) {
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(t.stages());
  for (const auto& child : tree.children()) {
    phi = phi.cwiseProduct(apply_a(t, elementary_weights(t, child)));
  }
  return phi;
}

double residual(const ButcherTableau& t, const RootedTree& tree) {
  return raw_residual(t, tree) / static_cast<double>(tree.symmetry());
}

double unweighted_residual(const ButcherTableau& t, const RootedTree& tree) { return raw_residual(t, tree); }

std::vector<double> residuals_of_order(const ButcherTableau& t, int q, bool sigma_weighted) {
  const auto& trees = trees_of_order(q);
  std::vector<double> out;
  out.reserve(trees.size());
  for (const auto& tree : trees) out.push_back(sigma_weighted ? residual(t, tree) : unweighted_residual(t, tree));
  return out;
}

std::vector<double> stacked_residuals(const ButcherTableau& t, int p) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cumulative_condition_count(p)));
  for (int q = 1; q <= p; ++q) {
    for (const auto& tree : trees_of_order(q)) out.push_back(residual(t, tree));
  }
  return out;
}

double max_coefficient(const ButcherTableau& t) {
  return std::max({t.A().cwiseAbs().maxCoeff(), t.b().cwiseAbs().maxCoeff(), t.c().cwiseAbs().maxCoeff()});
}

namespace {

std::vector<double> stage_order_residuals(const ButcherTableau& t, int kmax) {
  const int s = t.stages();
  const Eigen::VectorXd& c = t.c();
  std::vector<double> out;
  Eigen::VectorXd cpow = Eigen::VectorXd::Ones(s);  // c^{k-1}
  for (int k = 1; k <= kmax; ++k) {
    const Eigen::VectorXd ac = apply_a(t, cpow);
    double worst = 0.0;
    for (int i = 0; i < s; ++i) {
      const double ck = std::pow(c(i), k);
      worst = std::max(worst, std::abs(ac(i) - ck / k));
    }
    out.push_back(worst);
    cpow = cpow.cwiseProduct(c);
  }
  return out;
}

// Pairwise summation keeps the norm reduction order fixed.
double pairwise_sum_squares(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += x[k] * x[k];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum_squares(x, h) + pairwise_sum_squares(x + h, n - h);
}

double l2(const std::vector<double>& v) { return std::sqrt(pairwise_sum_squares(v.data(), v.size())); }

double linf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

int stage_order(const ButcherTableau& t, double tol) {
  const auto res = stage_order_residuals(t, kMaxTreeOrder);
  int r = 0;
  while (r < static_cast<int>(res.size()) && res[r] <= tol) ++r;
  return r;
}

OrderReport verify_order(const ButcherTableau& t, const VerifyOptions& options) {
  OrderReport rep;
  rep.scheme = t.name();
  rep.declared_order = t.order();
  rep.tolerance_used = options.tolerance;
  rep.stage_tolerance_used = options.stage_tolerance;

  const int qmax = std::min(t.order() + 2, kMaxTreeOrder);
  for (int q = 1; q <= qmax; ++q) rep.residuals[q] = residuals_of_order(t, q);

  rep.achieved_order = 0;
  for (int q = 1; q <= qmax; ++q) {
    if (linf(rep.residuals[q]) > options.tolerance) break;
    rep.achieved_order = q;
  }

  for (int k = t.order() + 1; k <= std::min(t.order() + 2, kMaxTreeOrder); ++k) {
    ErrorNorms n;
    n.order = k;
    n.l2 = l2(rep.residuals[k]);
    n.linf = linf(rep.residuals[k]);
    const auto raw = residuals_of_order(t, k, false);
    n.l2_unweighted = l2(raw);
    n.linf_unweighted = linf(raw);
    rep.error_norms.push_back(n);
  }

  rep.stage_residuals = stage_order_residuals(t, kMaxTreeOrder);
  rep.stage_order = 0;
  while (rep.stage_order < static_cast<int>(rep.stage_residuals.size()) &&
         rep.stage_residuals[rep.stage_order] <= options.stage_tolerance) {
    ++rep.stage_order;
  }
  rep.max_coefficient = max_coefficient(t);
  return rep;
}

double OrderReport::max_residual_through(int q) const {
  double m = 0.0;
  for (const auto& [order, values] : residuals) {
    if (order <= q) m = std::max(m, linf(values));
  }
  return m;
}

const ErrorNorms* OrderReport::norms_at(int order) const {
  for (const auto& n : error_norms) {
    if (n.order == order) return &n;
  }
  return nullptr;
}

void write_report(std::ostream& os, const OrderReport& r) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << "scheme          " << r.scheme << '\n';
  os << "declared order  " << r.declared_order << '\n';
  os << "achieved order  " << r.achieved_order << "  (tol " << std::scientific << std::setprecision(1)
     << r.tolerance_used << ")\n";
  os << "stage order     " << r.stage_order << "  (tol " << r.stage_tolerance_used << ")\n";
  os << std::setprecision(3);
  for (const auto& [q, values] : r.residuals) {
    os << "  order " << std::setw(2) << q << ": " << std::setw(4) << values.size()
       << " conditions, max |tau| = " << linf(values) << '\n';
  }
  for (const auto& n : r.error_norms) {
    os << "E2(" << n.order << ") = " << n.l2 << "  Einf(" << n.order << ") = " << n.linf << '\n';
  }
  os << "D = " << r.max_coefficient << '\n';
  os.flags(flags);
  os.precision(prec);
}

void write_residual_csv(std::ostream& os, const OrderReport& r) {
  const auto prec = os.precision();
  os << "order,tree_index,residual\n" << std::setprecision(17);
  for (const auto& [q, values] : r.residuals) {
    for (std::size_t j = 0; j < values.size(); ++j) os << q << ',' << j << ',' << values[j] << '\n';
  }
  os.precision(prec);
}

}  // namespace dirk
