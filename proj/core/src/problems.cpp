#include "dirk/problems.hpp"

#include "dirk/error.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace dirk {

using std::numbers::pi;

const char* to_string(JacobianStructure s) {
  switch (s) {
    case JacobianStructure::Dense: return "dense";
    case JacobianStructure::Tridiagonal: return "tridiagonal";
    case JacobianStructure::Banded: return "banded";
  }
  return "?";
}

const char* to_string(ErrorNorm n) { return n == ErrorNorm::Max ? "max" : "rms"; }

Eigen::VectorXd OdeProblem::eval_rhs(double t, const Eigen::VectorXd& y) const {
  Eigen::VectorXd dy(dimension);
  rhs(t, y, dy);
  return dy;
}

BandMatrix OdeProblem::jacobian_shape() const {
  switch (structure) {
    case JacobianStructure::Dense: return BandMatrix(dimension, dimension - 1, dimension - 1);
    case JacobianStructure::Tridiagonal: {
      const int k = std::min(1, dimension - 1);
      return BandMatrix(dimension, k, k);
    }
    case JacobianStructure::Banded: return BandMatrix(dimension, bandwidth, bandwidth);
  }
  throw RangeError("unknown Jacobian structure");
}

BandMatrix OdeProblem::eval_jacobian(double t, const Eigen::VectorXd& y) const {
  BandMatrix jac = jacobian_shape();
  jacobian(t, y, jac);
  return jac;
}

double OdeProblem::norm(const Eigen::VectorXd& y) const {
  if (y.size() == 0) return 0.0;
  if (error_norm == ErrorNorm::Max) return y.lpNorm<Eigen::Infinity>();
  return std::sqrt(y.squaredNorm() / static_cast<double>(y.size()));
}

double OdeProblem::error(const Eigen::VectorXd& y, const Eigen::VectorXd& reference) const {
  return norm(y - reference);
}

LinearSolverKind OdeProblem::default_solver() const {
  switch (structure) {
    case JacobianStructure::Dense: return LinearSolverKind::DenseLU;
    case JacobianStructure::Tridiagonal: return LinearSolverKind::Tridiagonal;
    case JacobianStructure::Banded: return LinearSolverKind::Banded;
  }
  return LinearSolverKind::DenseLU;
}

std::string OdeProblem::cache_key() const {
  char buf[64];
  std::ostringstream os;
  os << name << " m=" << dimension;
  std::snprintf(buf, sizeof buf, " t0=%.17g t_end=%.17g", t0, t_end);
  os << buf;
  for (const auto& [k, v] : parameters) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ' ' << k << '=' << buf;
  }
  return os.str();
}

OdeProblem prothero_robinson(double mu) {
  if (!(mu < 0.0)) throw RangeError("Prothero-Robinson needs mu < 0");
  auto g = [](double t) { return std::exp(-t) * std::cos(20.0 * t) + std::sin(10.0 * t); };
  auto dg = [](double t) {
    return -std::exp(-t) * std::cos(20.0 * t) - 20.0 * std::exp(-t) * std::sin(20.0 * t) + 10.0 * std::cos(10.0 * t);
  };
  OdeProblem p;
  p.name = "prothero-robinson";
  p.dimension = 1;
  p.rhs = [=](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy(0) = mu * (y(0) - g(t)) + dg(t); };
  p.jacobian = [=](double, const Eigen::VectorXd&, BandMatrix& jac) { jac.at(0, 0) = mu; };
  p.exact_solution = [=](double t) { return Eigen::VectorXd::Constant(1, g(t)); };
  p.t0 = 0.0;
  p.t_end = 10.0;
  p.y0 = Eigen::VectorXd::Constant(1, g(0.0));
  p.error_over_trajectory = true;
  p.parameters = {{"mu", mu}};
  p.slope_window = {0.0, 1.0 / std::abs(mu)};
  return p;
}

OdeProblem van_der_pol(double mu) {
  OdeProblem p;
  p.name = "van-der-pol";
  p.dimension = 2;
  p.rhs = [=](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy(0) = y(1);
    dy(1) = mu * (1.0 - y(0) * y(0)) * y(1) - y(0);
  };
  p.jacobian = [=](double, const Eigen::VectorXd& y, BandMatrix& jac) {
    jac.at(0, 0) = 0.0;
    jac.at(0, 1) = 1.0;
    jac.at(1, 0) = -2.0 * mu * y(0) * y(1) - 1.0;
    jac.at(1, 1) = mu * (1.0 - y(0) * y(0));
  };
  p.t0 = 0.0;
  p.t_end = 10.0;
  p.y0 = Eigen::Vector2d(2.0, 0.0);
  p.parameters = {{"mu", mu}};
  if (mu > 0.0) p.slope_window = {0.0, 1.0 / mu};
  return p;
}

OdeProblem kaps(double epsilon) {
  if (!(epsilon > 0.0)) throw RangeError("Kaps problem needs epsilon > 0");
  const double inv = 1.0 / epsilon;
  OdeProblem p;
  p.name = "kaps";
  p.dimension = 2;
  p.rhs = [=](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy(0) = -(inv + 2.0) * y(0) + inv * y(1) * y(1);
    dy(1) = y(0) - y(1) - y(1) * y(1);
  };
  p.jacobian = [=](double, const Eigen::VectorXd& y, BandMatrix& jac) {
    jac.at(0, 0) = -(inv + 2.0);
    jac.at(0, 1) = 2.0 * inv * y(1);
    jac.at(1, 0) = 1.0;
    jac.at(1, 1) = -1.0 - 2.0 * y(1);
  };
  p.exact_solution = [](double t) { return Eigen::Vector2d(std::exp(-2.0 * t), std::exp(-t)).eval(); };
  p.t0 = 0.0;
  p.t_end = 10.0;
  p.y0 = Eigen::Vector2d(1.0, 1.0);
  p.parameters = {{"epsilon", epsilon}};
  return p;
}

namespace {

/// Quartic-spring elongations d_0..d_m of the FPU chain, with the sign of d_m chosen so
/// that every d_k = x0[k] - x1[k] - x0[k-1] - x1[k-1] (out-of-range terms dropped).
void fpu_elongations(const Eigen::VectorXd& s, int m, std::vector<double>& d) {
  d.assign(m + 1, 0.0);
  for (int k = 0; k <= m; ++k) {
    double v = 0.0;
    if (k < m) v += s(k) - s(m + k);
    if (k >= 1) v -= s(k - 1) + s(m + k - 1);
    d[k] = v;
  }
}

}  // namespace

double fpu_energy(const Eigen::VectorXd& s, double omega, int m) {
  std::vector<double> d;
  fpu_elongations(s, m, d);
  double h = 0.0;
  for (int i = 0; i < m; ++i) {
    h += 0.5 * (s(2 * m + i) * s(2 * m + i) + s(3 * m + i) * s(3 * m + i));
    h += 0.5 * omega * omega * s(m + i) * s(m + i);
  }
  for (double v : d) h += 0.25 * v * v * v * v;
  return h;
}

OdeProblem fermi_pasta_ulam(double omega, int m) {
  if (!(omega > 0.0) || m < 1) throw RangeError("FPU needs omega > 0 and m >= 1");
  OdeProblem p;
  p.name = "fpu";
  p.dimension = 4 * m;
  p.rhs = [=](double, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
    std::vector<double> d;
    fpu_elongations(s, m, d);
    for (int i = 0; i < m; ++i) {
      const double lo = d[i] * d[i] * d[i];
      const double hi = d[i + 1] * d[i + 1] * d[i + 1];
      ds(i) = s(2 * m + i);
      ds(m + i) = s(3 * m + i);
      ds(2 * m + i) = -(lo - hi);
      ds(3 * m + i) = -omega * omega * s(m + i) + lo + hi;
    }
  };
  p.jacobian = [=](double, const Eigen::VectorXd& s, BandMatrix& jac) {
    std::vector<double> d;
    fpu_elongations(s, m, d);
    for (int i = 0; i < m; ++i) {
      jac.at(i, 2 * m + i) = 1.0;
      jac.at(m + i, 3 * m + i) = 1.0;
      jac.at(3 * m + i, m + i) = -omega * omega;
    }
    // Subtract the Hessian of the quartic potential: sum_k 3 d_k^2 grad(d_k) grad(d_k)^T.
    for (int k = 0; k <= m; ++k) {
      std::vector<std::pair<int, double>> grad;
      if (k < m) {
        grad.emplace_back(k, 1.0);
        grad.emplace_back(m + k, -1.0);
      }
      if (k >= 1) {
        grad.emplace_back(k - 1, -1.0);
        grad.emplace_back(m + k - 1, -1.0);
      }
      const double w = 3.0 * d[k] * d[k];
      for (const auto& [r, gr] : grad) {
        for (const auto& [c, gc] : grad) jac.at(2 * m + r, c) -= w * gr * gc;
      }
    }
  };
  p.t0 = 0.0;
  p.t_end = 1.0;
  p.y0 = Eigen::VectorXd::Zero(4 * m);
  p.y0(0) = 1.0;
  p.y0(m) = 1.0 / omega;
  p.y0(2 * m) = 1.0;
  p.y0(3 * m) = 1.0;
  p.error_norm = ErrorNorm::Rms;
  p.parameters = {{"omega", omega}, {"m", static_cast<double>(m)}};
  return p;
}

double heat_spectral_radius(int m) {
  const double dx = 1.0 / m;
  const double s = std::sin((m - 1) * pi * dx / 2.0);
  return 4.0 / (dx * dx) * s * s;
}

Eigen::VectorXd heat_pde_solution(int m, double t) {
  Eigen::VectorXd u(m - 1);
  for (int i = 1; i < m; ++i) u(i - 1) = std::exp(-t / 10.0) * std::sin(pi * i / m);
  return u;
}

OdeProblem heat_equation(int m, bool forcing) {
  if (m < 3) throw RangeError("heat equation needs m >= 3");
  const double dx = 1.0 / m;
  const double inv_dx2 = 1.0 / (dx * dx);
  const int n = m - 1;
  std::vector<double> mode(n);
  for (int i = 1; i < m; ++i) mode[i - 1] = std::sin(pi * i * dx);
  const double amp = forcing ? pi * pi - 0.1 : 0.0;

  // sin(pi x_i) is an eigenvector of the discrete Laplacian with eigenvalue -kappa, so the
  // semidiscrete solution stays a(t) sin(pi x_i) with a' = -kappa a + amp exp(-t/10).
  const double s = std::sin(pi * dx / 2.0);
  const double kappa = 4.0 * inv_dx2 * s * s;
  const double coef = amp / (kappa - 0.1);

  OdeProblem p;
  p.name = forcing ? "heat" : "heat-unforced";
  p.dimension = n;
  p.rhs = [=](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    const double g = amp * std::exp(-t / 10.0);
    for (int i = 0; i < n; ++i) {
      const double left = i > 0 ? y(i - 1) : 0.0;
      const double right = i + 1 < n ? y(i + 1) : 0.0;
      dy(i) = (left - 2.0 * y(i) + right) * inv_dx2 + g * mode[i];
    }
  };
  p.jacobian = [=](double, const Eigen::VectorXd&, BandMatrix& jac) {
    for (int i = 0; i < n; ++i) {
      jac.at(i, i) = -2.0 * inv_dx2;
      if (i > 0) jac.at(i, i - 1) = inv_dx2;
      if (i + 1 < n) jac.at(i, i + 1) = inv_dx2;
    }
  };
  p.exact_solution = [=](double t) {
    const double a = coef * std::exp(-t / 10.0) + (1.0 - coef) * std::exp(-kappa * t);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = a * mode[i];
    return y;
  };
  p.structure = JacobianStructure::Tridiagonal;
  p.t0 = 0.0;
  p.t_end = 1.0;
  p.y0 = Eigen::Map<const Eigen::VectorXd>(mode.data(), n);
  p.parameters = {{"m", static_cast<double>(m)}, {"forcing", forcing ? 1.0 : 0.0}};
  return p;
}

double brusselator_diffusion_bound(int m) {
  const double dx = 1.0 / (m + 1);
  return 0.02 * 4.0 / (dx * dx);
}

OdeProblem brusselator(int m) {
  if (m < 3) throw RangeError("Brusselator needs m >= 3");
  constexpr double alpha = 1.0;
  constexpr double beta = 3.0;
  constexpr double gamma = 0.02;
  constexpr double u_bc = 1.0;
  constexpr double v_bc = 3.0;
  const double dx = 1.0 / (m + 1);
  const double c = gamma / (dx * dx);

  OdeProblem p;
  p.name = "brusselator";
  p.dimension = 2 * m;
  p.rhs = [=](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    for (int i = 0; i < m; ++i) {
      const double u = y(2 * i);
      const double v = y(2 * i + 1);
      const double ul = i > 0 ? y(2 * i - 2) : u_bc;
      const double ur = i + 1 < m ? y(2 * i + 2) : u_bc;
      const double vl = i > 0 ? y(2 * i - 1) : v_bc;
      const double vr = i + 1 < m ? y(2 * i + 3) : v_bc;
      const double uuv = u * u * v;
      dy(2 * i) = alpha + uuv - (beta + 1.0) * u + c * (ul - 2.0 * u + ur);
      dy(2 * i + 1) = beta * u - uuv + c * (vl - 2.0 * v + vr);
    }
  };
  p.jacobian = [=](double, const Eigen::VectorXd& y, BandMatrix& jac) {
    for (int i = 0; i < m; ++i) {
      const double u = y(2 * i);
      const double v = y(2 * i + 1);
      const int ru = 2 * i;
      const int rv = 2 * i + 1;
      jac.at(ru, ru) = 2.0 * u * v - (beta + 1.0) - 2.0 * c;
      jac.at(ru, rv) = u * u;
      jac.at(rv, ru) = beta - 2.0 * u * v;
      jac.at(rv, rv) = -u * u - 2.0 * c;
      if (i > 0) {
        jac.at(ru, ru - 2) = c;
        jac.at(rv, rv - 2) = c;
      }
      if (i + 1 < m) {
        jac.at(ru, ru + 2) = c;
        jac.at(rv, rv + 2) = c;
      }
    }
  };
  p.structure = JacobianStructure::Banded;
  p.bandwidth = 2;
  p.t0 = 0.0;
  p.t_end = 1.0;
  p.y0.resize(2 * m);
  for (int i = 0; i < m; ++i) {
    const double x = (i + 1) * dx;
    p.y0(2 * i) = 1.0 + std::sin(2.0 * pi * x);
    p.y0(2 * i + 1) = 3.0;
  }
  p.parameters = {{"m", static_cast<double>(m)}, {"alpha", alpha}, {"beta", beta}, {"gamma", gamma}};
  return p;
}

OdeProblem linear_test(std::complex<double> lambda, std::complex<double> y0) {
  OdeProblem p;
  p.name = "linear-test";
  p.t0 = 0.0;
  p.t_end = 1.0;
  p.parameters = {{"re_lambda", lambda.real()}, {"im_lambda", lambda.imag()}};
  const double a = lambda.real();
  const double b = lambda.imag();
  if (b == 0.0 && y0.imag() == 0.0) {
    p.dimension = 1;
    p.rhs = [=](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy(0) = a * y(0); };
    p.jacobian = [=](double, const Eigen::VectorXd&, BandMatrix& jac) { jac.at(0, 0) = a; };
    p.exact_solution = [=](double t) { return Eigen::VectorXd::Constant(1, std::exp(a * t) * y0.real()); };
    p.y0 = Eigen::VectorXd::Constant(1, y0.real());
    return p;
  }
  p.dimension = 2;
  p.rhs = [=](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy(0) = a * y(0) - b * y(1);
    dy(1) = b * y(0) + a * y(1);
  };
  p.jacobian = [=](double, const Eigen::VectorXd&, BandMatrix& jac) {
    jac.at(0, 0) = a;
    jac.at(0, 1) = -b;
    jac.at(1, 0) = b;
    jac.at(1, 1) = a;
  };
  p.exact_solution = [=](double t) {
    const std::complex<double> v = std::exp(lambda * t) * y0;
    return Eigen::Vector2d(v.real(), v.imag()).eval();
  };
  p.y0 = Eigen::Vector2d(y0.real(), y0.imag());
  return p;
}

std::vector<std::string> problem_names() {
  return {"prothero-robinson", "van-der-pol", "kaps", "fpu", "heat", "brusselator"};
}

OdeProblem make_problem(const std::string& name) {
  if (name == "prothero-robinson" || name == "pr") return prothero_robinson();
  if (name == "van-der-pol" || name == "vdp") return van_der_pol();
  if (name == "kaps") return kaps();
  if (name == "fpu" || name == "fermi-pasta-ulam") return fermi_pasta_ulam();
  if (name == "heat") return heat_equation();
  if (name == "heat-unforced") return heat_equation(200, false);
  if (name == "brusselator") return brusselator();
  throw NotFoundError("unknown problem '" + name + "'");
}

}  // namespace dirk
