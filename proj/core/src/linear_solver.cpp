#include "dirk/linear_solver.hpp"

#include "dirk/error.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace dirk {

BandMatrix::BandMatrix(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku) {
  if (n < 1 || kl < 0 || ku < 0 || kl > n - 1 || ku > n - 1) {
    throw RangeError("invalid band matrix shape");
  }
  data_.assign(static_cast<std::size_t>(n) * (kl + ku + 1), 0.0);
}

double& BandMatrix::at(int i, int j) {
  if (i < 0 || j < 0 || i >= n_ || j >= n_ || !in_band(i, j)) {
    throw RangeError("band matrix entry (" + std::to_string(i) + ", " + std::to_string(j) + ") outside the band");
  }
  return data_[index(i, j)];
}

void BandMatrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

Eigen::MatrixXd BandMatrix::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (int j = 0; j < n_; ++j) {
    for (int i = std::max(0, j - ku_); i <= std::min(n_ - 1, j + kl_); ++i) m(i, j) = data_[index(i, j)];
  }
  return m;
}

double BandMatrix::inf_norm() const {
  double best = 0.0;
  for (int i = 0; i < n_; ++i) {
    double row = 0.0;
    for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j) row += std::abs((*this)(i, j));
    best = std::max(best, row);
  }
  return best;
}

Eigen::VectorXd BandMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    for (int i = std::max(0, j - ku_); i <= std::min(n_ - 1, j + kl_); ++i) y(i) += data_[index(i, j)] * x(j);
  }
  return y;
}

std::vector<double> BandMatrix::lapack_band(int extra) const {
  const int ld = extra + kl_ + ku_ + 1;
  std::vector<double> ab(static_cast<std::size_t>(ld) * n_, 0.0);
  for (int j = 0; j < n_; ++j) {
    for (int i = std::max(0, j - ku_); i <= std::min(n_ - 1, j + kl_); ++i) {
      ab[static_cast<std::size_t>(j) * ld + extra + ku_ + i - j] = data_[index(i, j)];
    }
  }
  return ab;
}

const char* to_string(LinearSolverKind kind) {
  switch (kind) {
    case LinearSolverKind::Auto: return "auto";
    case LinearSolverKind::DenseLU: return "dense-lu";
    case LinearSolverKind::Tridiagonal: return "tridiagonal";
    case LinearSolverKind::Banded: return "banded";
  }
  return "?";
}

namespace {

class DenseSolver final : public StageSolver {
 public:
  void factor(const BandMatrix& jac, double gamma) override {
    const int n = jac.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - gamma * jac.to_dense();
    lu_.compute(m);
    const auto diag = lu_.matrixLU().diagonal().cwiseAbs();
    if (!diag.allFinite() || diag.minCoeff() <= 1e-14 * std::max(1.0, diag.maxCoeff())) {
      throw LinearSolveError("stage matrix is singular to working precision");
    }
  }
  void solve(Eigen::VectorXd& rhs) const override { rhs = lu_.solve(rhs); }

 private:
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

class TridiagonalSolver final : public StageSolver {
 public:
  void factor(const BandMatrix& jac, double gamma) override {
    if (jac.lower() > 1 || jac.upper() > 1) throw UnsupportedError("tridiagonal solver given a wider band");
    n_ = jac.size();
    dl_.assign(std::max(n_ - 1, 1), 0.0);
    d_.assign(n_, 0.0);
    du_.assign(std::max(n_ - 1, 1), 0.0);
    du2_.assign(std::max(n_ - 2, 1), 0.0);
    ipiv_.assign(n_, 0);
    for (int i = 0; i < n_; ++i) {
      d_[i] = 1.0 - gamma * jac(i, i);
      if (i + 1 < n_) {
        dl_[i] = -gamma * jac(i + 1, i);
        du_[i] = -gamma * jac(i, i + 1);
      }
    }
    const lapack_int info = LAPACKE_dgttrf(n_, dl_.data(), d_.data(), du_.data(), du2_.data(), ipiv_.data());
    if (info != 0) throw LinearSolveError("dgttrf failed with info " + std::to_string(info));
  }
  void solve(Eigen::VectorXd& rhs) const override {
    const lapack_int info = LAPACKE_dgttrs(LAPACK_COL_MAJOR, 'N', n_, 1, dl_.data(), d_.data(), du_.data(),
                                           du2_.data(), ipiv_.data(), rhs.data(), n_);
    if (info != 0) throw LinearSolveError("dgttrs failed with info " + std::to_string(info));
  }

 private:
  int n_ = 0;
  std::vector<double> dl_, d_, du_, du2_;
  std::vector<lapack_int> ipiv_;
};

class BandedSolver final : public StageSolver {
 public:
  void factor(const BandMatrix& jac, double gamma) override {
    n_ = jac.size();
    kl_ = jac.lower();
    ku_ = jac.upper();
    ab_ = jac.lapack_band(kl_);
    const int ld = 2 * kl_ + ku_ + 1;
    for (auto& v : ab_) v *= -gamma;
    for (int j = 0; j < n_; ++j) ab_[static_cast<std::size_t>(j) * ld + kl_ + ku_] += 1.0;
    ipiv_.assign(n_, 0);
    const lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_, ab_.data(), ld, ipiv_.data());
    if (info != 0) throw LinearSolveError("dgbtrf failed with info " + std::to_string(info));
  }
  void solve(Eigen::VectorXd& rhs) const override {
    const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, 1, ab_.data(), 2 * kl_ + ku_ + 1,
                                           ipiv_.data(), rhs.data(), n_);
    if (info != 0) throw LinearSolveError("dgbtrs failed with info " + std::to_string(info));
  }

 private:
  int n_ = 0, kl_ = 0, ku_ = 0;
  std::vector<double> ab_;
  std::vector<lapack_int> ipiv_;
};

}  // namespace

std::unique_ptr<StageSolver> make_stage_solver(LinearSolverKind kind) {
  switch (kind) {
    case LinearSolverKind::DenseLU: return std::make_unique<DenseSolver>();
    case LinearSolverKind::Tridiagonal: return std::make_unique<TridiagonalSolver>();
    case LinearSolverKind::Banded: return std::make_unique<BandedSolver>();
    case LinearSolverKind::Auto: break;
  }
  throw RangeError("make_stage_solver needs a concrete solver kind");
}

}  // namespace dirk
