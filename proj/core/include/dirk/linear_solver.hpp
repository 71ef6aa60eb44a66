#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace dirk {

/// Square matrix stored by diagonals: entries with -kl <= j - i <= ku.
/// Reads outside the band return 0; writes outside the band are an error.
class BandMatrix {
 public:
  BandMatrix() = default;
  BandMatrix(int n, int kl, int ku);

  int size() const { return n_; }
  int lower() const { return kl_; }
  int upper() const { return ku_; }
  bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }

  double operator()(int i, int j) const { return in_band(i, j) ? data_[index(i, j)] : 0.0; }
  double& at(int i, int j);

  void set_zero();
  Eigen::MatrixXd to_dense() const;
  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  /// Maximum absolute row sum.
  double inf_norm() const;

  /// Column-major LAPACK band layout with `extra` leading rows (kl for dgbtrf).
  std::vector<double> lapack_band(int extra) const;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * (kl_ + ku_ + 1) + (ku_ + i - j); }

  int n_ = 0;
  int kl_ = 0;
  int ku_ = 0;
  std::vector<double> data_;
};

enum class LinearSolverKind { Auto, DenseLU, Tridiagonal, Banded };

const char* to_string(LinearSolverKind kind);

/// Factors M = I - gamma * J and solves with it.
class StageSolver {
 public:
  virtual ~StageSolver() = default;
  /// Throws LinearSolveError if M is singular.
  virtual void factor(const BandMatrix& jacobian, double gamma) = 0;
  /// Overwrites rhs with M^{-1} rhs.
  virtual void solve(Eigen::VectorXd& rhs) const = 0;
};

/// `kind` must be compatible with the bandwidth of the Jacobian it will see:
/// Tridiagonal needs kl = ku <= 1; Banded and DenseLU take anything.
std::unique_ptr<StageSolver> make_stage_solver(LinearSolverKind kind);

}  // namespace dirk
