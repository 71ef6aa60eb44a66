#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dirk {

struct StructuralFlags {
  bool is_dirk = false;
  bool is_stiffly_accurate = false;
  bool has_zero_diagonal = false;

  bool operator==(const StructuralFlags&) const = default;
};

/// Runge-Kutta coefficient set (A, b, c). Immutable once built.
///
/// The abscissae are always the row sums of A; they are never taken from input.
class ButcherTableau {
 public:
  ButcherTableau(std::string name, int order, Eigen::MatrixXd a, Eigen::VectorXd b);

  const std::string& name() const noexcept { return name_; }
  int stages() const noexcept { return static_cast<int>(b_.size()); }
  int order() const noexcept { return order_; }

  const Eigen::MatrixXd& A() const noexcept { return a_; }
  const Eigen::VectorXd& b() const noexcept { return b_; }
  const Eigen::VectorXd& c() const noexcept { return c_; }

  double a(int i, int j) const { return a_(i, j); }

  const StructuralFlags& flags() const noexcept { return flags_; }
  bool is_dirk() const noexcept { return flags_.is_dirk; }
  bool is_stiffly_accurate() const noexcept { return flags_.is_stiffly_accurate; }

  /// Copy with different coefficients but the same name and declared order.
  ButcherTableau with_coefficients(Eigen::MatrixXd a, Eigen::VectorXd b) const;

  /// Bitwise equality of every coefficient, plus name and order.
  bool identical_to(const ButcherTableau& other) const;

 private:
  std::string name_;
  int order_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_;
  Eigen::VectorXd c_;
  StructuralFlags flags_;
};

/// Stiff-accuracy comparison tolerance on |a_{s,j} - b_j|.
inline constexpr double kStifflyAccurateTolerance = 1e-15;

StructuralFlags structural_flags(const ButcherTableau& t);

// Builtin registry.

/// Canonical names in registry order.
const std::vector<std::string>& builtin_names();

/// Accepts the canonical name, e.g. "DIRK(13,8)A", or the alias form "dirk-13-8-a".
/// Throws NotFoundError for anything else.
ButcherTableau load_builtin(std::string_view name);

/// "DIRK(13,8)A" -> "dirk-13-8-a"
std::string scheme_alias(std::string_view canonical_name);

/// Small classical tableaus used throughout the tests and examples.
ButcherTableau implicit_midpoint();
ButcherTableau explicit_euler();
ButcherTableau backward_euler();

// Scheme text format.
//
//   name <string>
//   order <p>
//   stages <s>
//   s rows of A (s values each)
//   one row of b (s values)
//
// '#' starts a comment; blank lines are ignored.

ButcherTableau parse_tableau(std::string_view text);
ButcherTableau read_tableau_file(const std::string& path);

/// Writes 17 significant digits so that parse_tableau(serialize(t)) reproduces t bit for bit.
std::string serialize_tableau(const ButcherTableau& t);
void write_tableau(std::ostream& os, const ButcherTableau& t);

}  // namespace dirk
