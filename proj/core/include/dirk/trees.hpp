#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace dirk {

/// Unordered rooted tree in canonical form.
///
/// Children are kept sorted by descending level sequence, so two trees are
/// isomorphic exactly when they compare equal, and level_sequence() returns the
/// canonical (Beyer-Hedetniemi) sequence.
class RootedTree {
 public:
  /// Single vertex.
  RootedTree();
  explicit RootedTree(std::vector<RootedTree> children);

  /// Builds a tree from any valid level sequence (root at level 1 or 0; any
  /// relative offset works as long as the first entry is the unique minimum).
  static RootedTree from_level_sequence(const std::vector<int>& levels);

  /// A path of q vertices.
  static RootedTree chain(int q);
  /// A root with q-1 leaf children.
  static RootedTree bushy(int q);

  const std::vector<RootedTree>& children() const noexcept { return children_; }
  int order() const noexcept { return order_; }
  /// Number of automorphisms.
  std::int64_t symmetry() const noexcept { return symmetry_; }
  /// Density: order times the product of the children's densities.
  std::int64_t density() const noexcept { return density_; }

  /// Canonical level sequence with the root at level 1.
  std::vector<int> level_sequence() const;

  bool operator==(const RootedTree& other) const;

 private:
  void finalize();
  void append_levels(std::vector<int>& out, int level) const;

  std::vector<RootedTree> children_;
  int order_ = 1;
  std::int64_t symmetry_ = 1;
  std::int64_t density_ = 1;
};

struct TreeStats {
  std::int64_t sigma;
  std::int64_t gamma;
};

inline TreeStats tree_stats(const RootedTree& t) { return {t.symmetry(), t.density()}; }

inline constexpr int kMaxTreeOrder = 10;

/// Generates every rooted tree of order q, 1 <= q <= 10, in canonical level-sequence
/// order (starting from the chain). Throws RangeError outside that range.
std::vector<RootedTree> enumerate_trees(int q);

/// Cached enumerate_trees(q); safe for concurrent first access.
const std::vector<RootedTree>& trees_of_order(int q);

/// Sum of |T_k| for k = 1..p.
int cumulative_condition_count(int p);

/// One tree per line as a level sequence, e.g. "1 2 3 3 2".
void dump_level_sequences(std::ostream& os, const std::vector<RootedTree>& trees);

}  // namespace dirk
