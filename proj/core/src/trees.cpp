#include "dirk/trees.hpp"

#include "dirk/error.hpp"

#include <algorithm>
#include <array>
#include <mutex>
#include <ostream>

namespace dirk {

RootedTree::RootedTree() = default;

RootedTree::RootedTree(std::vector<RootedTree> children) : children_(std::move(children)) { finalize(); }

void RootedTree::finalize() {
  // Descending level sequence; ties are identical subtrees.
  std::vector<std::pair<std::vector<int>, std::size_t>> keyed;
  keyed.reserve(children_.size());
  for (std::size_t k = 0; k < children_.size(); ++k) keyed.emplace_back(children_[k].level_sequence(), k);
  std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<RootedTree> sorted;
  sorted.reserve(children_.size());
  for (const auto& [seq, k] : keyed) sorted.push_back(std::move(children_[k]));
  children_ = std::move(sorted);

  order_ = 1;
  density_ = 1;
  symmetry_ = 1;
  for (const auto& child : children_) {
    order_ += child.order_;
    density_ *= child.density_;
  }
  density_ *= order_;

  // Identical subtrees are adjacent after sorting.
  std::size_t k = 0;
  while (k < children_.size()) {
    std::size_t run = 1;
    while (k + run < children_.size() && children_[k + run] == children_[k]) ++run;
    for (std::size_t r = 1; r <= run; ++r) symmetry_ *= children_[k].symmetry_ * static_cast<std::int64_t>(r);
    k += run;
  }
}

RootedTree RootedTree::from_level_sequence(const std::vector<int>& levels) {
  if (levels.empty()) throw RangeError("empty level sequence");
  const int root_level = levels.front();
  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (levels[k] <= root_level) throw RangeError("level sequence has more than one root");
    if (levels[k] > levels[k - 1] + 1) throw RangeError("level sequence jumps more than one level");
  }
  // Subtree of node k spans the following entries with a strictly larger level.
  auto build = [&](auto&& self, std::size_t begin, std::size_t end) -> RootedTree {
    std::vector<RootedTree> kids;
    std::size_t k = begin + 1;
    while (k < end) {
      std::size_t stop = k + 1;
      while (stop < end && levels[stop] > levels[k]) ++stop;
      kids.push_back(self(self, k, stop));
      k = stop;
    }
    return RootedTree(std::move(kids));
  };
  return build(build, 0, levels.size());
}

RootedTree RootedTree::chain(int q) {
  RootedTree t;
  for (int k = 1; k < q; ++k) t = RootedTree(std::vector<RootedTree>{t});
  return t;
}

RootedTree RootedTree::bushy(int q) { return RootedTree(std::vector<RootedTree>(q > 1 ? q - 1 : 0)); }

std::vector<int> RootedTree::level_sequence() const {
  std::vector<int> out;
  out.reserve(order_);
  append_levels(out, 1);
  return out;
}

void RootedTree::append_levels(std::vector<int>& out, int level) const {
  out.push_back(level);
  for (const auto& child : children_) child.append_levels(out, level + 1);
}

bool RootedTree::operator==(const RootedTree& other) const {
  return order_ == other.order_ && children_ == other.children_;
}

std::vector<RootedTree> enumerate_trees(int q) {
  if (q < 1 || q > kMaxTreeOrder) {
    throw RangeError("tree order " + std::to_string(q) + " outside [1, " + std::to_string(kMaxTreeOrder) + "]");
  }
  // Beyer-Hedetniemi successor over canonical level sequences, from the chain
  // 1 2 ... q down to the star 1 2 2 ... 2.
  std::vector<int> levels(q);
  for (int k = 0; k < q; ++k) levels[k] = k + 1;

  std::vector<RootedTree> out;
  for (;;) {
    out.push_back(RootedTree::from_level_sequence(levels));
    int p = q - 1;
    while (p > 0 && levels[p] <= 2) --p;
    if (p == 0) break;
    int prev = p - 1;
    while (levels[prev] != levels[p] - 1) --prev;
    const int shift = p - prev;
    for (int k = p; k < q; ++k) levels[k] = levels[k - shift];
  }
  return out;
}

const std::vector<RootedTree>& trees_of_order(int q) {
  if (q < 1 || q > kMaxTreeOrder) {
    throw RangeError("tree order " + std::to_string(q) + " outside [1, " + std::to_string(kMaxTreeOrder) + "]");
  }
  static std::array<std::once_flag, kMaxTreeOrder + 1> once;
  static std::array<std::vector<RootedTree>, kMaxTreeOrder + 1> cache;
  std::call_once(once[q], [q] { cache[q] = enumerate_trees(q); });
  return cache[q];
}

int cumulative_condition_count(int p) {
  if (p < 1 || p > kMaxTreeOrder) {
    throw RangeError("order " + std::to_string(p) + " outside [1, " + std::to_string(kMaxTreeOrder) + "]");
  }
  int total = 0;
  for (int q = 1; q <= p; ++q) total += static_cast<int>(trees_of_order(q).size());
  return total;
}

void dump_level_sequences(std::ostream& os, const std::vector<RootedTree>& trees) {
  for (const auto& t : trees) {
    const auto seq = t.level_sequence();
    for (std::size_t k = 0; k < seq.size(); ++k) os << (k ? " " : "") << seq[k];
    os << '\n';
  }
}

}  // namespace dirk
