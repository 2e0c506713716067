#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "novas/errors.hpp"

namespace novas {

/// A canonical set of zero-based covariate indices, kept strictly increasing.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::initializer_list<std::size_t> idx) : IndexSet(std::vector<std::size_t>(idx)) {}

  /// Sorts and removes duplicates.
  explicit IndexSet(std::vector<std::size_t> idx) : idx_(std::move(idx)) {
    std::sort(idx_.begin(), idx_.end());
    idx_.erase(std::unique(idx_.begin(), idx_.end()), idx_.end());
  }

  static IndexSet singleton(std::size_t j) { return IndexSet({j}); }

  /// Builds a set from caller-supplied indices, rejecting duplicates and anything >= p.
  static IndexSet checked(std::span<const std::size_t> idx, std::size_t p) {
    if (idx.empty()) throw BadSubset("subset is empty");
    std::vector<std::size_t> v(idx.begin(), idx.end());
    std::sort(v.begin(), v.end());
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) throw BadSubset("subset has duplicate indices");
    if (v.back() >= p)
      throw BadSubset("subset index " + std::to_string(v.back()) + " out of range for p=" + std::to_string(p));
    IndexSet s;
    s.idx_ = std::move(v);
    return s;
  }

  std::size_t size() const noexcept { return idx_.size(); }
  bool empty() const noexcept { return idx_.empty(); }
  std::size_t operator[](std::size_t k) const { return idx_[k]; }
  auto begin() const noexcept { return idx_.begin(); }
  auto end() const noexcept { return idx_.end(); }
  std::span<const std::size_t> indices() const noexcept { return idx_; }

  bool contains(std::size_t j) const { return std::binary_search(idx_.begin(), idx_.end(), j); }
  bool includes(const IndexSet& other) const {
    return std::includes(idx_.begin(), idx_.end(), other.idx_.begin(), other.idx_.end());
  }

  IndexSet united(const IndexSet& other) const {
    IndexSet out;
    out.idx_.reserve(size() + other.size());
    std::set_union(idx_.begin(), idx_.end(), other.idx_.begin(), other.idx_.end(), std::back_inserter(out.idx_));
    return out;
  }

  IndexSet with(std::size_t j) const { return united(singleton(j)); }

  /// Maps every index through `perm` (new index of old column k is perm[k]).
  IndexSet mapped(std::span<const std::size_t> perm) const {
    std::vector<std::size_t> v;
    v.reserve(size());
    for (auto j : idx_) v.push_back(perm[j]);
    return IndexSet(std::move(v));
  }

  /// One-based, space separated, e.g. "1 2 3".
  std::string to_string() const {
    std::string s;
    for (auto j : idx_) {
      if (!s.empty()) s += ' ';
      s += std::to_string(j + 1);
    }
    return s;
  }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;
  friend auto operator<=>(const IndexSet& a, const IndexSet& b) { return a.idx_ <=> b.idx_; }

 private:
  std::vector<std::size_t> idx_;
};

/// Deterministic ranking order: smaller cardinality first, then lexicographic.
inline bool tie_break_less(const IndexSet& a, const IndexSet& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

struct IndexSetHash {
  std::size_t operator()(const IndexSet& s) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (auto j : s) {
      h ^= j + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace novas
