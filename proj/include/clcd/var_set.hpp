#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <vector>

namespace clcd {

// Index of a variable (feature or label) in a Dataset or BayesNet.
using VarId = std::uint32_t;

// VarSet
//
// Sorted, duplicate-free set of variable ids. Small by construction (MB sized),
// so a flat vector beats node-based sets for both lookups and hashing.
class VarSet {
 public:
  using const_iterator = std::vector<VarId>::const_iterator;

  VarSet() = default;
  VarSet(std::initializer_list<VarId> ids) : ids_(ids) { normalize(); }
  explicit VarSet(std::vector<VarId> ids) : ids_(std::move(ids)) { normalize(); }

  template <typename It>
  VarSet(It first, It last) : ids_(first, last) { normalize(); }

  static VarSet range(VarId n) {
    VarSet s;
    s.ids_.resize(n);
    for (VarId i = 0; i < n; ++i) s.ids_[i] = i;
    return s;
  }

  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] bool empty() const { return ids_.empty(); }
  [[nodiscard]] const_iterator begin() const { return ids_.begin(); }
  [[nodiscard]] const_iterator end() const { return ids_.end(); }
  [[nodiscard]] VarId operator[](std::size_t i) const { return ids_[i]; }
  [[nodiscard]] const std::vector<VarId>& ids() const { return ids_; }

  [[nodiscard]] bool contains(VarId v) const {
    return std::binary_search(ids_.begin(), ids_.end(), v);
  }

  bool insert(VarId v) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), v);
    if (it != ids_.end() && *it == v) return false;
    ids_.insert(it, v);
    return true;
  }

  bool erase(VarId v) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), v);
    if (it == ids_.end() || *it != v) return false;
    ids_.erase(it);
    return true;
  }

  [[nodiscard]] bool subset_of(const VarSet& other) const {
    return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
  }

  [[nodiscard]] bool intersects(const VarSet& other) const {
    auto a = ids_.begin();
    auto b = other.ids_.begin();
    while (a != ids_.end() && b != other.ids_.end()) {
      if (*a == *b) return true;
      if (*a < *b) ++a; else ++b;
    }
    return false;
  }

  friend VarSet operator|(const VarSet& a, const VarSet& b) {
    VarSet r;
    r.ids_.reserve(a.size() + b.size());
    std::set_union(a.ids_.begin(), a.ids_.end(), b.ids_.begin(), b.ids_.end(),
                   std::back_inserter(r.ids_));
    return r;
  }

  friend VarSet operator&(const VarSet& a, const VarSet& b) {
    VarSet r;
    std::set_intersection(a.ids_.begin(), a.ids_.end(), b.ids_.begin(), b.ids_.end(),
                          std::back_inserter(r.ids_));
    return r;
  }

  friend VarSet operator-(const VarSet& a, const VarSet& b) {
    VarSet r;
    std::set_difference(a.ids_.begin(), a.ids_.end(), b.ids_.begin(), b.ids_.end(),
                        std::back_inserter(r.ids_));
    return r;
  }

  VarSet& operator|=(const VarSet& b) { return *this = *this | b; }
  VarSet& operator-=(const VarSet& b) { return *this = *this - b; }

  [[nodiscard]] VarSet with(VarId v) const {
    VarSet r = *this;
    r.insert(v);
    return r;
  }

  [[nodiscard]] VarSet without(VarId v) const {
    VarSet r = *this;
    r.erase(v);
    return r;
  }

  friend bool operator==(const VarSet&, const VarSet&) = default;

  // Size first, then lexicographic: the enumeration order used everywhere.
  friend bool operator<(const VarSet& a, const VarSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a.ids_ < b.ids_;
  }

 private:
  void normalize() {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  std::vector<VarId> ids_;
};

// Visits every subset of `pool` with size in [min_size, max_size], smaller
// subsets first, each size in lexicographic order. The visitor returns true to
// stop early; the function returns whether it was stopped.
template <typename Visitor>
bool for_each_subset(const VarSet& pool, std::size_t min_size, std::size_t max_size,
                     Visitor&& visit) {
  const std::size_t n = pool.size();
  max_size = std::min(max_size, n);
  std::vector<std::size_t> idx;
  std::vector<VarId> members;
  for (std::size_t k = min_size; k <= max_size; ++k) {
    idx.resize(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      members.clear();
      for (std::size_t i : idx) members.push_back(pool[i]);
      if (visit(VarSet(members))) return true;
      if (k == 0) break;
      // advance combination
      std::size_t i = k;
      while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return false;
}

struct VarSetHash {
  std::size_t operator()(const VarSet& s) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (VarId v : s) {
      h ^= v + 0x9e3779b97f4a7c15ULL;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

}  // namespace clcd
