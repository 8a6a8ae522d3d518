#pragma once

#include <algorithm>
#include <vector>

#include "clcd/ci_test.hpp"
#include "clcd/var_set.hpp"

namespace clcd {

// ⟨s, z⟩ carry equivalent information about `target`; s is the side taken from
// the target's own structure, z the external side.
struct EquivalencePair {
  VarId target = 0;
  VarSet s;
  VarSet z;
  VarSet context;

  bool operator==(const EquivalencePair&) const = default;

  // Whether the pair links `a` and `b`, in either orientation.
  [[nodiscard]] bool links(const VarSet& a, const VarSet& b) const {
    return (s == a && z == b) || (s == b && z == a);
  }
};

// target ⊥̸ s | c, target ⊥̸ z | c, target ⊥ s | z ∪ c, target ⊥ z | s ∪ c.
template <IndependenceTester Tester>
bool contains_equivalent_info(const Tester& t, VarId target, const VarSet& s, const VarSet& z,
                              const VarSet& context = {}) {
  if (s.empty() || z.empty()) throw Error("equivalence: both sides must be nonempty");
  if (s.intersects(z) || s.contains(target) || z.contains(target))
    throw Error("equivalence: sides must be disjoint and exclude the target");
  const VarSet tv{target};
  if (t.test(tv, s, context).independent) return false;
  if (t.test(tv, z, context).independent) return false;
  if (!t.test(tv, s, z | context).independent) return false;
  return t.test(tv, z, s | context).independent;
}

// Scans Z ⊆ candidates ∖ pc_x (|Z| <= max_z, Z ⊥̸ x) against S ⊆ pc_x
// (|S| <= max_z) for equivalent information about x, context-free.
template <IndependenceTester Tester>
std::vector<EquivalencePair> find_equivalences(const Tester& t, VarId x, const VarSet& pc_x,
                                               const VarSet& candidates, std::size_t max_z) {
  std::vector<EquivalencePair> found;
  if (pc_x.empty() || max_z == 0) return found;
  const VarSet xv{x};
  // Prefilter: only members marginally dependent on x can form a dependent Z.
  VarSet pool;
  for (VarId v : candidates - pc_x) {
    if (v == x) continue;
    if (!t.test(VarSet{v}, xv, VarSet{}).independent) pool.insert(v);
  }
  for_each_subset(pool, 1, max_z, [&](const VarSet& z) {
    if (z.size() > 1 && t.test(z, xv, VarSet{}).independent) return false;
    for_each_subset(pc_x, 1, max_z, [&](const VarSet& s) {
      if (contains_equivalent_info(t, x, s, z)) found.push_back({x, s, z, {}});
      return false;
    });
    return false;
  });
  return found;
}

}  // namespace clcd
