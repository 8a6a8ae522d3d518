#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "clcd/ci_test.hpp"
#include "clcd/var_set.hpp"

// Local structure discovery around a single target.
//
// hiton_pc / hiton_mb follow the interleaved HITON variant: candidates enter in
// order of marginal association and every admission triggers a backward pass
// over the subsets that contain the newcomer. Symmetry correction
// (X in PC(T) iff T in PC(X)) is available through MbOptions and is off by
// default.

namespace clcd {

struct MbOptions {
  bool symmetry_correction = false;
};

struct PcResult {
  VarSet pc;
  // Separating set for every candidate rejected from the PC set.
  std::map<VarId, VarSet> sepsets;
};

// LocalStructure
//
// PC set, spouses (each mapped to the children it shares with the target) and
// the Markov boundary pc ∪ spouses.
struct LocalStructure {
  VarId target = 0;
  VarSet pc;
  std::map<VarId, VarSet> spouses;
  std::map<VarId, VarSet> sepsets;
  VarSet mb;

  [[nodiscard]] VarSet spouse_set() const {
    VarSet s;
    for (const auto& [sp, ch] : spouses) s.insert(sp);
    return s;
  }

  // Children through which some spouse was found.
  [[nodiscard]] VarSet children() const {
    VarSet c;
    for (const auto& [sp, ch] : spouses) c |= ch;
    return c;
  }

  void refresh_mb() { mb = pc | spouse_set(); }
};

namespace detail {

// Smallest S ⊆ pool with |S| <= max_size and x ⊥ target | S, restricted to
// subsets that contain `required` when given.
template <IndependenceTester Tester>
std::optional<VarSet> find_separator(const Tester& t, VarId x, VarId target, const VarSet& pool,
                                     std::optional<VarId> required) {
  const auto max_size = static_cast<std::size_t>(t.config().max_cond_size);
  std::optional<VarSet> found;
  if (required) {
    if (max_size == 0) return found;
    const VarSet rest = pool.without(*required);
    for_each_subset(rest, 0, max_size - 1, [&](const VarSet& s) {
      VarSet cond = s.with(*required);
      if (t.test(VarSet{x}, VarSet{target}, cond).independent) {
        found = std::move(cond);
        return true;
      }
      return false;
    });
    return found;
  }
  for_each_subset(pool, 0, max_size, [&](const VarSet& s) {
    if (t.test(VarSet{x}, VarSet{target}, s).independent) {
      found = s;
      return true;
    }
    return false;
  });
  return found;
}

template <IndependenceTester Tester>
PcResult hiton_pc_raw(const Tester& t, VarId target, const VarSet& candidates) {
  PcResult out;
  struct Ranked {
    double log_p;
    VarId id;
  };
  std::vector<Ranked> order;
  for (VarId x : candidates) {
    if (x == target) continue;
    const CiResult r = t.test(VarSet{x}, VarSet{target}, VarSet{});
    if (r.independent) out.sepsets[x] = VarSet{};
    else order.push_back({r.log_p, x});
  }
  std::sort(order.begin(), order.end(), [](const Ranked& a, const Ranked& b) {
    return a.log_p != b.log_p ? a.log_p < b.log_p : a.id < b.id;
  });

  std::vector<VarId> cpc;  // admission order
  for (const Ranked& cand : order) {
    const VarId x = cand.id;
    const VarSet current(cpc.begin(), cpc.end());
    if (auto sep = find_separator(t, x, target, current, std::nullopt)) {
      out.sepsets[x] = std::move(*sep);
      continue;
    }
    cpc.push_back(x);
    // Backward pass: only subsets containing the newcomer are new.
    for (std::size_t i = 0; i + 1 < cpc.size();) {
      const VarId y = cpc[i];
      const VarSet pool = VarSet(cpc.begin(), cpc.end()).without(y);
      if (auto sep = find_separator(t, y, target, pool, x)) {
        out.sepsets[y] = std::move(*sep);
        cpc.erase(cpc.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++i;
      }
    }
  }
  out.pc = VarSet(cpc.begin(), cpc.end());
  return out;
}

}  // namespace detail

template <IndependenceTester Tester>
PcResult hiton_pc(const Tester& t, VarId target, const VarSet& candidates, const MbOptions& opt = {}) {
  PcResult out = detail::hiton_pc_raw(t, target, candidates);
  if (!opt.symmetry_correction) return out;
  const VarSet scope = candidates.with(target);
  for (VarId x : VarSet(out.pc)) {
    PcResult back = detail::hiton_pc_raw(t, x, scope.without(x));
    if (!back.pc.contains(target)) {
      out.pc.erase(x);
      auto it = back.sepsets.find(target);
      out.sepsets[x] = it != back.sepsets.end() ? it->second : VarSet{};
    }
  }
  return out;
}

// PcCache
//
// Lazily computed PC sets over a fixed universe: pc(v) searches universe ∖ {v}.
// Entries are computed once even under concurrent access.
template <IndependenceTester Tester>
class PcCache {
 public:
  PcCache(const Tester& t, VarSet universe, MbOptions opt)
      : tester_(&t), universe_(std::move(universe)), opt_(opt), slots_(t.n_vars()) {
    for (auto& s : slots_) s = std::make_unique<Slot>();
  }

  const PcResult& get(VarId v) const {
    Slot& slot = *slots_.at(v);
    std::call_once(slot.once, [&] { slot.value = hiton_pc(*tester_, v, universe_.without(v), opt_); });
    return slot.value;
  }

  [[nodiscard]] const VarSet& universe() const { return universe_; }

 private:
  struct Slot {
    std::once_flag once;
    PcResult value;
  };
  const Tester* tester_;
  VarSet universe_;
  MbOptions opt_;
  std::vector<std::unique_ptr<Slot>> slots_;
};

namespace detail {

template <IndependenceTester Tester, typename PcOf>
LocalStructure hiton_mb_with(const Tester& t, VarId target, const VarSet& candidates, PcResult pcr,
                             PcOf&& pc_of) {
  LocalStructure ls;
  ls.target = target;
  ls.pc = std::move(pcr.pc);
  ls.sepsets = std::move(pcr.sepsets);
  for (VarId y : ls.pc) {
    const PcResult& child = pc_of(y);
    for (VarId x : child.pc) {
      if (x == target || ls.pc.contains(x) || !candidates.contains(x)) continue;
      auto it = ls.sepsets.find(x);
      VarSet cond = (it != ls.sepsets.end() ? it->second : VarSet{}).with(y);
      if (!t.test(VarSet{x}, VarSet{target}, cond).independent) ls.spouses[x].insert(y);
    }
  }
  ls.refresh_mb();
  return ls;
}

}  // namespace detail

template <IndependenceTester Tester>
LocalStructure hiton_mb(const Tester& t, VarId target, const VarSet& candidates, const MbOptions& opt = {}) {
  PcResult pcr = hiton_pc(t, target, candidates, opt);
  const VarSet scope = candidates.with(target);
  std::map<VarId, PcResult> memo;
  return detail::hiton_mb_with(t, target, candidates, std::move(pcr), [&](VarId y) -> const PcResult& {
    auto it = memo.find(y);
    if (it == memo.end()) it = memo.emplace(y, hiton_pc(t, y, scope.without(y), opt)).first;
    return it->second;
  });
}

// Same as hiton_mb over the cache's universe, reusing cached PC sets.
template <IndependenceTester Tester>
LocalStructure hiton_mb(const Tester& t, VarId target, const PcCache<Tester>& cache) {
  const VarSet candidates = cache.universe().without(target);
  PcResult pcr = cache.get(target);
  return detail::hiton_mb_with(t, target, candidates, std::move(pcr),
                               [&](VarId y) -> const PcResult& { return cache.get(y); });
}

// IAMB baseline: grow by maximal conditional association while dependent,
// then shrink anything independent given the rest.
template <IndependenceTester Tester>
VarSet iamb(const Tester& t, VarId target, const VarSet& candidates) {
  VarSet mb;
  while (true) {
    std::optional<VarId> best;
    double best_score = -1.0;
    for (VarId x : candidates) {
      if (x == target || mb.contains(x)) continue;
      const double score = t.association(x, target, mb);
      if (score > best_score) {
        best_score = score;
        best = x;
      }
    }
    if (!best) break;
    if (t.test(VarSet{*best}, VarSet{target}, mb).independent) break;
    mb.insert(*best);
  }
  for (VarId x : VarSet(mb)) {
    if (t.test(VarSet{x}, VarSet{target}, mb.without(x)).independent) mb.erase(x);
  }
  return mb;
}

}  // namespace clcd
