#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "clcd/ci_test.hpp"
#include "clcd/equivalence.hpp"
#include "clcd/mb_discovery.hpp"
#include "clcd/parallel.hpp"
#include "clcd/var_set.hpp"

// Common and label-specific causal variable discovery.
//
// Phase 1 learns one local structure per label, treating labels and features
// alike. Phase 2 restores variables shadowed because two labels carry
// equivalent information about them. Phase 3 records equivalent-information
// pairs around labels and around the children that link labels to spouses.
// The final classification evaluates the Θ predicate (θ1: inside the MB,
// θ2: equivalent to a PC subset, θ3: equivalent to a spouse subset through
// their common child) for every candidate set.

namespace clcd {

using Structures = std::map<VarId, LocalStructure>;
using EiMap = std::map<VarId, std::vector<EquivalencePair>>;

struct ClcdOptions {
  // Largest |Z| (and |S|) considered when scanning for equivalences.
  std::size_t max_z = 1;
  MbOptions mb;
  bool phase2 = true;
  std::size_t workers = 1;
};

enum class ThetaBranch { none, theta1, theta2, theta3 };

inline const char* to_string(ThetaBranch b) {
  switch (b) {
    case ThetaBranch::theta1: return "theta1";
    case ThetaBranch::theta2: return "theta2";
    case ThetaBranch::theta3: return "theta3";
    default: return "none";
  }
}

struct ThetaMatch {
  bool fired = false;
  ThetaBranch branch = ThetaBranch::none;
  // The structure-side subset Z_T that z stands for.
  VarSet z_t;
  // Common child linking Z_T and the label (θ3 only).
  std::optional<VarId> child;
};

struct ThetaWitness {
  VarSet z;
  VarSet satisfied_labels;
  std::map<VarId, ThetaMatch> branches;
};

struct ClcdOutput {
  Structures structures;
  EiMap ei;
  // Keyed by the maximal label set each candidate satisfies (size >= 2).
  std::map<VarSet, VarSet> ccv;
  std::map<VarId, VarSet> tcv;
  std::vector<ThetaWitness> witnesses;

  [[nodiscard]] VarSet common_union() const {
    VarSet u;
    for (const auto& [key, vars] : ccv) u |= vars;
    return u;
  }

  // Common causal variables of `labels`: every ccv entry whose key covers it.
  [[nodiscard]] VarSet common_for(const VarSet& labels) const {
    VarSet u;
    for (const auto& [key, vars] : ccv)
      if (labels.subset_of(key)) u |= vars;
    return u;
  }
};

struct Phase2Report {
  // (label, retrieved set) in the order they were added.
  std::vector<std::pair<VarId, VarSet>> added;
};

template <IndependenceTester Tester>
Structures phase1_structures(const Tester& t, const VarSet& labels, const PcCache<Tester>& cache,
                             std::size_t workers = 1) {
  std::vector<LocalStructure> slots(labels.size());
  parallel_for(labels.size(), workers, [&](std::size_t i) { slots[i] = hiton_mb(t, labels[i], cache); });
  Structures out;
  for (auto& ls : slots) out.emplace(ls.target, std::move(ls));
  return out;
}

// Sequential over ordered label pairs: it grows PC sets in place.
template <IndependenceTester Tester>
Phase2Report phase2_retrieve(const Tester& t, const VarSet& labels, Structures& structures,
                             const VarSet& universe, std::size_t max_z) {
  Phase2Report report;
  const auto max_cond = static_cast<std::size_t>(t.config().max_cond_size);
  for (VarId ti : labels) {
    for (VarId tj : labels) {
      if (ti == tj) continue;
      LocalStructure& sj = structures.at(tj);
      if (!sj.pc.contains(ti)) continue;
      const VarSet vi{ti}, vj{tj};
      VarSet pool;
      for (VarId v : universe - sj.pc) {
        if (v == ti || v == tj) continue;
        if (!t.test(VarSet{v}, vi, {}).independent && !t.test(VarSet{v}, vj, {}).independent) pool.insert(v);
      }
      for_each_subset(pool, 1, max_z, [&](const VarSet& z) {
        if (z.subset_of(sj.pc)) return false;
        if (z.size() > 1 && (t.test(z, vi, {}).independent || t.test(z, vj, {}).independent)) return false;
        if (!t.test(z, vi, vj).independent || !t.test(z, vj, vi).independent) return false;
        const VarSet z_out = z - sj.pc;
        bool shielded = for_each_subset(sj.pc.without(ti), 0, max_cond, [&](const VarSet& s) {
          return t.test(z_out, vj, s).independent;
        });
        if (shielded) return false;
        for (VarId v : z_out) {
          sj.pc.insert(v);
          sj.spouses.erase(v);
          sj.sepsets.erase(v);
        }
        sj.refresh_mb();
        report.added.emplace_back(tj, z_out);
        return false;
      });
    }
  }
  return report;
}

// Variables whose equivalences phase 3 records: labels and the children that
// link labels to their spouses.
inline VarSet phase3_scope(const VarSet& labels, const Structures& structures) {
  VarSet scope = labels;
  for (VarId l : labels) scope |= structures.at(l).children();
  return scope;
}

template <IndependenceTester Tester>
EiMap phase3_equivalences(const Tester& t, const VarSet& labels, const Structures& structures,
                          const PcCache<Tester>& cache, const VarSet& z_universe, std::size_t max_z,
                          std::size_t workers = 1) {
  const VarSet scope = phase3_scope(labels, structures);
  std::vector<std::vector<EquivalencePair>> slots(scope.size());
  parallel_for(scope.size(), workers, [&](std::size_t i) {
    const VarId x = scope[i];
    auto it = structures.find(x);
    const VarSet& pc_x = (labels.contains(x) && it != structures.end()) ? it->second.pc : cache.get(x).pc;
    slots[i] = find_equivalences(t, x, pc_x, z_universe.without(x), max_z);
  });
  EiMap ei;
  for (std::size_t i = 0; i < scope.size(); ++i) ei[scope[i]] = std::move(slots[i]);
  return ei;
}

// First firing branch among θ1, θ2, θ3 for candidate z and label `label`.
inline ThetaMatch evaluate_theta(const VarSet& z, VarId label, const Structures& structures, const EiMap& ei) {
  ThetaMatch m;
  if (z.empty() || z.contains(label)) return m;
  const LocalStructure& ls = structures.at(label);
  if (z.subset_of(ls.mb)) {
    m.fired = true;
    m.branch = ThetaBranch::theta1;
    m.z_t = z;
    return m;
  }
  // Other side of a pair matching z in either orientation.
  auto partner = [&z](const EquivalencePair& p) -> const VarSet* {
    if (p.s == z) return &p.z;
    if (p.z == z) return &p.s;
    return nullptr;
  };
  if (auto it = ei.find(label); it != ei.end()) {
    for (const auto& pair : it->second) {
      const VarSet* other = partner(pair);
      if (other && other->subset_of(ls.pc)) {
        m.fired = true;
        m.branch = ThetaBranch::theta2;
        m.z_t = *other;
        return m;
      }
    }
  }
  for (VarId child : ls.children()) {
    auto it = ei.find(child);
    if (it == ei.end()) continue;
    for (const auto& pair : it->second) {
      const VarSet* other = partner(pair);
      if (!other) continue;
      bool via_child = std::all_of(other->begin(), other->end(), [&](VarId v) {
        auto sp = ls.spouses.find(v);
        return sp != ls.spouses.end() && sp->second.contains(child);
      });
      if (via_child) {
        m.fired = true;
        m.branch = ThetaBranch::theta3;
        m.z_t = *other;
        m.child = child;
        return m;
      }
    }
  }
  return m;
}

// Candidate sets for Θ: both sides of every EI record plus MB singletons.
inline std::set<VarSet> theta_candidates(const VarSet& labels, const Structures& structures, const EiMap& ei,
                                         const std::optional<VarSet>& restrict_to = std::nullopt) {
  std::set<VarSet> pool;
  auto admit = [&](const VarSet& s) {
    if (!restrict_to || s.subset_of(*restrict_to)) pool.insert(s);
  };
  for (const auto& [x, pairs] : ei)
    for (const auto& p : pairs) {
      admit(p.s);
      admit(p.z);
    }
  for (VarId l : labels)
    for (VarId v : structures.at(l).mb) admit(VarSet{v});
  return pool;
}

inline ThetaWitness theta_witness(const VarSet& z, const VarSet& labels, const Structures& structures,
                                  const EiMap& ei) {
  ThetaWitness w;
  w.z = z;
  for (VarId l : labels) {
    ThetaMatch m = evaluate_theta(z, l, structures, ei);
    if (m.fired) {
      w.satisfied_labels.insert(l);
      w.branches.emplace(l, std::move(m));
    }
  }
  return w;
}

// Fills ccv, tcv and witnesses of `out` from its structures and EI records.
inline void classify(ClcdOutput& out, const VarSet& labels) {
  out.ccv.clear();
  out.tcv.clear();
  out.witnesses.clear();
  for (const VarSet& z : theta_candidates(labels, out.structures, out.ei)) {
    ThetaWitness w = theta_witness(z, labels, out.structures, out.ei);
    if (w.satisfied_labels.size() < 2) continue;
    out.ccv[w.satisfied_labels] |= z;
    out.witnesses.push_back(std::move(w));
  }
  for (VarId l : labels) {
    VarSet common;
    for (const auto& [key, vars] : out.ccv)
      if (key.contains(l)) common |= vars;
    out.tcv[l] = out.structures.at(l).mb - common;
  }
}

template <IndependenceTester Tester>
ClcdOutput clcd(const Tester& t, const VarSet& labels, const ClcdOptions& opt = {}) {
  if (labels.size() < 2) throw Error("clcd: at least two labels are required");
  const VarSet universe = VarSet::range(static_cast<VarId>(t.n_vars()));
  PcCache<Tester> cache(t, universe, opt.mb);
  ClcdOutput out;
  out.structures = phase1_structures(t, labels, cache, opt.workers);
  if (opt.phase2) phase2_retrieve(t, labels, out.structures, universe, opt.max_z);
  out.ei = phase3_equivalences(t, labels, out.structures, cache, universe, opt.max_z, opt.workers);
  classify(out, labels);
  return out;
}

// Baseline classification: a variable is common to every label whose searched
// MB contains it (keyed by that maximal set), specific otherwise.
inline ClcdOutput classify_by_intersection(const std::map<VarId, VarSet>& mbs) {
  ClcdOutput out;
  std::map<VarId, VarSet> owners;
  for (const auto& [label, mb] : mbs) {
    LocalStructure ls;
    ls.target = label;
    ls.pc = mb;
    ls.mb = mb;
    out.structures.emplace(label, std::move(ls));
    for (VarId v : mb) owners[v].insert(label);
  }
  for (const auto& [v, labels] : owners)
    if (labels.size() >= 2) out.ccv[labels].insert(v);
  for (const auto& [label, mb] : mbs) {
    VarSet common;
    for (const auto& [key, vars] : out.ccv)
      if (key.contains(label)) common |= vars;
    out.tcv[label] = mb - common;
  }
  return out;
}

}  // namespace clcd
