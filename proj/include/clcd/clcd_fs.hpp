#pragma once

#include <map>
#include <string>
#include <vector>

#include "clcd/clcd.hpp"

// Causality-based multi-label feature selection.
//
// After the first two CLCD phases, labels are substituted out of every PC set
// by the features that carried their information. Equivalences are then
// scanned over features only, and a greedy loop repeatedly picks the
// candidate set that stands in for structure subsets of the most labels,
// consuming those subsets so no label keeps redundant copies. Whatever
// remains in PC ∪ SP of a label is specific to it.

namespace clcd {

struct CommonEntry {
  VarSet features;
  VarSet labels;
  // Per label, the structure subset Z_T the features replaced.
  std::map<VarId, VarSet> replaced;
  std::map<VarId, ThetaBranch> branch;
};

struct FeatureSelectionResult {
  std::vector<CommonEntry> common;
  std::map<VarId, VarSet> specific;
  std::map<VarId, VarSet> feature_label_map;
  VarSet selected;
  // Structures after label substitution, before the greedy consumption.
  Structures structures;
  EiMap ei;
  std::vector<std::string> events;

  // Common entries merged by label set, in order of first selection.
  [[nodiscard]] std::vector<std::pair<VarSet, VarSet>> common_groups() const {
    std::vector<std::pair<VarSet, VarSet>> groups;  // (labels, features)
    for (const auto& e : common) {
      auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == e.labels; });
      if (it == groups.end()) groups.emplace_back(e.labels, e.features);
      else it->second |= e.features;
    }
    return groups;
  }
};

struct DelabelResult {
  VarSet pc;
  VarSet removed_labels;
  std::vector<std::string> events;
};

// Replaces labels in PC(label) by members of the removed labels' PC sets that
// stay dependent on `label` given every subset (up to max_cond_size) of the
// current PC. A label is removed at most once; re-admission is refused.
template <IndependenceTester Tester>
DelabelResult delabel_pc(const Tester& t, VarId label, const Structures& structures, const VarSet& labels) {
  DelabelResult out;
  out.pc = structures.at(label).pc;
  const auto max_cond = static_cast<std::size_t>(t.config().max_cond_size);
  const VarSet tv{label};
  while (true) {
    const VarSet found = out.pc & labels;
    if (found.empty()) break;
    out.pc -= found;
    out.removed_labels |= found;
    VarSet pool;
    for (VarId l : found) {
      auto it = structures.find(l);
      if (it != structures.end()) pool |= it->second.pc;
    }
    pool -= found;
    pool -= out.pc;
    pool.erase(label);
    const VarSet snapshot = out.pc;
    for (VarId x : pool) {
      if (out.removed_labels.contains(x)) {
        out.events.push_back("delabel: label " + std::to_string(x) + " refused re-admission into PC of " +
                             std::to_string(label));
        continue;
      }
      bool shielded = for_each_subset(snapshot, 0, max_cond, [&](const VarSet& s) {
        return t.test(VarSet{x}, tv, s).independent;
      });
      if (!shielded) out.pc.insert(x);
    }
  }
  return out;
}

// Applies a delabeled PC to a structure: label spouses are dropped, as are
// spouses whose recorded children all left the PC set.
inline void apply_delabel(LocalStructure& ls, const DelabelResult& d, const VarSet& labels) {
  ls.pc = d.pc;
  for (auto it = ls.spouses.begin(); it != ls.spouses.end();) {
    VarSet kids = it->second & ls.pc;
    if (labels.contains(it->first) || ls.pc.contains(it->first) || kids.empty()) {
      it = ls.spouses.erase(it);
    } else {
      it->second = kids;
      ++it;
    }
  }
  ls.refresh_mb();
}

inline void consume(LocalStructure& ls, const ThetaMatch& m) {
  for (VarId v : m.z_t) {
    if (m.branch != ThetaBranch::theta3) ls.pc.erase(v);
    ls.spouses.erase(v);
  }
  // Spouses only linked through consumed children have nothing left to explain.
  for (auto it = ls.spouses.begin(); it != ls.spouses.end();) {
    it->second = it->second & ls.pc;
    if (it->second.empty()) it = ls.spouses.erase(it);
    else ++it;
  }
  ls.refresh_mb();
}

// Greedy common-feature selection over delabeled structures.
inline FeatureSelectionResult select_common(const VarSet& labels, const VarSet& features, Structures structures,
                                            const EiMap& ei) {
  FeatureSelectionResult out;
  out.structures = structures;
  out.ei = ei;
  while (true) {
    std::optional<ThetaWitness> best;
    for (const VarSet& z : theta_candidates(labels, structures, ei, features)) {
      ThetaWitness w = theta_witness(z, labels, structures, ei);
      if (w.satisfied_labels.size() < 2) continue;
      if (!best) {
        best = std::move(w);
        continue;
      }
      const auto ws = w.satisfied_labels.size(), bs = best->satisfied_labels.size();
      // std::set order already yields smaller |Z| first, then lexicographic.
      if (ws > bs) best = std::move(w);
    }
    if (!best) break;
    CommonEntry entry;
    entry.features = best->z;
    entry.labels = best->satisfied_labels;
    for (const auto& [l, m] : best->branches) {
      entry.replaced[l] = m.z_t;
      entry.branch[l] = m.branch;
      consume(structures.at(l), m);
    }
    out.common.push_back(std::move(entry));
  }
  for (VarId l : labels) {
    const LocalStructure& ls = structures.at(l);
    out.specific[l] = (ls.pc | ls.spouse_set()) & features;
  }
  for (const auto& e : out.common)
    for (VarId f : e.features) {
      out.feature_label_map[f] |= e.labels;
      out.selected.insert(f);
    }
  for (const auto& [l, fs] : out.specific)
    for (VarId f : fs) {
      out.feature_label_map[f].insert(l);
      out.selected.insert(f);
    }
  return out;
}

template <IndependenceTester Tester>
FeatureSelectionResult clcd_fs(const Tester& t, const VarSet& labels, const VarSet& features,
                               const ClcdOptions& opt = {}) {
  if (labels.empty()) throw Error("clcd_fs: at least one label is required");
  const VarSet universe = VarSet::range(static_cast<VarId>(t.n_vars()));
  PcCache<Tester> cache(t, universe, opt.mb);
  Structures structures = phase1_structures(t, labels, cache, opt.workers);
  if (opt.phase2 && labels.size() >= 2) phase2_retrieve(t, labels, structures, universe, opt.max_z);

  std::vector<std::string> events;
  Structures delabeled = structures;
  for (VarId l : labels) {
    DelabelResult d = delabel_pc(t, l, structures, labels);
    apply_delabel(delabeled.at(l), d, labels);
    events.insert(events.end(), d.events.begin(), d.events.end());
  }
  EiMap ei = phase3_equivalences(t, labels, delabeled, cache, features, opt.max_z, opt.workers);
  FeatureSelectionResult out = select_common(labels, features, std::move(delabeled), ei);
  out.events.insert(out.events.begin(), events.begin(), events.end());
  return out;
}

}  // namespace clcd
