#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "clcd/clcd.hpp"
#include "clcd/clcd_fs.hpp"
#include "clcd/error.hpp"
#include "clcd/synth.hpp"

// JSON forms of networks, ground truth, discovery and selection outputs.
// Variables are written by name; name lists are sorted.

namespace clcd {

using json = nlohmann::json;

class NameTable {
 public:
  NameTable() = default;
  explicit NameTable(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (!index_.emplace(names_[i], static_cast<VarId>(i)).second)
        throw Error("duplicate variable name '" + names_[i] + "'");
  }

  [[nodiscard]] const std::string& name(VarId v) const { return names_.at(v); }
  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }

  [[nodiscard]] VarId id(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown variable '" + name + "'");
    return it->second;
  }

  [[nodiscard]] json names_of(const VarSet& s) const {
    std::vector<std::string> out;
    for (VarId v : s) out.push_back(name(v));
    std::sort(out.begin(), out.end());
    return out;
  }

  [[nodiscard]] VarSet ids_of(const json& arr) const {
    if (!arr.is_array()) throw Error("expected an array of variable names");
    VarSet s;
    for (const auto& n : arr) s.insert(id(n.get<std::string>()));
    return s;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, VarId> index_;
};

inline NameTable names_of(const BayesNet& net) {
  std::vector<std::string> names;
  for (const auto& n : net.nodes) names.push_back(n.name);
  return NameTable(std::move(names));
}

inline NameTable names_of(const Dataset& ds) { return NameTable(ds.names()); }

// ---------------------------------------------------------------------------
// Ground truth

inline json truth_json(const GroundTruth& gt, const NameTable& nt) {
  json j;
  j["variables"] = nt.names();
  json variants = json::object();
  for (const auto& [label, list] : gt.mb_variants) {
    json arr = json::array();
    for (const auto& v : list) arr.push_back(nt.names_of(v));
    variants[nt.name(label)] = arr;
  }
  j["mb_variants"] = variants;
  json classes = json::array();
  for (const auto& c : gt.equivalence_classes) classes.push_back(nt.names_of(c));
  j["equivalence_classes"] = classes;
  json common = json::array();
  for (const auto& [labels, vars] : gt.common_true)
    common.push_back({{"labels", nt.names_of(labels)}, {"variables", nt.names_of(vars)}});
  j["common_true"] = common;
  json specific = json::object();
  for (const auto& [label, vars] : gt.specific_true) specific[nt.name(label)] = nt.names_of(vars);
  j["specific_true"] = specific;
  return j;
}

inline std::pair<GroundTruth, NameTable> truth_from_json(const json& j) {
  try {
    NameTable nt(j.at("variables").get<std::vector<std::string>>());
    GroundTruth gt;
    for (const auto& [label, arr] : j.at("mb_variants").items())
      for (const auto& v : arr) gt.mb_variants[nt.id(label)].push_back(nt.ids_of(v));
    for (const auto& c : j.at("equivalence_classes")) gt.equivalence_classes.push_back(nt.ids_of(c));
    for (const auto& e : j.at("common_true")) gt.common_true[nt.ids_of(e.at("labels"))] |= nt.ids_of(e.at("variables"));
    for (const auto& [label, arr] : j.at("specific_true").items()) gt.specific_true[nt.id(label)] = nt.ids_of(arr);
    return {std::move(gt), std::move(nt)};
  } catch (const json::exception& e) {
    throw Error("truth file: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// Network

inline json network_json(const BayesNet& net, const GroundTruth& gt) {
  const NameTable nt = names_of(net);
  json nodes = json::array();
  for (const auto& n : net.nodes) {
    json parents = json::array();
    for (VarId p : n.parents) parents.push_back(nt.name(p));
    nodes.push_back({{"name", n.name},
                     {"role", n.role == Role::label ? "label" : "feature"},
                     {"arity", n.arity},
                     {"parents", parents},
                     {"cpt", n.cpt}});
  }
  const json truth = truth_json(gt, nt);
  return {{"nodes", nodes}, {"equivalence_classes", truth["equivalence_classes"]}, {"mb_variants", truth["mb_variants"]}};
}

// Parent order is kept as written: it fixes the CPT row layout.
inline BayesNet network_from_json(const json& j) {
  try {
    BayesNet net;
    std::vector<std::string> names;
    for (const auto& n : j.at("nodes")) names.push_back(n.at("name").get<std::string>());
    const NameTable nt(names);
    for (const auto& n : j.at("nodes")) {
      BnNode node;
      node.name = n.at("name").get<std::string>();
      const auto role = n.at("role").get<std::string>();
      if (role != "label" && role != "feature") throw Error("network file: bad role '" + role + "'");
      node.role = role == "label" ? Role::label : Role::feature;
      node.arity = n.at("arity").get<int>();
      for (const auto& p : n.at("parents")) node.parents.push_back(nt.id(p.get<std::string>()));
      node.cpt = n.at("cpt").get<std::vector<double>>();
      net.add(std::move(node));
    }
    net.validate();
    return net;
  } catch (const json::exception& e) {
    throw Error("network file: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// Discovery output

inline json structure_json(const LocalStructure& ls, const NameTable& nt) {
  json spouses = json::object();
  for (const auto& [sp, kids] : ls.spouses) spouses[nt.name(sp)] = nt.names_of(kids);
  return {{"pc", nt.names_of(ls.pc)}, {"spouses", spouses}, {"mb", nt.names_of(ls.mb)}};
}

inline json clcd_json(const ClcdOutput& out, const VarSet& labels, const NameTable& nt, const std::string& algorithm) {
  json j;
  j["algorithm"] = algorithm;
  j["labels"] = nt.names_of(labels);
  json structures = json::object();
  for (const auto& [l, ls] : out.structures) structures[nt.name(l)] = structure_json(ls, nt);
  j["structures"] = structures;
  json ei = json::object();
  for (const auto& [x, pairs] : out.ei) {
    json arr = json::array();
    for (const auto& p : pairs) arr.push_back({{"s", nt.names_of(p.s)}, {"z", nt.names_of(p.z)}});
    ei[nt.name(x)] = arr;
  }
  j["equivalences"] = ei;
  json witnesses = json::array();
  for (const auto& w : out.witnesses) {
    json branches = json::object();
    for (const auto& [l, m] : w.branches) {
      json b = {{"branch", to_string(m.branch)}, {"z_t", nt.names_of(m.z_t)}};
      if (m.child) b["child"] = nt.name(*m.child);
      branches[nt.name(l)] = b;
    }
    witnesses.push_back({{"z", nt.names_of(w.z)}, {"labels", nt.names_of(w.satisfied_labels)}, {"branches", branches}});
  }
  j["witnesses"] = witnesses;
  json ccv = json::array();
  for (const auto& [key, vars] : out.ccv) ccv.push_back({{"labels", nt.names_of(key)}, {"variables", nt.names_of(vars)}});
  j["ccv"] = ccv;
  json tcv = json::object();
  for (const auto& [l, vars] : out.tcv) tcv[nt.name(l)] = nt.names_of(vars);
  j["tcv"] = tcv;
  return j;
}

struct FoundSets {
  std::map<VarSet, VarSet> common;
  std::map<VarId, VarSet> specific;
};

inline FoundSets found_from_json(const json& j, const NameTable& nt) {
  try {
    FoundSets f;
    for (const auto& e : j.at("ccv")) f.common[nt.ids_of(e.at("labels"))] |= nt.ids_of(e.at("variables"));
    for (const auto& [label, arr] : j.at("tcv").items()) f.specific[nt.id(label)] = nt.ids_of(arr);
    return f;
  } catch (const json::exception& e) {
    throw Error("discovery file: " + std::string(e.what()));
  }
}

// Ground truth in discovery-output shape, so truth scored against itself is exact.
inline json truth_as_found_json(const GroundTruth& gt, const NameTable& nt) {
  json ccv = json::array();
  for (const auto& [key, vars] : gt.common_true) ccv.push_back({{"labels", nt.names_of(key)}, {"variables", nt.names_of(vars)}});
  json tcv = json::object();
  for (const auto& [l, vars] : gt.specific_true) tcv[nt.name(l)] = nt.names_of(vars);
  return {{"ccv", ccv}, {"tcv", tcv}};
}

// ---------------------------------------------------------------------------
// Feature selection output

// Labels as rows, selected features (ascending id) as columns.
struct SelectionGrid {
  std::vector<VarId> labels;
  std::vector<VarId> features;
  std::vector<std::vector<int>> cells;
};

inline SelectionGrid selection_grid(const FeatureSelectionResult& r, const VarSet& labels) {
  SelectionGrid g;
  g.labels = labels.ids();
  g.features = r.selected.ids();
  for (VarId l : g.labels) {
    std::vector<int> row;
    for (VarId f : g.features) {
      auto it = r.feature_label_map.find(f);
      row.push_back(it != r.feature_label_map.end() && it->second.contains(l) ? 1 : 0);
    }
    g.cells.push_back(std::move(row));
  }
  return g;
}

inline json selection_json(const FeatureSelectionResult& r, const VarSet& labels, const NameTable& nt) {
  json common = json::array();
  for (const auto& [ls, fs] : r.common_groups()) common.push_back({{"features", nt.names_of(fs)}, {"labels", nt.names_of(ls)}});
  json entries = json::array();
  for (const auto& e : r.common) {
    json replaced = json::object(), branch = json::object();
    for (const auto& [l, z] : e.replaced) replaced[nt.name(l)] = nt.names_of(z);
    for (const auto& [l, b] : e.branch) branch[nt.name(l)] = to_string(b);
    entries.push_back({{"features", nt.names_of(e.features)},
                       {"labels", nt.names_of(e.labels)},
                       {"replaced", replaced},
                       {"branch", branch}});
  }
  json specific = json::object();
  for (const auto& [l, fs] : r.specific) specific[nt.name(l)] = nt.names_of(fs);
  const SelectionGrid g = selection_grid(r, labels);
  json grid_labels = json::array(), grid_features = json::array();
  for (VarId l : g.labels) grid_labels.push_back(nt.name(l));
  for (VarId f : g.features) grid_features.push_back(nt.name(f));
  return {{"common", common},
          {"common_entries", entries},
          {"specific", specific},
          {"selected", nt.names_of(r.selected)},
          {"grid", {{"labels", grid_labels}, {"features", grid_features}, {"cells", g.cells}}},
          {"events", r.events}};
}

// ---------------------------------------------------------------------------
// Generator configuration

inline json gen_config_json(const GenConfig& c) {
  return {{"n_labels", c.n_labels},
          {"n_features", c.n_features},
          {"n_samples", c.n_samples},
          {"p_c", c.p_c},
          {"p_m", c.p_m},
          {"mb_size", {c.mb_size.lo, c.mb_size.hi}},
          {"eq_copies", {c.eq_copies.lo, c.eq_copies.hi}},
          {"share_prob", c.share_prob},
          {"arity", c.arity},
          {"role_split", {c.parent_frac, c.child_frac, c.spouse_frac}},
          {"seed", c.seed}};
}

// Fields absent from j keep their value in `base`.
inline GenConfig gen_config_from_json(const json& j, GenConfig base = {}) {
  try {
    if (!j.is_object()) throw Error("generator config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "n_labels") base.n_labels = value.get<int>();
      else if (key == "n_features") base.n_features = value.get<int>();
      else if (key == "n_samples") base.n_samples = value.get<int>();
      else if (key == "p_c") base.p_c = value.get<double>();
      else if (key == "p_m") base.p_m = value.get<double>();
      else if (key == "mb_size") base.mb_size = {value.at(0).get<int>(), value.at(1).get<int>()};
      else if (key == "eq_copies") base.eq_copies = {value.at(0).get<int>(), value.at(1).get<int>()};
      else if (key == "share_prob") base.share_prob = value.get<double>();
      else if (key == "arity") base.arity = value.get<int>();
      else if (key == "role_split") {
        base.parent_frac = value.at(0).get<double>();
        base.child_frac = value.at(1).get<double>();
        base.spouse_frac = value.at(2).get<double>();
      } else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else throw Error("unknown generator field '" + key + "'");
    }
    return base;
  } catch (const json::exception& e) {
    throw Error("generator config: " + std::string(e.what()));
  }
}

}  // namespace clcd
