#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clcd/ci_test.hpp"
#include "clcd/dataset.hpp"
#include "clcd/error.hpp"
#include "clcd/rng.hpp"
#include "clcd/var_set.hpp"

// Ground-truthed Bayesian networks for benchmarking.

namespace clcd {

struct BnNode {
  std::string name;
  Role role = Role::feature;
  int arity = 2;
  std::vector<VarId> parents;
  // Row-major: row r holds P(node = k | parents = config r) at r * arity + k.
  // The parent configuration index is mixed-radix, first parent fastest.
  std::vector<double> cpt;
};

// BayesNet
//
// Discrete DAG with conditional probability tables. Node ids double as
// dataset variable ids when sampling.
class BayesNet {
 public:
  std::vector<BnNode> nodes;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }

  VarId add(BnNode node) {
    nodes.push_back(std::move(node));
    return static_cast<VarId>(nodes.size() - 1);
  }

  [[nodiscard]] std::size_t rows(VarId v) const {
    std::size_t r = 1;
    for (VarId p : nodes.at(v).parents) r *= static_cast<std::size_t>(nodes.at(p).arity);
    return r;
  }

  [[nodiscard]] VarSet parents(VarId v) const { return VarSet(nodes.at(v).parents); }

  [[nodiscard]] VarSet children(VarId v) const {
    VarSet c;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (std::find(nodes[i].parents.begin(), nodes[i].parents.end(), v) != nodes[i].parents.end())
        c.insert(static_cast<VarId>(i));
    return c;
  }

  // Graphical Markov boundary: parents, children and the children's other parents.
  [[nodiscard]] VarSet markov_blanket(VarId v) const {
    VarSet mb = parents(v);
    for (VarId c : children(v)) {
      mb.insert(c);
      mb |= parents(c);
    }
    mb.erase(v);
    return mb;
  }

  [[nodiscard]] VarSet labels() const {
    VarSet l;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].role == Role::label) l.insert(static_cast<VarId>(i));
    return l;
  }

  [[nodiscard]] VarSet features() const {
    return VarSet::range(static_cast<VarId>(nodes.size())) - labels();
  }

  [[nodiscard]] std::optional<VarId> find(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].name == name) return static_cast<VarId>(i);
    return std::nullopt;
  }

  // Kahn order, ties by ascending id. Throws on cycles.
  [[nodiscard]] std::vector<VarId> topo_order() const {
    const std::size_t n = nodes.size();
    std::vector<std::size_t> indeg(n, 0);
    std::vector<std::vector<VarId>> kids(n);
    for (std::size_t i = 0; i < n; ++i)
      for (VarId p : nodes[i].parents) {
        if (p >= n) throw Error("bayes net: parent id out of range");
        ++indeg[i];
        kids[p].push_back(static_cast<VarId>(i));
      }
    std::set<VarId> ready;
    for (std::size_t i = 0; i < n; ++i)
      if (indeg[i] == 0) ready.insert(static_cast<VarId>(i));
    std::vector<VarId> order;
    while (!ready.empty()) {
      VarId v = *ready.begin();
      ready.erase(ready.begin());
      order.push_back(v);
      for (VarId c : kids[v])
        if (--indeg[c] == 0) ready.insert(c);
    }
    if (order.size() != n) throw Error("bayes net: graph has a cycle");
    return order;
  }

  void validate() const {
    (void)topo_order();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      if (node.arity < 1) throw Error("bayes net: arity of '" + node.name + "' must be >= 1");
      const std::size_t r = rows(static_cast<VarId>(i));
      if (node.cpt.size() != r * static_cast<std::size_t>(node.arity))
        throw Error("bayes net: CPT of '" + node.name + "' has wrong size");
      for (std::size_t row = 0; row < r; ++row) {
        double s = 0.0;
        for (int k = 0; k < node.arity; ++k) {
          double p = node.cpt[row * static_cast<std::size_t>(node.arity) + static_cast<std::size_t>(k)];
          if (p < 0.0) throw Error("bayes net: negative probability in '" + node.name + "'");
          s += p;
        }
        if (std::fabs(s - 1.0) > 1e-12) throw Error("bayes net: CPT row of '" + node.name + "' does not sum to 1");
      }
    }
  }

  [[nodiscard]] std::size_t row_index(VarId v, std::span<const Code> assignment) const {
    std::size_t idx = 0, mult = 1;
    for (VarId p : nodes[v].parents) {
      idx += assignment[p] * mult;
      mult *= static_cast<std::size_t>(nodes[p].arity);
    }
    return idx;
  }

  [[nodiscard]] double prob(VarId v, Code value, std::span<const Code> assignment) const {
    return nodes[v].cpt[row_index(v, assignment) * static_cast<std::size_t>(nodes[v].arity) + value];
  }
};

// ---------------------------------------------------------------------------
// d-separation

// True iff every path between xs and ys is blocked by z (reachability with
// collider rules).
inline bool dseparated(const BayesNet& net, const VarSet& xs, const VarSet& ys, const VarSet& z) {
  const std::size_t n = net.size();
  std::vector<std::vector<VarId>> kids(n);
  for (std::size_t i = 0; i < n; ++i)
    for (VarId p : net.nodes[i].parents) kids[p].push_back(static_cast<VarId>(i));
  // Ancestors of z (inclusive): colliders in this set are open.
  std::vector<char> in_z(n, 0), anc(n, 0);
  std::vector<VarId> stack;
  for (VarId v : z) {
    in_z[v] = 1;
    stack.push_back(v);
  }
  while (!stack.empty()) {
    VarId v = stack.back();
    stack.pop_back();
    if (anc[v]) continue;
    anc[v] = 1;
    for (VarId p : net.nodes[v].parents) stack.push_back(p);
  }
  // visited[v][dir]: dir 0 = arrived from a child (moving up), 1 = from a parent.
  std::vector<std::array<char, 2>> visited(n, {0, 0});
  std::vector<std::pair<VarId, int>> frontier;
  for (VarId x : xs) frontier.emplace_back(x, 0);
  while (!frontier.empty()) {
    auto [v, dir] = frontier.back();
    frontier.pop_back();
    if (visited[v][static_cast<std::size_t>(dir)]) continue;
    visited[v][static_cast<std::size_t>(dir)] = 1;
    if (!in_z[v] && ys.contains(v)) return false;
    if (dir == 0) {
      if (!in_z[v]) {
        for (VarId p : net.nodes[v].parents) frontier.emplace_back(p, 0);
        for (VarId c : kids[v]) frontier.emplace_back(c, 1);
      }
    } else {
      if (!in_z[v])
        for (VarId c : kids[v]) frontier.emplace_back(c, 1);
      if (anc[v])
        for (VarId p : net.nodes[v].parents) frontier.emplace_back(p, 0);
    }
  }
  return true;
}

inline bool dsep_oracle(const BayesNet& net, VarId x, VarId y, const VarSet& z) {
  return dseparated(net, VarSet{x}, VarSet{y}, z);
}

// DsepTester
//
// Graphical oracle with the IndependenceTester interface: independence is
// d-separation, association is 1 for d-connected pairs and 0 otherwise.
class DsepTester {
 public:
  DsepTester(const BayesNet& net, CiConfig cfg) : net_(&net), cfg_(cfg) {}

  [[nodiscard]] CiResult test(const VarSet& xs, const VarSet& ys, const VarSet& z) const {
    if (xs.empty() || ys.empty() || xs.intersects(ys) || xs.intersects(z) || ys.intersects(z))
      throw Error("dsep oracle: argument sets must be nonempty and disjoint");
    CiResult r;
    r.reliable = true;
    r.dof = 1;
    r.independent = dseparated(*net_, xs, ys, z);
    r.p_value = r.independent ? 1.0 : 0.0;
    r.log_p = r.independent ? 0.0 : -std::numeric_limits<double>::infinity();
    r.statistic = r.independent ? 0.0 : 1.0;
    return r;
  }

  [[nodiscard]] double association(VarId x, VarId t, const VarSet& z) const {
    return dseparated(*net_, VarSet{x}, VarSet{t}, z) ? 0.0 : 1.0;
  }

  [[nodiscard]] const CiConfig& config() const { return cfg_; }
  [[nodiscard]] std::size_t n_vars() const { return net_->size(); }

 private:
  const BayesNet* net_;
  CiConfig cfg_;
};

// ---------------------------------------------------------------------------
// Exact information quantities

// Joint distribution of `vars` (mixed radix, first member fastest), obtained by
// enumerating the ancestral closure.
inline std::vector<double> exact_marginal(const BayesNet& net, const VarSet& vars,
                                          double max_states = static_cast<double>(1 << 22)) {
  VarSet closure;
  std::vector<VarId> stack(vars.begin(), vars.end());
  while (!stack.empty()) {
    VarId v = stack.back();
    stack.pop_back();
    if (!closure.insert(v)) continue;
    for (VarId p : net.nodes.at(v).parents) stack.push_back(p);
  }
  double states = 1.0;
  for (VarId v : closure) states *= net.nodes[v].arity;
  if (states > max_states) throw Error("exact enumeration: network too large to enumerate");

  std::vector<VarId> order;
  for (VarId v : net.topo_order())
    if (closure.contains(v)) order.push_back(v);
  std::size_t out_size = 1;
  std::vector<std::size_t> mult;
  for (VarId v : vars) {
    mult.push_back(out_size);
    out_size *= static_cast<std::size_t>(net.nodes[v].arity);
  }
  std::vector<double> out(out_size, 0.0);
  std::vector<Code> assignment(net.size(), 0);

  // Depth-first over the closure in topological order.
  auto recurse = [&](auto&& self, std::size_t depth, double p) -> void {
    if (p == 0.0) return;
    if (depth == order.size()) {
      std::size_t idx = 0;
      for (std::size_t i = 0; i < vars.size(); ++i) idx += assignment[vars[i]] * mult[i];
      out[idx] += p;
      return;
    }
    const VarId v = order[depth];
    const std::size_t row = net.row_index(v, assignment);
    const auto arity = static_cast<std::size_t>(net.nodes[v].arity);
    for (std::size_t k = 0; k < arity; ++k) {
      assignment[v] = static_cast<Code>(k);
      self(self, depth + 1, p * net.nodes[v].cpt[row * arity + k]);
    }
    assignment[v] = 0;
  };
  recurse(recurse, 0, 1.0);
  return out;
}

// Exact I(xs; ys | zs) in bits from the enumerated joint.
inline double exact_cmi(const BayesNet& net, const VarSet& xs, const VarSet& ys, const VarSet& zs) {
  if (xs.empty() || ys.empty() || xs.intersects(ys) || xs.intersects(zs) || ys.intersects(zs))
    throw Error("exact_cmi: argument sets must be nonempty and disjoint");
  const VarSet all = xs | ys | zs;
  const std::vector<double> joint = exact_marginal(net, all);
  // Decompose each joint index into (x, y, z) composite codes.
  auto composite = [&](const VarSet& part, std::size_t idx) {
    std::size_t code = 0, mult_out = 1, mult_in = 1;
    for (VarId v : all) {
      const auto a = static_cast<std::size_t>(net.nodes[v].arity);
      const std::size_t digit = (idx / mult_in) % a;
      mult_in *= a;
      if (part.contains(v)) {
        code += digit * mult_out;
        mult_out *= a;
      }
    }
    return code;
  };
  std::map<std::size_t, double> pxz, pyz, pz;
  double h_xyz = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] == 0.0) continue;
    h_xyz -= joint[i] * std::log2(joint[i]);
    pxz[composite(xs | zs, i)] += joint[i];
    pyz[composite(ys | zs, i)] += joint[i];
    pz[composite(zs, i)] += joint[i];
  }
  auto entropy = [](const auto& m) {
    double h = 0.0;
    for (const auto& [k, p] : m)
      if (p > 0.0) h -= p * std::log2(p);
    return h;
  };
  const double mi = entropy(pxz) + entropy(pyz) - h_xyz - entropy(pz);
  return std::max(0.0, mi);
}

// ---------------------------------------------------------------------------
// CPT construction

namespace detail {

// Symmetric Dirichlet(1) row sharpened until its largest entry reaches `floor`.
inline std::vector<double> sharpened_row(int arity, double floor, Rng& rng) {
  std::vector<double> row(static_cast<std::size_t>(arity));
  double s = 0.0;
  for (auto& p : row) s += (p = rng.exponential());
  for (auto& p : row) p /= s;
  if (arity == 1) return row;
  while (*std::max_element(row.begin(), row.end()) < floor) {
    double t = 0.0;
    for (auto& p : row) t += (p = std::pow(p, 1.5));
    for (auto& p : row) p /= t;
  }
  return row;
}

inline double total_variation(const double* a, const double* b, int arity) {
  double d = 0.0;
  for (int k = 0; k < arity; ++k) d += std::fabs(a[k] - b[k]);
  return 0.5 * d;
}

// Weakest parent effect: for each parent, rows are averaged over the other
// parents' configurations (uniform weights) and the largest TV distance between
// two of its values is taken; minimum over parents. Averaging rules out
// XOR-like tables whose effects cancel marginally. Roots report their smallest
// probability.
inline double weakest_effect(const BayesNet& net, VarId v) {
  const auto& node = net.nodes[v];
  const std::size_t rows = net.rows(v);
  const auto a = static_cast<std::size_t>(node.arity);
  if (node.parents.empty()) return *std::min_element(node.cpt.begin(), node.cpt.end());
  double weakest = 1.0;
  std::size_t mult = 1;
  for (VarId p : node.parents) {
    const auto radix = static_cast<std::size_t>(net.nodes[p].arity);
    std::vector<double> avg(radix * a, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t d = (r / mult) % radix;
      for (std::size_t k = 0; k < a; ++k) avg[d * a + k] += node.cpt[r * a + k];
    }
    const double share = static_cast<double>(radix) / static_cast<double>(rows);
    for (auto& x : avg) x *= share;
    double best = 0.0;
    for (std::size_t i = 0; i < radix; ++i)
      for (std::size_t j = i + 1; j < radix; ++j)
        best = std::max(best, total_variation(&avg[i * a], &avg[j * a], node.arity));
    weakest = std::min(weakest, best);
    mult *= radix;
  }
  return weakest;
}

}  // namespace detail

struct CptOptions {
  double max_prob_floor = 0.6;
  // Required weakest parent effect (TV distance of averaged rows); roots need
  // min prob >= root_floor.
  double min_effect = 0.25;
  double root_floor = 0.1;
  int attempts = 200;
};

// Fills node v's CPT with sharpened Dirichlet rows, redrawing until every
// parent has a detectable effect (keeps the best attempt otherwise).
inline void random_cpt(BayesNet& net, VarId v, Rng& rng, const CptOptions& opt = {}) {
  auto& node = net.nodes.at(v);
  const std::size_t rows = net.rows(v);
  const double need = node.parents.empty() ? opt.root_floor : opt.min_effect;
  std::vector<double> best;
  double best_score = -1.0;
  for (int attempt = 0; attempt < opt.attempts; ++attempt) {
    node.cpt.clear();
    for (std::size_t r = 0; r < rows; ++r) {
      auto row = detail::sharpened_row(node.arity, opt.max_prob_floor, rng);
      node.cpt.insert(node.cpt.end(), row.begin(), row.end());
    }
    const double score = node.arity == 1 ? 1.0 : detail::weakest_effect(net, v);
    if (score > best_score) {
      best_score = score;
      best = node.cpt;
    }
    if (score >= need) return;
  }
  node.cpt = best;
}

// Random DAG over n nodes (ids already topological), each node taking up to
// max_parents earlier nodes with probability edge_prob each. The last node is
// marked as a label so sampled data form a valid Dataset.
inline BayesNet random_network(int n_nodes, double edge_prob, int max_parents, Rng& rng, int arity = 2,
                               const CptOptions& cpt = {}) {
  BayesNet net;
  for (int i = 0; i < n_nodes; ++i) {
    BnNode node;
    node.name = "V" + std::to_string(i);
    node.arity = arity;
    std::vector<VarId> earlier(static_cast<std::size_t>(i));
    std::iota(earlier.begin(), earlier.end(), 0);
    rng.shuffle(earlier);
    for (VarId p : earlier) {
      if (static_cast<int>(node.parents.size()) >= max_parents) break;
      if (rng.bernoulli(edge_prob)) node.parents.push_back(p);
    }
    std::sort(node.parents.begin(), node.parents.end());
    node.role = (i == n_nodes - 1) ? Role::label : Role::feature;
    net.add(std::move(node));
  }
  for (int i = 0; i < n_nodes; ++i) random_cpt(net, static_cast<VarId>(i), rng, cpt);
  return net;
}

// ---------------------------------------------------------------------------
// Sampling

inline Dataset sample(const BayesNet& net, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("sample: n must be positive");
  const auto order = net.topo_order();
  Rng rng(seed);
  std::vector<std::vector<Code>> cols(net.size(), std::vector<Code>(n));
  std::vector<Code> row(net.size(), 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (VarId v : order) {
      const auto& node = net.nodes[v];
      const double* probs = &node.cpt[net.row_index(v, row) * static_cast<std::size_t>(node.arity)];
      double u = rng.uniform();
      int k = 0;
      for (; k + 1 < node.arity; ++k) {
        if (u < probs[k]) break;
        u -= probs[k];
      }
      row[v] = static_cast<Code>(k);
      cols[v][r] = row[v];
    }
  }
  std::vector<std::string> names;
  std::vector<Role> roles;
  std::vector<int> arities;
  for (const auto& node : net.nodes) {
    names.push_back(node.name);
    roles.push_back(node.role);
    arities.push_back(node.arity);
  }
  return Dataset(std::move(names), std::move(roles), std::move(arities), std::move(cols));
}

// ---------------------------------------------------------------------------
// Equivalence injection

// Appends `copies` deterministic bijective relabelings Y_j = π_j(X) of x as
// children of x. Returns the class {x, Y_1, ..., Y_g}.
inline VarSet inject_equivalence(BayesNet& net, VarId x, int copies, Rng& rng) {
  const int arity = net.nodes.at(x).arity;
  if (arity < 2) throw Error("inject_equivalence: variable must have arity >= 2");
  VarSet cls{x};
  for (int j = 0; j < copies; ++j) {
    std::vector<int> perm(static_cast<std::size_t>(arity));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    BnNode node;
    node.name = net.nodes[x].name + "_eq" + std::to_string(j + 1);
    node.role = Role::feature;
    node.arity = arity;
    node.parents = {x};
    node.cpt.assign(static_cast<std::size_t>(arity * arity), 0.0);
    for (int v = 0; v < arity; ++v) node.cpt[static_cast<std::size_t>(v * arity + perm[static_cast<std::size_t>(v)])] = 1.0;
    cls.insert(net.add(std::move(node)));
  }
  return cls;
}

// ---------------------------------------------------------------------------
// Ground truth

struct GroundTruth {
  std::map<VarId, std::vector<VarSet>> mb_variants;
  std::vector<VarSet> equivalence_classes;
  // Keyed by the maximal label set whose variants all contain the variables.
  std::map<VarSet, VarSet> common_true;
  std::map<VarId, VarSet> specific_true;

  [[nodiscard]] VarSet common_union() const {
    VarSet u;
    for (const auto& [k, v] : common_true) u |= v;
    return u;
  }

  [[nodiscard]] VarSet common_for(const VarSet& labels) const {
    VarSet u;
    for (const auto& [key, vars] : common_true)
      if (labels.subset_of(key)) u |= vars;
    return u;
  }
};

inline constexpr std::size_t kMaxMbVariants = 4096;

// Derives every MB variant by substituting class members into the graphical
// MB, then common/specific sets by membership counting.
inline GroundTruth ground_truth(const BayesNet& net, const std::vector<VarSet>& classes) {
  GroundTruth gt;
  gt.equivalence_classes = classes;
  std::map<VarId, VarSet> owners;
  for (VarId label : net.labels()) {
    const VarSet base = net.markov_blanket(label);
    std::vector<VarSet> variants{base};
    for (const VarSet& cls : classes) {
      const VarSet present = cls & base;
      if (present.empty()) continue;
      std::vector<VarSet> next;
      for (const VarSet& v : variants) {
        for (VarId member : cls) {
          if (next.size() >= kMaxMbVariants) break;
          next.push_back((v - present).with(member));
        }
      }
      variants = std::move(next);
    }
    std::sort(variants.begin(), variants.end());
    variants.erase(std::unique(variants.begin(), variants.end()), variants.end());
    for (const VarSet& v : variants)
      for (VarId m : v) owners[m].insert(label);
    gt.mb_variants[label] = std::move(variants);
  }
  for (const auto& [v, labels] : owners) {
    if (labels.size() >= 2) gt.common_true[labels].insert(v);
    else gt.specific_true[labels[0]].insert(v);
  }
  for (VarId label : net.labels()) gt.specific_true[label];  // every label present
  return gt;
}

// ---------------------------------------------------------------------------
// Generator

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct GenConfig {
  int n_labels = 3;
  int n_features = 30;
  int n_samples = 5000;
  double p_c = 0.0;
  double p_m = 0.0;
  IntRange mb_size{3, 5};
  IntRange eq_copies{2, 3};
  double share_prob = 0.3;
  int arity = 2;
  // Split of MB members into parents / children / spouses.
  double parent_frac = 0.4;
  double child_frac = 0.4;
  double spouse_frac = 0.2;
  std::uint64_t seed = 1;

  [[nodiscard]] int labels_with_multiple_mbs() const {
    return static_cast<int>(std::ceil(p_m * n_labels - 1e-9));
  }

  [[nodiscard]] int required_features() const {
    return n_labels * mb_size.hi + labels_with_multiple_mbs() * eq_copies.hi;
  }

  void validate() const {
    if (n_labels < 1 || n_features < 1 || n_samples < 1) throw Error("labels, features and samples must be positive");
    if (p_c < 0 || p_c > 1 || p_m < 0 || p_m > 1) throw Error("p_c and p_m must lie in [0, 1]");
    if (share_prob < 0 || share_prob > 1) throw Error("share_prob must lie in [0, 1]");
    if (mb_size.lo < 1 || mb_size.hi < mb_size.lo) throw Error("mb_size range must be nonempty and positive");
    if (eq_copies.lo < 1 || eq_copies.hi < eq_copies.lo) throw Error("eq_copies range must be nonempty and positive");
    if (arity < 2) throw Error("arity must be >= 2");
    if (parent_frac < 0 || child_frac < 0 || spouse_frac < 0 || parent_frac + child_frac + spouse_frac <= 0)
      throw Error("role split must be non-negative and not all zero");
    if (required_features() > n_features)
      throw Error("infeasible config: need at least " + std::to_string(required_features()) + " features, got " +
                  std::to_string(n_features));
  }
};

struct Generated {
  BayesNet net;
  GroundTruth truth;
  // Labels selected for equivalence injection / label-label edges.
  VarSet multi_mb_labels;
  VarSet label_edge_labels;
};

namespace detail {

struct GenState {
  BayesNet net;
  int features_left = 0;
  VarSet roots;  // root features already in some label's MB (shareable)
  VarSet copies;

  VarId new_feature(std::vector<VarId> parents, int arity) {
    if (features_left <= 0) throw Error("infeasible config: ran out of features");
    --features_left;
    BnNode node;
    node.name = "f" + std::to_string(net.size());
    node.role = Role::feature;
    node.arity = arity;
    node.parents = std::move(parents);
    return net.add(std::move(node));
  }

  void add_edge(VarId from, VarId to) {
    auto& ps = net.nodes[to].parents;
    if (std::find(ps.begin(), ps.end(), from) == ps.end()) ps.push_back(from);
  }
};

// Remaps ids: labels keep 0..k-1, features are shuffled after them and renamed.
inline std::pair<BayesNet, std::vector<VarId>> permute_features(const BayesNet& net, std::size_t n_labels, Rng& rng) {
  std::vector<VarId> feats;
  for (std::size_t i = n_labels; i < net.size(); ++i) feats.push_back(static_cast<VarId>(i));
  rng.shuffle(feats);
  std::vector<VarId> new_id(net.size());
  for (std::size_t i = 0; i < n_labels; ++i) new_id[i] = static_cast<VarId>(i);
  for (std::size_t j = 0; j < feats.size(); ++j) new_id[feats[j]] = static_cast<VarId>(n_labels + j);
  BayesNet out;
  out.nodes.resize(net.size());
  for (std::size_t old = 0; old < net.size(); ++old) {
    BnNode node = net.nodes[old];
    for (auto& p : node.parents) p = new_id[p];
    const VarId id = new_id[old];
    node.name = id < n_labels ? "T" + std::to_string(id + 1) : "X" + std::to_string(id - n_labels + 1);
    out.nodes[id] = std::move(node);
  }
  return {std::move(out), std::move(new_id)};
}

// Parents are reordered ascending; the CPT rows follow the new radix order.
inline void sort_parents(BayesNet& net, VarId v) {
  auto& node = net.nodes[v];
  const std::size_t k = node.parents.size();
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return node.parents[a] < node.parents[b]; });
  if (std::is_sorted(perm.begin(), perm.end())) return;
  std::vector<VarId> parents(k);
  std::vector<std::size_t> radix_old(k), radix_new(k);
  for (std::size_t i = 0; i < k; ++i) {
    parents[i] = node.parents[perm[i]];
    radix_old[i] = static_cast<std::size_t>(net.nodes[node.parents[i]].arity);
  }
  for (std::size_t i = 0; i < k; ++i) radix_new[i] = radix_old[perm[i]];
  const std::size_t rows = net.rows(v);
  const auto a = static_cast<std::size_t>(node.arity);
  std::vector<double> cpt(node.cpt.size());
  std::vector<std::size_t> digits(k);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t rem = r;
    for (std::size_t i = 0; i < k; ++i) {
      digits[i] = rem % radix_old[i];
      rem /= radix_old[i];
    }
    std::size_t nr = 0, mult = 1;
    for (std::size_t i = 0; i < k; ++i) {
      nr += digits[perm[i]] * mult;
      mult *= radix_new[i];
    }
    std::copy_n(&node.cpt[r * a], a, &cpt[nr * a]);
  }
  node.parents = std::move(parents);
  node.cpt = std::move(cpt);
}

}  // namespace detail

// Builds a labelled network: per-label parents, children and spouses (some
// roots shared across labels), label-label edges for a p_c fraction of labels,
// bijective-copy equivalence classes for a p_m fraction, and sparse background
// features for the remaining budget.
inline Generated generate(const GenConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed, "generator");
  detail::GenState st;
  st.features_left = cfg.n_features;
  const auto k = static_cast<std::size_t>(cfg.n_labels);
  for (std::size_t i = 0; i < k; ++i) {
    BnNode node;
    node.name = "t" + std::to_string(i);
    node.role = Role::label;
    node.arity = 2;
    st.net.add(std::move(node));
  }
  std::vector<VarSet> label_children(k);
  std::vector<VarSet> linked(k);  // roots already attached to each label

  auto shareable_for = [&](std::size_t label) {
    std::vector<VarId> pool;
    for (VarId r : st.roots)
      if (!linked[label].contains(r)) pool.push_back(r);
    return pool;
  };

  const double frac_sum = cfg.parent_frac + cfg.child_frac + cfg.spouse_frac;
  for (std::size_t i = 0; i < k; ++i) {
    const VarId t = static_cast<VarId>(i);
    const int m = rng.between(cfg.mb_size.lo, cfg.mb_size.hi);
    int n_par = std::max(1, static_cast<int>(std::lround(m * cfg.parent_frac / frac_sum)));
    int n_child = static_cast<int>(std::lround(m * cfg.child_frac / frac_sum));
    n_child = std::min(n_child, m - n_par);
    int n_sp = m - n_par - n_child;
    if (n_child == 0 && n_sp > 0) {
      n_par += n_sp;
      n_sp = 0;
    }
    for (int p = 0; p < n_par; ++p) {
      auto pool = shareable_for(i);
      VarId root;
      if (!pool.empty() && rng.bernoulli(cfg.share_prob)) root = rng.pick(pool);
      else root = st.new_feature({}, cfg.arity);
      st.add_edge(root, t);
      linked[i].insert(root);
    }
    std::vector<VarId> kids;
    for (int c = 0; c < n_child; ++c) {
      VarId child = st.new_feature({t}, cfg.arity);
      kids.push_back(child);
      label_children[i].insert(child);
    }
    for (int s = 0; s < n_sp; ++s) {
      const VarId child = rng.pick(kids);
      auto pool = shareable_for(i);
      VarId root;
      if (!pool.empty() && rng.bernoulli(cfg.share_prob)) root = rng.pick(pool);
      else root = st.new_feature({}, cfg.arity);
      st.add_edge(root, child);
      linked[i].insert(root);
    }
    st.roots |= linked[i];
  }

  Generated gen;
  // Label-label edges, lower index -> higher index.
  if (k >= 2) {
    std::vector<VarId> order(k);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const auto n_pc = static_cast<std::size_t>(std::ceil(cfg.p_c * static_cast<double>(k) - 1e-9));
    VarSet has_label_neighbor;
    for (std::size_t c = 0; c < n_pc; ++c) {
      const VarId l = order[c];
      gen.label_edge_labels.insert(l);
      if (has_label_neighbor.contains(l)) continue;
      std::vector<VarId> free, any;
      for (VarId o = 0; o < k; ++o) {
        if (o == l) continue;
        any.push_back(o);
        if (!has_label_neighbor.contains(o)) free.push_back(o);
      }
      const VarId partner = free.empty() ? rng.pick(any) : rng.pick(free);
      st.add_edge(std::min(l, partner), std::max(l, partner));
      has_label_neighbor.insert(l);
      has_label_neighbor.insert(partner);
    }
  }

  // Equivalence injection.
  std::vector<VarSet> classes;
  VarSet injected;
  {
    std::vector<VarId> order(k);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const auto n_pm = static_cast<std::size_t>(cfg.labels_with_multiple_mbs());
    for (std::size_t c = 0; c < n_pm && c < k; ++c) {
      const VarId l = order[c];
      gen.multi_mb_labels.insert(l);
      const VarSet mb = st.net.markov_blanket(l);
      const VarSet parents = st.net.parents(l);
      std::vector<VarId> shared, plain_parents, others;
      for (VarId v : mb) {
        if (v < k || injected.contains(v) || st.copies.contains(v)) continue;
        bool is_shared = false;
        for (std::size_t o = 0; o < k && !is_shared; ++o)
          if (o != l && st.net.markov_blanket(static_cast<VarId>(o)).contains(v)) is_shared = true;
        if (parents.contains(v)) (is_shared ? shared : plain_parents).push_back(v);
        else if (label_children[l].contains(v)) others.push_back(v);
      }
      const std::vector<VarId>* tier = !shared.empty() ? &shared : !plain_parents.empty() ? &plain_parents : &others;
      if (tier->empty()) continue;  // every eligible member already carries a class
      const VarId x = rng.pick(*tier);
      const int g = rng.between(cfg.eq_copies.lo, cfg.eq_copies.hi);
      if (st.features_left < g) throw Error("infeasible config: no room for equivalent copies");
      st.features_left -= g;
      VarSet cls = inject_equivalence(st.net, x, g, rng);
      injected |= cls;
      st.copies |= cls.without(x);
      classes.push_back(cls);
    }
  }

  // Background features: roots or children of existing non-label nodes.
  while (st.features_left > 0) {
    std::vector<VarId> parents;
    if (rng.bernoulli(0.5) && st.net.size() > k) {
      const int n_par = rng.between(1, 2);
      for (int p = 0; p < n_par; ++p) {
        const VarId cand = static_cast<VarId>(k + rng.below(st.net.size() - k));
        if (std::find(parents.begin(), parents.end(), cand) == parents.end()) parents.push_back(cand);
      }
    }
    st.new_feature(std::move(parents), cfg.arity);
  }

  for (VarId v = 0; v < st.net.size(); ++v)
    if (!st.copies.contains(v)) random_cpt(st.net, v, rng);

  auto [net, new_id] = detail::permute_features(st.net, k, rng);
  for (VarId v = 0; v < net.size(); ++v) detail::sort_parents(net, v);
  for (auto& cls : classes) {
    VarSet mapped;
    for (VarId v : cls) mapped.insert(new_id[v]);
    cls = mapped;
  }
  net.validate();
  gen.truth = ground_truth(net, classes);
  gen.net = std::move(net);
  return gen;
}

}  // namespace clcd
