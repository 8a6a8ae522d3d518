// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero if
// any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/rational.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <numeric>
#include <thread>
#include <vector>

#include <unistd.h>

#include "test_support.hpp"

#ifndef CLCD_CLI_PATH
#error "CLCD_CLI_PATH must name the CLI binary"
#endif

using namespace clcd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::size_t hw_workers() { return std::max(2u, std::thread::hardware_concurrency()); }

VarSet random_subset(Rng& rng, const VarSet& pool, std::size_t max_size) {
  std::vector<VarId> ids = pool.ids();
  rng.shuffle(ids);
  const auto k = static_cast<std::size_t>(rng.below(std::min(max_size, ids.size()) + 1));
  return VarSet(std::vector<VarId>(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k)));
}

Dataset sample_generated(const Generated& g, const GenConfig& cfg) {
  return sample(g.net, static_cast<std::size_t>(cfg.n_samples), substream_seed(cfg.seed, "sampler"));
}

// ---------------------------------------------------------------------------
// 1. G² / CMI identity and chi-square tail.

Outcome criterion1() {
  Rng rng(101);
  double worst_identity = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto n_vars = static_cast<std::size_t>(rng.between(3, 6));
    const auto n_rows = static_cast<std::size_t>(rng.between(10, 400));
    const Dataset ds = fixtures::random_dataset(rng, n_vars, n_rows, 4);
    const auto x = static_cast<VarId>(rng.below(n_vars));
    VarId y = x;
    while (y == x) y = static_cast<VarId>(rng.below(n_vars));
    const VarSet z = random_subset(rng, ds.all().without(x).without(y), 3);
    const CiResult r = g2_test(ds, x, y, z, {});
    const double mi = cond_mutual_information(ds, VarSet{x}, VarSet{y}, z);
    const double via_mi = 2.0 * static_cast<double>(n_rows) * std::log(2.0) * mi;
    worst_identity = std::max(worst_identity, std::fabs(r.statistic - via_mi));
  }
  using Big = boost::multiprecision::cpp_bin_float_50;
  double worst_tail = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double dof = rng.between(1, 60);
    const double stat = 0.05 + rng.uniform() * 3.0 * dof + rng.uniform() * 20.0;
    const Big ref = boost::math::gamma_q(Big(dof) / 2, Big(stat) / 2);
    worst_tail = std::max(worst_tail, std::fabs(chi2_sf(stat, dof) - ref.convert_to<double>()));
  }
  return {worst_identity <= 1e-9 && worst_tail <= 1e-8,
          "max |G2 - 2n ln2 I| = " + fmt("%.3g", worst_identity) + ", max tail error = " + fmt("%.3g", worst_tail)};
}

// ---------------------------------------------------------------------------
// 2. Plug-in CMI against exact enumeration.

Outcome criterion2() {
  Rng rng(202);
  double worst = 0.0;
  for (int net_i = 0; net_i < 20; ++net_i) {
    const int n_nodes = rng.between(6, 12);
    const BayesNet net = random_network(n_nodes, 0.3, 3, rng);
    const Dataset ds = sample(net, 50000, 1000 + static_cast<std::uint64_t>(net_i));
    const VarSet all = ds.all();
    for (int q = 0; q < 10; ++q) {
      const auto x = static_cast<VarId>(rng.below(static_cast<std::uint64_t>(n_nodes)));
      VarId y = x;
      while (y == x) y = static_cast<VarId>(rng.below(static_cast<std::uint64_t>(n_nodes)));
      const VarSet z = random_subset(rng, all.without(x).without(y), 3);
      const double est = cond_mutual_information(ds, VarSet{x}, VarSet{y}, z);
      worst = std::max(worst, std::fabs(est - exact_cmi(net, VarSet{x}, VarSet{y}, z)));
    }
  }
  return {worst < 0.01, "max |I_hat - I| = " + fmt("%.5f", worst) + " bits over 200 queries"};
}

// ---------------------------------------------------------------------------
// 3. HITON-MB with the d-separation oracle.

Outcome criterion3() {
  Rng rng(303);
  int nets = 0, targets = 0, errors = 0;
  while (nets < 100) {
    const int n_nodes = rng.between(6, 15);
    const BayesNet net = random_network(n_nodes, 0.25, 3, rng);
    CiConfig cfg;
    cfg.max_cond_size = n_nodes;
    DsepTester oracle(net, cfg);
    MbOptions opt;
    opt.symmetry_correction = true;
    int here = 0;
    for (VarId t = 0; t < net.size(); ++t) {
      const VarSet truth = net.markov_blanket(t);
      if (truth.empty() || truth.size() > 6) continue;
      ++here;
      const LocalStructure ls = hiton_mb(oracle, t, VarSet::range(static_cast<VarId>(n_nodes)).without(t), opt);
      if (ls.mb != truth) ++errors;
    }
    if (here == 0) continue;
    targets += here;
    ++nets;
  }
  return {errors == 0, std::to_string(errors) + " errors over " + std::to_string(targets) + " targets on " +
                           std::to_string(nets) + " DAGs"};
}

// ---------------------------------------------------------------------------
// 4. MB recovery from data.

Outcome criterion4() {
  double sum_p = 0.0, sum_r = 0.0;
  int count = 0;
  for (int s = 0; s < 20; ++s) {
    GenConfig cfg;
    cfg.n_labels = 3;
    cfg.n_features = 20;
    cfg.n_samples = 5000;
    cfg.seed = bench_seed(400, s);
    const Generated g = generate(cfg);
    const Dataset ds = sample_generated(g, cfg);
    DataTester t(ds, {});
    for (VarId l : ds.labels()) {
      const VarSet truth = g.net.markov_blanket(l);
      const VarSet found = hiton_mb(t, l, ds.all().without(l)).mb;
      const double hit = static_cast<double>((found & truth).size());
      sum_p += found.empty() ? 1.0 : hit / static_cast<double>(found.size());
      sum_r += truth.empty() ? 1.0 : hit / static_cast<double>(truth.size());
      ++count;
    }
  }
  const double p = sum_p / count, r = sum_r / count;
  return {p >= 0.9 && r >= 0.9, "mean precision " + fmt("%.3f", p) + ", recall " + fmt("%.3f", r)};
}

// ---------------------------------------------------------------------------
// 5. Equivalence detection and false-pair rate.

Outcome criterion5() {
  std::size_t planted = 0, detected = 0;
  for (int s = 0; s < 20; ++s) {
    GenConfig cfg;
    cfg.p_m = 1.0;
    cfg.seed = bench_seed(500, s);
    const Generated g = generate(cfg);
    const Dataset ds = sample_generated(g, cfg);
    DataTester t(ds, {});
    for (const VarSet& cls : g.truth.equivalence_classes) {
      // The original is the member whose parents lie outside the class.
      VarId orig = cls[0];
      for (VarId v : cls)
        if (!g.net.parents(v).intersects(cls)) orig = v;
      for (VarId l : g.net.labels()) {
        const VarSet pc = g.net.parents(l) | g.net.children(l);
        if (!pc.contains(orig)) continue;
        for (VarId copy : cls.without(orig)) {
          ++planted;
          if (contains_equivalent_info(t, l, VarSet{orig}, VarSet{copy})) ++detected;
        }
      }
    }
  }
  std::size_t tested = 0, false_pairs = 0;
  const double alpha = CiConfig{}.alpha;
  for (int s = 0; s < 20; ++s) {
    GenConfig cfg;
    cfg.seed = bench_seed(550, s);
    const Generated g = generate(cfg);
    const Dataset ds = sample_generated(g, cfg);
    DataTester t(ds, {});
    for (VarId l : ds.labels()) {
      const VarSet pc = hiton_pc(t, l, ds.all().without(l)).pc;
      std::size_t dependent = 0;
      for (VarId v : ds.all().without(l) - pc)
        if (!t.test(VarSet{v}, VarSet{l}, {}).independent) ++dependent;
      tested += dependent * pc.size();
      false_pairs += find_equivalences(t, l, pc, ds.all().without(l), 1).size();
    }
  }
  const double recall = planted ? static_cast<double>(detected) / static_cast<double>(planted) : 0.0;
  const double rate = tested ? static_cast<double>(false_pairs) / static_cast<double>(tested) : 0.0;
  return {planted > 0 && recall >= 0.9 && rate <= 2 * alpha,
          "recall " + std::to_string(detected) + "/" + std::to_string(planted) + " = " + fmt("%.3f", recall) +
              ", false pairs " + std::to_string(false_pairs) + "/" + std::to_string(tested) + " = " +
              fmt("%.4f", rate)};
}

// ---------------------------------------------------------------------------
// 6, 7. Benchmark sweeps.

GenConfig desk_config(double p_c, double p_m) {
  GenConfig cfg;
  cfg.n_labels = 10;
  cfg.n_features = 100;
  cfg.n_samples = 5000;
  cfg.p_c = p_c;
  cfg.p_m = p_m;
  cfg.seed = 600;
  return cfg;
}

double row_mean(const BenchReport& r, const std::string& metric, double p_c, double p_m, Algorithm a) {
  for (const auto& row : r.rows)
    if (row.metric == metric && row.p_c == p_c && row.p_m == p_m && row.algorithm == to_string(a)) return row.mean;
  throw Error("missing report row");
}

Outcome criterion6() {
  BenchConfig bc;
  bc.configs = {desk_config(0.5, 0.0), desk_config(0.5, 0.5), desk_config(0.5, 1.0)};
  bc.algorithms = {Algorithm::clcd, Algorithm::hiton_intersect};
  bc.seeds = 10;
  bc.workers = hw_workers();
  const BenchReport r = run_benchmark(bc);
  const double clcd0 = row_mean(r, "common_recall", 0.5, 0.0, Algorithm::clcd);
  const double clcd1 = row_mean(r, "common_recall", 0.5, 1.0, Algorithm::clcd);
  const double hiton1 = row_mean(r, "common_recall", 0.5, 1.0, Algorithm::hiton_intersect);
  const double avg0 = row_mean(r, "recall", 0.5, 0.0, Algorithm::clcd);
  const double avg1 = row_mean(r, "recall", 0.5, 1.0, Algorithm::clcd);
  const bool pass = hiton1 <= 0.5 && clcd1 >= 0.8 && clcd0 - clcd1 < 0.1 && avg0 - avg1 < 0.1;
  return {pass, "common recall at p_m=1: hiton-intersect " + fmt("%.3f", hiton1) + ", clcd " + fmt("%.3f", clcd1) +
                    "; clcd common recall p_m 0->1: " + fmt("%.3f", clcd0) + " -> " + fmt("%.3f", clcd1) +
                    ", averaged recall " + fmt("%.3f", avg0) + " -> " + fmt("%.3f", avg1)};
}

Outcome criterion7() {
  BenchConfig bc;
  bc.configs = {desk_config(0.0, 0.5), desk_config(0.5, 0.5), desk_config(1.0, 0.5)};
  bc.algorithms = {Algorithm::clcd};
  bc.seeds = 10;
  bc.workers = hw_workers();
  const BenchReport r = run_benchmark(bc);
  std::vector<double> ps, rs;
  for (double pc : {0.0, 0.5, 1.0}) {
    ps.push_back(row_mean(r, "precision", pc, 0.5, Algorithm::clcd));
    rs.push_back(row_mean(r, "recall", pc, 0.5, Algorithm::clcd));
  }
  auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
  };
  return {spread(ps) < 0.1 && spread(rs) < 0.1,
          "precision " + fmt("%.3f", ps[0]) + "/" + fmt("%.3f", ps[1]) + "/" + fmt("%.3f", ps[2]) + ", recall " +
              fmt("%.3f", rs[0]) + "/" + fmt("%.3f", rs[1]) + "/" + fmt("%.3f", rs[2]) + " across p_c 0/0.5/1"};
}

// ---------------------------------------------------------------------------
// 8. Retrieval of a variable shadowed by two equivalent labels.

BayesNet shadow_instance(Rng& rng) {
  BayesNet net;
  const VarId t1 = fixtures::add_node(net, "T1", {}, {}, Role::label);
  const VarId t2 = fixtures::add_node(net, "T2", {}, {}, Role::label);
  const VarId w = fixtures::add_node(net, "W", {}, {});
  const VarId x = fixtures::add_node(net, "X", {w}, {});
  // T1 is a relabelling of X, T2 a function of (X, T1) that is again a relabelling of X.
  const int flip1 = static_cast<int>(rng.below(2)), flip2 = static_cast<int>(rng.below(2));
  net.nodes[t1].parents = {x};
  net.nodes[t1].cpt = fixtures::function_cpt({flip1, 1 - flip1}, 2);
  net.nodes[t2].parents = {x, t1};
  std::vector<int> f2;
  for (int r = 0; r < 4; ++r) {
    const int xv = r & 1;
    f2.push_back(xv ^ flip2);
  }
  net.nodes[t2].cpt = fixtures::function_cpt(f2, 2);
  fixtures::add_node(net, "C1", {t1}, {});
  fixtures::add_node(net, "C2", {t2}, {});
  const VarId s = fixtures::add_node(net, "S", {}, {});
  fixtures::add_node(net, "C3", {t2, s}, {});
  for (int i = 0; i < 5; ++i) {
    std::vector<VarId> parents;
    if (i > 0 && rng.bernoulli(0.5)) parents.push_back(static_cast<VarId>(net.size() - 1));
    fixtures::add_node(net, "N" + std::to_string(i), parents, {});
  }
  for (VarId v = 0; v < net.size(); ++v)
    if (v != t1 && v != t2) random_cpt(net, v, rng);
  net.validate();
  return net;
}

Outcome criterion8() {
  int restored_on = 0, restored_off = 0, dropped = 0;
  for (int s = 0; s < 10; ++s) {
    Rng rng(800 + static_cast<std::uint64_t>(s), "shadow");
    const BayesNet net = shadow_instance(rng);
    const Dataset ds = sample(net, 5000, 850 + static_cast<std::uint64_t>(s));
    const VarId x = ds.id("X");
    DataTester t(ds, {});
    ClcdOptions off;
    off.phase2 = false;
    const ClcdOutput a = clcd::clcd(t, ds.labels(), off);
    const ClcdOutput b = clcd::clcd(t, ds.labels());
    auto restored = [&](const ClcdOutput& o) {
      return o.structures.at(0).mb.contains(x) && o.structures.at(1).mb.contains(x);
    };
    dropped += !a.structures.at(0).mb.contains(x) || !a.structures.at(1).mb.contains(x);
    restored_off += restored(a);
    restored_on += restored(b);
  }
  return {restored_on >= 8 && restored_off <= 2,
          "restored with phase 2 in " + std::to_string(restored_on) + "/10, without in " +
              std::to_string(restored_off) + "/10 (dropped by phase 1 in " + std::to_string(dropped) + "/10)"};
}

// ---------------------------------------------------------------------------
// 9. Feature selection relevance, redundancy and label exclusion.

Outcome criterion9() {
  const CiConfig ci;
  std::size_t rel_total = 0, rel_pass = 0, red_total = 0, red_pass = 0, leaks = 0;
  std::size_t labels_checked = 0, labels_ok = 0;
  double worst_label = 1.0;
  int runs = 0;
  auto run_fs = [&](const GenConfig& cfg, bool faithful) {
    const Generated g = generate(cfg);
    const Dataset ds = sample_generated(g, cfg);
    DataTester t(ds, ci);
    const FeatureSelectionResult r = clcd_fs(t, ds.labels(), ds.features());
    ++runs;
    leaks += (r.selected & ds.labels()).size();
    for (const auto& e : r.common) leaks += (e.features & ds.labels()).size();
    for (const auto& [l, fs] : r.specific) leaks += (fs & ds.labels()).size();
    if (!faithful) return;

    // Relevance: X ⊥ T given the max_cond_size selected features most
    // associated with X.
    for (VarId l : ds.labels()) {
      std::size_t here = 0, ok = 0;
      for (VarId x : ds.features() - r.selected) {
        std::vector<std::pair<double, VarId>> ranked;
        for (VarId f : r.selected) ranked.emplace_back(-t.association(f, x, {}), f);
        std::sort(ranked.begin(), ranked.end());
        VarSet scope;
        for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(ci.max_cond_size); ++i)
          scope.insert(ranked[i].second);
        ++here;
        ok += g2_test(ds, x, l, scope, ci).independent;
      }
      rel_total += here;
      rel_pass += ok;
      if (here == 0) continue;
      const double frac = static_cast<double>(ok) / static_cast<double>(here);
      worst_label = std::min(worst_label, frac);
      ++labels_checked;
      labels_ok += frac >= 0.95;
    }

    // Redundancy: Z_T ⊥ T | (MB_T ∖ Z_T) ∪ Z for every non-trivial replacement.
    for (const auto& e : r.common) {
      for (const auto& [l, z_t] : e.replaced) {
        if (z_t.intersects(e.features)) continue;  // θ1: the entry replaced itself
        const VarSet cond = (r.structures.at(l).mb - z_t - e.features) | e.features;
        ++red_total;
        red_pass += g2_test_sets(ds, z_t, VarSet{l}, cond, ci).independent;
      }
    }
  };
  for (int s = 0; s < 20; ++s) {
    GenConfig cfg;
    cfg.n_labels = 5;
    cfg.n_features = 50;
    cfg.seed = bench_seed(900, s);
    run_fs(cfg, true);
  }
  // Label exclusion also under label-label edges and equivalences.
  for (double p_c : {0.0, 1.0})
    for (double p_m : {0.5, 1.0})
      for (int s = 0; s < 5; ++s) {
        GenConfig cfg;
        cfg.n_labels = 5;
        cfg.n_features = 50;
        cfg.p_c = p_c;
        cfg.p_m = p_m;
        cfg.seed = bench_seed(950, s);
        run_fs(cfg, false);
      }
  const double rel = rel_total ? static_cast<double>(rel_pass) / static_cast<double>(rel_total) : 1.0;
  const bool pass = leaks == 0 && labels_ok == labels_checked && red_pass == red_total;
  return {pass, "relevance >= 0.95 for " + std::to_string(labels_ok) + "/" + std::to_string(labels_checked) +
                    " labels (pooled " + std::to_string(rel_pass) + "/" + std::to_string(rel_total) + " = " +
                    fmt("%.3f", rel) + ", worst " + fmt("%.3f", worst_label) + "), redundancy " +
                    std::to_string(red_pass) + "/" + std::to_string(red_total) + ", label leaks " +
                    std::to_string(leaks) + " over " + std::to_string(runs) + " runs"};
}

// ---------------------------------------------------------------------------
// 10. Metric oracles.

using Q = boost::rational<long long>;

struct RefMetrics {
  Q hamming, ranking, f_macro, f_micro;
  std::size_t skipped = 0;
};

// Straight from the definitions, in exact arithmetic.
RefMetrics reference_metrics(const LabelMatrix& pred, const ScoreMatrix& scores, const LabelMatrix& truth) {
  RefMetrics m;
  const auto rows = static_cast<long long>(truth.size());
  const auto cols = static_cast<long long>(truth[0].size());
  Q ham(0), rank(0);
  long long ranked_rows = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    long long diff = 0;
    for (std::size_t j = 0; j < truth[i].size(); ++j) diff += pred[i][j] != truth[i][j];
    ham += Q(diff, cols);
    long long bad = 0, pairs = 0;
    for (std::size_t a = 0; a < truth[i].size(); ++a)
      for (std::size_t b = 0; b < truth[i].size(); ++b)
        if (truth[i][a] && !truth[i][b]) {
          ++pairs;
          if (!(scores[i][a] > scores[i][b])) ++bad;
        }
    if (pairs == 0) {
      ++m.skipped;
      continue;
    }
    rank += Q(bad, pairs);
    ++ranked_rows;
  }
  m.hamming = ham / rows;
  m.ranking = ranked_rows ? rank / ranked_rows : Q(0);
  Q macro(0);
  long long num = 0, den = 0;
  for (long long j = 0; j < cols; ++j) {
    long long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const auto p = pred[i][static_cast<std::size_t>(j)], t = truth[i][static_cast<std::size_t>(j)];
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    macro += (2 * tp + fp + fn) == 0 ? Q(1) : Q(2 * tp, 2 * tp + fp + fn);
    num += 2 * tp;
    den += 2 * tp + fp + fn;
  }
  m.f_macro = macro / cols;
  m.f_micro = den ? Q(num, den) : Q(1);
  return m;
}

double as_double(const Q& q) { return static_cast<double>(q.numerator()) / static_cast<double>(q.denominator()); }

bool matches(const MlMetrics& got, const RefMetrics& want) {
  constexpr double eps = 1e-12;
  return std::fabs(got.hamming_loss - as_double(want.hamming)) <= eps &&
         std::fabs(got.ranking_loss - as_double(want.ranking)) <= eps &&
         std::fabs(got.f_macro - as_double(want.f_macro)) <= eps &&
         std::fabs(got.f_micro - as_double(want.f_micro)) <= eps && got.ranking_skipped == want.skipped;
}

Outcome criterion10() {
  struct Fixture {
    LabelMatrix pred;
    ScoreMatrix scores;
    LabelMatrix truth;
    Q hamming, ranking, f_macro, f_micro;
  };
  // Expected values worked out by hand.
  const std::vector<Fixture> fixtures_list{
      {{{1, 0}, {0, 1}}, {{0.9, 0.1}, {0.2, 0.8}}, {{1, 0}, {0, 1}}, Q(0), Q(0), Q(1), Q(1)},
      {{{0, 1}, {1, 0}}, {{0.1, 0.9}, {0.8, 0.2}}, {{1, 0}, {0, 1}}, Q(1), Q(1), Q(0), Q(0)},
      {{{1, 0, 1}, {0, 1, 1}, {1, 1, 0}, {0, 0, 0}},
       {{0.9, 0.1, 0.5}, {0.2, 0.8, 0.8}, {0.6, 0.7, 0.1}, {0.5, 0.5, 0.5}},
       {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0, 0, 0}},
       Q(1, 6), Q(1, 6), Q(2, 3), Q(8, 10)},
      {{{1, 1, 1}}, {{0.5, 0.5, 0.5}}, {{1, 0, 0}}, Q(2, 3), Q(1), Q(1, 3), Q(2, 4)},
      {{{0, 0}, {0, 0}, {1, 0}}, {{0.3, 0.6}, {0.4, 0.7}, {0.6, 0.2}}, {{0, 1}, {1, 0}, {1, 0}},
       Q(1, 3), Q(1, 3), Q(1, 3), Q(1, 2)},
  };
  int fixtures_ok = 0;
  for (const auto& f : fixtures_list) {
    const MlMetrics m = ml_metrics(f.pred, f.scores, f.truth);
    const RefMetrics ref = reference_metrics(f.pred, f.scores, f.truth);
    const bool hand = std::fabs(m.hamming_loss - as_double(f.hamming)) <= 1e-12 &&
                      std::fabs(m.ranking_loss - as_double(f.ranking)) <= 1e-12 &&
                      std::fabs(m.f_macro - as_double(f.f_macro)) <= 1e-12 &&
                      std::fabs(m.f_micro - as_double(f.f_micro)) <= 1e-12;
    fixtures_ok += hand && matches(m, ref);
  }

  Rng rng(1010);
  int fuzz_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto rows = static_cast<std::size_t>(rng.between(1, 12));
    const auto cols = static_cast<std::size_t>(rng.between(1, 6));
    LabelMatrix pred(rows, std::vector<std::uint8_t>(cols)), truth = pred;
    ScoreMatrix scores(rows, std::vector<double>(cols));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        pred[r][c] = static_cast<std::uint8_t>(rng.below(2));
        truth[r][c] = static_cast<std::uint8_t>(rng.below(2));
        scores[r][c] = static_cast<double>(rng.below(5)) / 4.0;  // coarse grid forces ties
      }
    const MlMetrics m = ml_metrics(pred, scores, truth);
    bool ok = matches(m, reference_metrics(pred, scores, truth));
    for (double v : {m.hamming_loss, m.ranking_loss, m.f_macro, m.f_micro}) ok = ok && v >= 0.0 && v <= 1.0;
    // Perfect predictions, complemented predictions, monotone score maps, label
    // and row permutations.
    const MlMetrics self = ml_metrics(truth, scores, truth);
    ok = ok && self.hamming_loss == 0.0 && self.f_macro == 1.0 && self.f_micro == 1.0;
    LabelMatrix comp = pred;
    for (auto& row : comp)
      for (auto& v : row) v = static_cast<std::uint8_t>(1 - v);
    ok = ok && std::fabs(hamming_loss(comp, truth) - (1.0 - m.hamming_loss)) <= 1e-12;
    ScoreMatrix warped = scores;
    for (auto& row : warped)
      for (auto& v : row) v = std::exp(3.0 * v) + 1.0;
    ok = ok && std::fabs(ranking_loss(warped, truth).value - m.ranking_loss) <= 1e-12;
    std::vector<std::size_t> perm(cols);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    LabelMatrix pp = pred, tp = truth;
    ScoreMatrix sp = scores;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        pp[r][c] = pred[r][perm[c]];
        tp[r][c] = truth[r][perm[c]];
        sp[r][c] = scores[r][perm[c]];
      }
    std::reverse(pp.begin(), pp.end());
    std::reverse(tp.begin(), tp.end());
    std::reverse(sp.begin(), sp.end());
    const MlMetrics pm = ml_metrics(pp, sp, tp);
    ok = ok && std::fabs(pm.hamming_loss - m.hamming_loss) <= 1e-12 &&
         std::fabs(pm.ranking_loss - m.ranking_loss) <= 1e-12 && std::fabs(pm.f_macro - m.f_macro) <= 1e-12 &&
         std::fabs(pm.f_micro - m.f_micro) <= 1e-12;
    fuzz_bad += !ok;
  }
  return {fixtures_ok == 5 && fuzz_bad == 0, std::to_string(fixtures_ok) + "/5 fixtures exact, " +
                                                 std::to_string(fuzz_bad) + " fuzz violations in 1000 cases"};
}

// ---------------------------------------------------------------------------
// 11. CLI determinism.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Byte comparison of every file except the manifest; empty string when equal.
std::string compare_dirs(const fs::path& a, const fs::path& b) {
  std::set<std::string> names;
  for (const auto& d : {a, b})
    for (const auto& e : fs::directory_iterator(d)) names.insert(e.path().filename().string());
  names.erase("manifest.json");
  if (names.empty()) return "no outputs in " + a.string();
  for (const auto& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n)) return n + " missing on one side";
    if (slurp(a / n) != slurp(b / n)) return n + " differs between " + a.string() + " and " + b.string();
  }
  return {};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + CLCD_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome criterion11() {
  const fs::path root = fs::temp_directory_path() / ("clcd_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  auto p = [&](const std::string& s) { return "\"" + (root / s).string() + "\""; };
  std::vector<std::string> problems;
  auto must = [&](const std::string& args) {
    if (run_cli(args) != 0) problems.push_back("command failed: " + args);
  };
  auto same = [&](const std::string& a, const std::string& b) {
    if (!fs::exists(root / a) || !fs::exists(root / b)) {
      problems.push_back("missing output directory " + a + " or " + b);
      return;
    }
    const std::string diff = compare_dirs(root / a, root / b);
    if (!diff.empty()) problems.push_back(diff);
  };
  auto replay = [&](const std::string& dir) {
    must("replay --manifest " + p(dir + "/manifest.json") + " --out " + p(dir + "_replay"));
    same(dir, dir + "_replay");
  };

  must("gen --labels 3 --features 24 --samples 2000 --pm 0.5 --pc 0.5 --seed 11 --out " + p("gen"));
  replay("gen");
  const std::string data = "--data " + p("gen/data.csv") + " --meta " + p("gen/meta.json");
  for (const char* algo : {"clcd", "hiton-intersect", "iamb-intersect"}) {
    const std::string a = std::string("disc_") + algo;
    must("discover " + data + " --algo " + algo + " --workers 1 --out " + p(a + "_w1"));
    must("discover " + data + " --algo " + algo + " --workers 4 --out " + p(a + "_w4"));
    same(a + "_w1", a + "_w4");
    replay(a + "_w1");
  }
  must("select " + data + " --workers 1 --out " + p("sel_w1"));
  must("select " + data + " --workers 4 --out " + p("sel_w4"));
  same("sel_w1", "sel_w4");
  replay("sel_w1");
  must("eval --found " + p("disc_clcd_w1/clcd.json") + " --truth " + p("gen/truth.json") + " --selected " +
       p("sel_w1/selected.csv") + " " + data + " --split 0.7 --seed 3 --out " + p("eval"));
  replay("eval");
  {
    std::ofstream sweep(root / "sweep.json");
    sweep << R"({"base": {"n_labels": 3, "n_features": 24, "n_samples": 1500, "seed": 5},)"
          << R"( "points": [{"p_m": 0.0}, {"p_m": 1.0}]})" << '\n';
  }
  must("bench --sweep " + p("sweep.json") + " --seeds 3 --timing tests --workers 1 --out " + p("bench_w1"));
  must("bench --sweep " + p("sweep.json") + " --seeds 3 --timing tests --workers 4 --out " + p("bench_w4"));
  same("bench_w1", "bench_w4");
  replay("bench_w1");

  // A changed input must be caught by the replay hash check.
  {
    std::ofstream(root / "gen/data.csv", std::ios::app) << "\n";
    if (run_cli("replay --manifest " + p("disc_clcd_w1/manifest.json") + " --out " + p("stale")) == 0)
      problems.push_back("replay accepted a modified input");
  }
  fs::remove_all(root);
  std::string detail = problems.empty() ? "gen, discover x3, select, eval and bench replay byte-identically; "
                                          "workers 1 and 4 agree"
                                        : problems.front();
  if (problems.size() > 1) detail += " (+" + std::to_string(problems.size() - 1) + " more)";
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "G2 statistic equals 2n ln2 CMI; chi-square tail matches high-precision gamma", 10, criterion1},
      {2, "plug-in CMI within 0.01 bits of exact enumeration", 120, criterion2},
      {3, "HITON-MB with the d-separation oracle recovers every graphical MB", 30, criterion3},
      {4, "HITON-MB precision and recall >= 0.9 on faithful data", 120, criterion4},
      {5, "planted equivalences detected (recall >= 0.9), false-pair rate <= 2 alpha", 0, criterion5},
      {6, "p_m sweep: intersection common recall <= 0.5, CLCD >= 0.8 and stable", 600, criterion6},
      {7, "p_c sweep: CLCD precision and recall vary by < 0.1", 600, criterion7},
      {8, "phase 2 restores the shadowed common cause", 0, criterion8},
      {9, "feature selection relevance, redundancy and label exclusion", 0, criterion9},
      {10, "multi-label metrics match exact references and fuzz properties", 0, criterion10},
      {11, "CLI replay is byte-identical and independent of workers", 0, criterion11},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0 && secs >= c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f", c.limit_seconds) + " s budget";
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " -- " << o.detail
              << " [" << fmt("%.1f", secs) << " s]" << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
