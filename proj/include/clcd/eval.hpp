#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "clcd/clcd.hpp"
#include "clcd/dataset.hpp"
#include "clcd/error.hpp"
#include "clcd/parallel.hpp"
#include "clcd/rng.hpp"
#include "clcd/synth.hpp"

namespace clcd {

// ---------------------------------------------------------------------------
// Discovery scores

struct VariableScores {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 1.0;
  double recall = 1.0;

  void finish() {
    precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
};

struct DiscoveryScores {
  VariableScores common;
  VariableScores specific;
  VariableScores averaged;
};

namespace detail {

inline const VarSet* class_of(VarId v, const std::vector<VarSet>& classes) {
  for (const auto& c : classes)
    if (c.contains(v)) return &c;
  return nullptr;
}

// Adds counts of `found` against `truth` to s. A found variable is a hit when
// it or a class-mate is true; a true variable is missed unless found, or
// stood in for by a found class-mate outside the true set.
inline void tally(VariableScores& s, const VarSet& found, const VarSet& truth, const std::vector<VarSet>& classes) {
  VarSet credited;
  for (VarId f : found) {
    const VarSet* cls = class_of(f, classes);
    if (truth.contains(f)) {
      ++s.tp;
    } else if (cls && cls->intersects(truth)) {
      ++s.tp;
      credited |= *cls & truth;
    } else {
      ++s.fp;
    }
  }
  for (VarId t : truth)
    if (!found.contains(t) && !credited.contains(t)) ++s.fn;
}

}  // namespace detail

// Common variables are scored on the union over label subsets, specific ones
// per label and pooled. `averaged` holds the pooled counts and the mean of the
// two precision/recall pairs.
inline DiscoveryScores score_variables(const std::map<VarSet, VarSet>& found_common,
                                       const std::map<VarId, VarSet>& found_specific, const GroundTruth& truth) {
  DiscoveryScores out;
  VarSet fc;
  for (const auto& [key, vars] : found_common) fc |= vars;
  detail::tally(out.common, fc, truth.common_union(), truth.equivalence_classes);
  out.common.finish();
  for (const auto& [label, vars] : found_specific) {
    auto it = truth.specific_true.find(label);
    if (it == truth.specific_true.end()) throw Error("score_variables: unknown label id " + std::to_string(label));
    detail::tally(out.specific, vars, it->second, truth.equivalence_classes);
  }
  for (const auto& [label, vars] : truth.specific_true)
    if (!found_specific.count(label)) out.specific.fn += vars.size();
  out.specific.finish();
  out.averaged.tp = out.common.tp + out.specific.tp;
  out.averaged.fp = out.common.fp + out.specific.fp;
  out.averaged.fn = out.common.fn + out.specific.fn;
  out.averaged.precision = 0.5 * (out.common.precision + out.specific.precision);
  out.averaged.recall = 0.5 * (out.common.recall + out.specific.recall);
  return out;
}

// ---------------------------------------------------------------------------
// Multi-label metrics. Matrices are row-per-instance, column-per-label.

using LabelMatrix = std::vector<std::vector<std::uint8_t>>;
using ScoreMatrix = std::vector<std::vector<double>>;

namespace detail {

template <typename A, typename B>
void check_shape(const A& a, const B& b) {
  if (a.size() != b.size()) throw Error("shape mismatch: row counts differ");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].size() != b[i].size()) throw Error("shape mismatch: row " + std::to_string(i) + " lengths differ");
  if (!a.empty())
    for (const auto& row : a)
      if (row.size() != a.front().size()) throw Error("shape mismatch: ragged matrix");
}

}  // namespace detail

inline double hamming_loss(const LabelMatrix& pred, const LabelMatrix& truth) {
  detail::check_shape(pred, truth);
  if (pred.empty() || pred.front().empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::size_t diff = 0;
    for (std::size_t j = 0; j < pred[i].size(); ++j) diff += (pred[i][j] != 0) != (truth[i][j] != 0);
    total += static_cast<double>(diff) / static_cast<double>(pred[i].size());
  }
  return total / static_cast<double>(pred.size());
}

struct RankingLoss {
  double value = 0.0;
  // Rows with no relevant or no irrelevant label.
  std::size_t skipped = 0;
};

// Ties between a relevant and an irrelevant label count as misorderings.
inline RankingLoss ranking_loss(const ScoreMatrix& scores, const LabelMatrix& truth) {
  detail::check_shape(scores, truth);
  RankingLoss out;
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::vector<double> rel, irr;
    for (std::size_t j = 0; j < scores[i].size(); ++j) (truth[i][j] ? rel : irr).push_back(scores[i][j]);
    if (rel.empty() || irr.empty()) {
      ++out.skipped;
      continue;
    }
    std::size_t bad = 0;
    for (double r : rel)
      for (double s : irr) bad += r <= s;
    total += static_cast<double>(bad) / static_cast<double>(rel.size() * irr.size());
    ++counted;
  }
  out.value = counted ? total / static_cast<double>(counted) : 0.0;
  return out;
}

struct FScores {
  double f_macro = 1.0;
  double f_micro = 1.0;
};

inline FScores f_scores(const LabelMatrix& pred, const LabelMatrix& truth) {
  detail::check_shape(pred, truth);
  FScores out;
  if (pred.empty() || pred.front().empty()) return out;
  const std::size_t n = pred.front().size();
  double macro = 0.0;
  std::size_t num = 0, den = 0;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred[i][j] != 0, t = truth[i][j] != 0;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
      support += p || t;
    }
    const std::size_t d = 2 * tp + fp + fn;
    macro += d == 0 ? (support == 0 ? 1.0 : 0.0) : static_cast<double>(2 * tp) / static_cast<double>(d);
    num += 2 * tp;
    den += d;
  }
  out.f_macro = macro / static_cast<double>(n);
  out.f_micro = den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  return out;
}

struct MlMetrics {
  double hamming_loss = 0.0;
  double ranking_loss = 0.0;
  std::size_t ranking_skipped = 0;
  double f_macro = 1.0;
  double f_micro = 1.0;
};

inline MlMetrics ml_metrics(const LabelMatrix& pred, const ScoreMatrix& scores, const LabelMatrix& truth) {
  MlMetrics m;
  m.hamming_loss = hamming_loss(pred, truth);
  const RankingLoss rl = ranking_loss(scores, truth);
  m.ranking_loss = rl.value;
  m.ranking_skipped = rl.skipped;
  const FScores f = f_scores(pred, truth);
  m.f_macro = f.f_macro;
  m.f_micro = f.f_micro;
  return m;
}

// ---------------------------------------------------------------------------
// Binary-relevance naive Bayes

struct BrNaiveBayes {
  std::vector<VarId> features;
  std::vector<VarId> labels;
  std::vector<int> arities;  // per feature
  // Per label: log P(y), and per feature log P(x = c | y) at [f][y * arity + c].
  std::vector<std::array<double, 2>> log_prior;
  std::vector<std::vector<std::vector<double>>> log_cond;
};

inline BrNaiveBayes br_nb_train(const Dataset& ds, const VarSet& feature_subset, double smoothing = 1.0) {
  if (feature_subset.empty()) throw Error("br_nb_train: feature subset must be nonempty");
  BrNaiveBayes m;
  m.features = feature_subset.ids();
  for (VarId f : m.features) {
    if (ds.role(f) == Role::label) throw Error("br_nb_train: '" + ds.name(f) + "' is a label, not a feature");
    m.arities.push_back(ds.arity(f));
  }
  m.labels = ds.labels().ids();
  const double n = static_cast<double>(ds.n_rows());
  for (VarId l : m.labels) {
    if (ds.arity(l) != 2) throw Error("br_nb_train: non-binary label '" + ds.name(l) + "'");
    const auto y = ds.column(l);
    std::array<double, 2> count{0.0, 0.0};
    for (Code c : y) count[c] += 1.0;
    m.log_prior.push_back({std::log((count[0] + smoothing) / (n + 2 * smoothing)),
                           std::log((count[1] + smoothing) / (n + 2 * smoothing))});
    std::vector<std::vector<double>> per_feature;
    for (std::size_t fi = 0; fi < m.features.size(); ++fi) {
      const int a = m.arities[fi];
      const auto x = ds.column(m.features[fi]);
      std::vector<double> joint(static_cast<std::size_t>(2 * a), 0.0);
      for (std::size_t r = 0; r < x.size(); ++r) joint[static_cast<std::size_t>(y[r] * a + x[r])] += 1.0;
      for (int cls = 0; cls < 2; ++cls)
        for (int c = 0; c < a; ++c) {
          auto& cell = joint[static_cast<std::size_t>(cls * a + c)];
          cell = std::log((cell + smoothing) / (count[static_cast<std::size_t>(cls)] + smoothing * a));
        }
      per_feature.push_back(std::move(joint));
    }
    m.log_cond.push_back(std::move(per_feature));
  }
  return m;
}

struct BrPrediction {
  LabelMatrix pred;
  ScoreMatrix scores;
};

// Scores every row of ds; codes beyond the training arity get the uniform
// smoothed likelihood.
inline BrPrediction br_nb_predict(const BrNaiveBayes& m, const Dataset& ds) {
  BrPrediction out;
  out.pred.assign(ds.n_rows(), std::vector<std::uint8_t>(m.labels.size(), 0));
  out.scores.assign(ds.n_rows(), std::vector<double>(m.labels.size(), 0.0));
  std::vector<std::span<const Code>> cols;
  for (VarId f : m.features) cols.push_back(ds.column(f));
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    for (std::size_t li = 0; li < m.labels.size(); ++li) {
      double lp[2] = {m.log_prior[li][0], m.log_prior[li][1]};
      for (std::size_t fi = 0; fi < m.features.size(); ++fi) {
        const int a = m.arities[fi];
        const Code c = cols[fi][r];
        for (int cls = 0; cls < 2; ++cls)
          lp[cls] += c < a ? m.log_cond[li][fi][static_cast<std::size_t>(cls * a + c)] : -std::log(static_cast<double>(a));
      }
      const double score = 1.0 / (1.0 + std::exp(lp[0] - lp[1]));
      out.scores[r][li] = score;
      out.pred[r][li] = score >= 0.5;
    }
  }
  return out;
}

inline LabelMatrix label_matrix(const Dataset& ds) {
  LabelMatrix out(ds.n_rows(), std::vector<std::uint8_t>(ds.labels().size(), 0));
  std::size_t li = 0;
  for (VarId l : ds.labels()) {
    const auto col = ds.column(l);
    for (std::size_t r = 0; r < ds.n_rows(); ++r) out[r][li] = col[r] != 0;
    ++li;
  }
  return out;
}

// Shuffled train/test row split; train gets round(fraction * n) rows.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double fraction,
                                                                                std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("split fraction must lie strictly between 0 and 1");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed, "split");
  rng.shuffle(idx);
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) throw Error("split leaves an empty training or test set");
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Benchmark

enum class Algorithm { clcd, hiton_intersect, iamb_intersect };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::clcd: return "clcd";
    case Algorithm::hiton_intersect: return "hiton-intersect";
    default: return "iamb-intersect";
  }
}

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "clcd") return Algorithm::clcd;
  if (s == "hiton-intersect") return Algorithm::hiton_intersect;
  if (s == "iamb-intersect") return Algorithm::iamb_intersect;
  throw Error("unknown algorithm '" + s + "'");
}

// Runs one discovery algorithm over every label of the tester's data.
template <IndependenceTester Tester>
ClcdOutput discover(const Tester& t, const VarSet& labels, Algorithm algo, const ClcdOptions& opt) {
  if (algo == Algorithm::clcd) return clcd(t, labels, opt);
  const VarSet universe = VarSet::range(static_cast<VarId>(t.n_vars()));
  std::map<VarId, VarSet> mbs;
  Structures structures;
  if (algo == Algorithm::hiton_intersect) {
    PcCache<Tester> cache(t, universe, opt.mb);
    structures = phase1_structures(t, labels, cache, opt.workers);
    for (const auto& [l, ls] : structures) mbs[l] = ls.mb;
  } else {
    std::vector<VarSet> slots(labels.size());
    parallel_for(labels.size(), opt.workers, [&](std::size_t i) {
      slots[i] = iamb(t, labels[i], universe.without(labels[i]));
    });
    for (std::size_t i = 0; i < labels.size(); ++i) mbs[labels[i]] = slots[i];
  }
  ClcdOutput out = classify_by_intersection(mbs);
  if (!structures.empty()) out.structures = std::move(structures);
  return out;
}

enum class TimingMode { wall, tests };

struct BenchConfig {
  std::vector<GenConfig> configs;
  std::vector<Algorithm> algorithms{Algorithm::clcd, Algorithm::hiton_intersect, Algorithm::iamb_intersect};
  int seeds = 10;
  CiConfig ci;
  ClcdOptions clcd;
  std::size_t workers = 1;
  // tests: lg_time holds log10 of the CI-test count instead of seconds.
  TimingMode timing = TimingMode::wall;
};

struct BenchCell {
  std::size_t config = 0;
  int seed_index = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::clcd;
  DiscoveryScores scores;
  double seconds = 0.0;
  std::uint64_t tests = 0;
};

struct ReportRow {
  std::string metric;
  double p_c = 0.0;
  double p_m = 0.0;
  std::string algorithm;
  double mean = 0.0;
  double std = 0.0;
  int n_seeds = 0;
  double lg_time = 0.0;
};

struct BenchReport {
  std::vector<ReportRow> rows;
  std::vector<BenchCell> cells;
};

inline std::uint64_t bench_seed(std::uint64_t base, int index) {
  return splitmix64(base + static_cast<std::uint64_t>(index));
}

inline std::vector<BenchCell> run_cell(const GenConfig& base, std::size_t config_index, int seed_index,
                                       const BenchConfig& bc) {
  GenConfig cfg = base;
  cfg.seed = bench_seed(base.seed, seed_index);
  const Generated gen = generate(cfg);
  const Dataset ds = sample(gen.net, static_cast<std::size_t>(cfg.n_samples), substream_seed(cfg.seed, "sampler"));
  std::vector<BenchCell> out;
  for (Algorithm algo : bc.algorithms) {
    DataTester tester(ds, bc.ci);
    ClcdOptions opt = bc.clcd;
    opt.workers = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const ClcdOutput res = discover(tester, ds.labels(), algo, opt);
    const auto t1 = std::chrono::steady_clock::now();
    BenchCell cell;
    cell.config = config_index;
    cell.seed_index = seed_index;
    cell.seed = cfg.seed;
    cell.algorithm = algo;
    cell.scores = score_variables(res.ccv, res.tcv, gen.truth);
    cell.seconds = std::chrono::duration<double>(t1 - t0).count();
    cell.tests = tester.calls();
    out.push_back(cell);
  }
  return out;
}

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size() - 1))};
}

}  // namespace detail

inline const std::vector<std::string>& report_metrics() {
  static const std::vector<std::string> names{"precision",        "recall",          "common_precision",
                                              "common_recall",    "specific_precision", "specific_recall"};
  return names;
}

inline double metric_value(const DiscoveryScores& s, const std::string& metric) {
  if (metric == "precision") return s.averaged.precision;
  if (metric == "recall") return s.averaged.recall;
  if (metric == "common_precision") return s.common.precision;
  if (metric == "common_recall") return s.common.recall;
  if (metric == "specific_precision") return s.specific.precision;
  if (metric == "specific_recall") return s.specific.recall;
  throw Error("unknown metric '" + metric + "'");
}

inline BenchReport run_benchmark(const BenchConfig& bc) {
  if (bc.seeds < 1) throw Error("benchmark: seeds must be positive");
  for (const auto& c : bc.configs) c.validate();
  const std::size_t n_cells = bc.configs.size() * static_cast<std::size_t>(bc.seeds);
  std::vector<std::vector<BenchCell>> slots(n_cells);
  parallel_for(n_cells, bc.workers, [&](std::size_t i) {
    const std::size_t c = i / static_cast<std::size_t>(bc.seeds);
    const int s = static_cast<int>(i % static_cast<std::size_t>(bc.seeds));
    slots[i] = run_cell(bc.configs[c], c, s, bc);
  });
  BenchReport report;
  for (auto& s : slots) report.cells.insert(report.cells.end(), s.begin(), s.end());
  for (const std::string& metric : report_metrics()) {
    for (std::size_t c = 0; c < bc.configs.size(); ++c) {
      for (Algorithm algo : bc.algorithms) {
        std::vector<double> values;
        double time = 0.0;
        for (const auto& cell : report.cells) {
          if (cell.config != c || cell.algorithm != algo) continue;
          values.push_back(metric_value(cell.scores, metric));
          time += bc.timing == TimingMode::wall ? cell.seconds : static_cast<double>(cell.tests);
        }
        ReportRow row;
        row.metric = metric;
        row.p_c = bc.configs[c].p_c;
        row.p_m = bc.configs[c].p_m;
        row.algorithm = to_string(algo);
        std::tie(row.mean, row.std) = detail::mean_std(values);
        row.n_seeds = static_cast<int>(values.size());
        const double mean_time = values.empty() ? 0.0 : time / static_cast<double>(values.size());
        row.lg_time = std::log10(std::max(mean_time, 1e-9));
        report.rows.push_back(row);
      }
    }
  }
  return report;
}

inline constexpr const char* kReportHeader = "metric,p_c,p_m,algorithm,mean,std,n_seeds,lg_time";

namespace detail {

inline std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error("report: bad number '" + s + "'");
  }
  if (used != s.size()) throw Error("report: bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline void write_report(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << kReportHeader << '\n';
  for (const auto& r : rows)
    out << r.metric << ',' << detail::fmt6(r.p_c) << ',' << detail::fmt6(r.p_m) << ',' << r.algorithm << ','
        << detail::fmt6(r.mean) << ',' << detail::fmt6(r.std) << ',' << r.n_seeds << ',' << detail::fmt6(r.lg_time)
        << '\n';
}

inline std::vector<ReportRow> parse_report(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw Error("report: missing or unexpected header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 8) throw Error("report: expected 8 columns, got " + std::to_string(cells.size()));
    ReportRow r;
    r.metric = cells[0];
    r.p_c = detail::parse_double(cells[1]);
    r.p_m = detail::parse_double(cells[2]);
    r.algorithm = cells[3];
    r.mean = detail::parse_double(cells[4]);
    r.std = detail::parse_double(cells[5]);
    r.n_seeds = static_cast<int>(detail::parse_double(cells[6]));
    r.lg_time = detail::parse_double(cells[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace clcd
