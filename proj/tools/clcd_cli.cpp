// clcd: command-line front end for generation, discovery, feature selection,
// scoring and benchmarking.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "clcd/all.hpp"

namespace fs = std::filesystem;
using clcd::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw clcd::Error("cannot open '" + path + "'");
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// Tracks files written by a run so a failure can remove them.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  fs::path path(const std::string& name) {
    fs::path p = dir_ / name;
    written_.push_back(p);
    return p;
  }

  void write(const std::string& name, const std::string& content) {
    fs::path p = path(name);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw clcd::Error("cannot write '" + p.string() + "'");
    out << content;
    if (!out) throw clcd::Error("write failed for '" + p.string() + "'");
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void prepare() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw clcd::Error("cannot create output directory '" + dir_.string() + "'");
  }

  void discard() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

// ---------------------------------------------------------------------------
// Options per subcommand. Each carries its full resolved configuration so a
// manifest can replay it.

struct GenOpts {
  clcd::GenConfig cfg;
  std::string out = ".";
};

struct DiscoverOpts {
  std::string data, meta, out = ".";
  double alpha = 0.05;
  int max_z = 1;
  int max_cond = 3;
  std::string algo = "clcd";
  int workers = 1;
  bool symmetry = false;
  bool phase2 = true;
};

struct SelectOpts {
  std::string data, meta, out = ".";
  double alpha = 0.05;
  int max_z = 1;
  int max_cond = 3;
  int workers = 1;
  bool symmetry = false;
};

struct EvalOpts {
  std::string found, truth, selected, data, meta, out = ".";
  double split = 0.7;
  std::uint64_t seed = 1;
};

struct BenchOpts {
  std::string sweep, out = ".";
  int seeds = 10;
  int workers = 1;
  std::string timing = "wall";
};

json to_json(const GenOpts& o) { return {{"generator", clcd::gen_config_json(o.cfg)}}; }
json to_json(const DiscoverOpts& o) {
  return {{"data", o.data},         {"meta", o.meta},     {"alpha", o.alpha},     {"max_z", o.max_z},
          {"max_cond", o.max_cond}, {"algo", o.algo},     {"workers", o.workers}, {"symmetry", o.symmetry},
          {"phase2", o.phase2}};
}
json to_json(const SelectOpts& o) {
  return {{"data", o.data},         {"meta", o.meta},       {"alpha", o.alpha}, {"max_z", o.max_z},
          {"max_cond", o.max_cond}, {"workers", o.workers}, {"symmetry", o.symmetry}};
}
json to_json(const EvalOpts& o) {
  return {{"found", o.found}, {"truth", o.truth}, {"selected", o.selected}, {"data", o.data},
          {"meta", o.meta},   {"split", o.split}, {"seed", o.seed}};
}
json to_json(const BenchOpts& o) {
  return {{"sweep", o.sweep}, {"seeds", o.seeds}, {"workers", o.workers}, {"timing", o.timing}};
}

void from_json_opts(const json& j, GenOpts& o) { o.cfg = clcd::gen_config_from_json(j.at("generator")); }
void from_json_opts(const json& j, DiscoverOpts& o) {
  o.data = j.at("data");
  o.meta = j.at("meta");
  o.alpha = j.at("alpha");
  o.max_z = j.at("max_z");
  o.max_cond = j.at("max_cond");
  o.algo = j.at("algo");
  o.workers = j.at("workers");
  o.symmetry = j.at("symmetry");
  o.phase2 = j.at("phase2");
}
void from_json_opts(const json& j, SelectOpts& o) {
  o.data = j.at("data");
  o.meta = j.at("meta");
  o.alpha = j.at("alpha");
  o.max_z = j.at("max_z");
  o.max_cond = j.at("max_cond");
  o.workers = j.at("workers");
  o.symmetry = j.at("symmetry");
}
void from_json_opts(const json& j, EvalOpts& o) {
  o.found = j.at("found");
  o.truth = j.at("truth");
  o.selected = j.at("selected");
  o.data = j.at("data");
  o.meta = j.at("meta");
  o.split = j.at("split");
  o.seed = j.at("seed");
}
void from_json_opts(const json& j, BenchOpts& o) {
  o.sweep = j.at("sweep");
  o.seeds = j.at("seeds");
  o.workers = j.at("workers");
  o.timing = j.at("timing");
}

json input_hashes(const std::vector<std::string>& paths) {
  json h = json::object();
  for (const auto& p : paths)
    if (!p.empty()) h[p] = fnv1a64_file(p);
  return h;
}

// Runs body against a fresh output set, then writes the manifest. Any failure
// removes everything written so far.
template <typename Opts, typename Body>
int run(const std::string& name, const Opts& opts, const std::vector<std::string>& inputs, std::uint64_t seed,
        Body&& body) {
  OutputSet out(opts.out);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const json hashes = input_hashes(inputs);
    out.prepare();
    body(out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest = {{"subcommand", name},
                     {"config", to_json(opts)},
                     {"seed", seed},
                     {"inputs", hashes},
                     {"version", kVersion},
                     {"wall_clock_seconds", secs}};
    out.write_json("manifest.json", manifest);
    spdlog::info("{}: done in {:.3f} s", name, secs);
    return 0;
  } catch (const std::exception& e) {
    out.discard();
    spdlog::error("{}: {}", name, e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

clcd::CiConfig ci_config(double alpha, int max_cond) {
  clcd::CiConfig ci;
  ci.alpha = alpha;
  ci.max_cond_size = max_cond;
  ci.validate();
  return ci;
}

// ---------------------------------------------------------------------------

int cmd_gen(const GenOpts& o) {
  return run("gen", o, {}, o.cfg.seed, [&](OutputSet& out) {
    const clcd::Generated gen = clcd::generate(o.cfg);
    const clcd::Dataset ds = clcd::sample(gen.net, static_cast<std::size_t>(o.cfg.n_samples),
                                          clcd::substream_seed(o.cfg.seed, "sampler"));
    spdlog::info("gen: {} variables, {} equivalence classes", gen.net.size(), gen.truth.equivalence_classes.size());
    std::ostringstream csv;
    clcd::write_csv(csv, ds);
    out.write("data.csv", csv.str());
    out.write_json("meta.json", clcd::meta_json(ds));
    out.write_json("network.json", clcd::network_json(gen.net, gen.truth));
    out.write_json("truth.json", clcd::truth_json(gen.truth, clcd::names_of(gen.net)));
  });
}

int cmd_discover(const DiscoverOpts& o) {
  return run("discover", o, {o.data, o.meta}, 0, [&](OutputSet& out) {
    const clcd::Dataset ds = clcd::load_dataset(o.data, o.meta);
    const clcd::Algorithm algo = clcd::parse_algorithm(o.algo);
    if (algo == clcd::Algorithm::clcd && ds.labels().size() < 2)
      throw clcd::Error("clcd needs at least two labels");
    clcd::DataTester tester(ds, ci_config(o.alpha, o.max_cond));
    clcd::ClcdOptions opt;
    opt.max_z = static_cast<std::size_t>(std::max(1, o.max_z));
    opt.workers = static_cast<std::size_t>(std::max(1, o.workers));
    opt.mb.symmetry_correction = o.symmetry;
    opt.phase2 = o.phase2;
    const clcd::ClcdOutput res = clcd::discover(tester, ds.labels(), algo, opt);
    for (const auto& [l, ls] : res.structures)
      spdlog::info("discover: {} |PC|={} |MB|={}", ds.name(l), ls.pc.size(), ls.mb.size());
    spdlog::debug("discover: {} CI tests", tester.calls());
    out.write_json("clcd.json", clcd::clcd_json(res, ds.labels(), clcd::names_of(ds), o.algo));
  });
}

int cmd_select(const SelectOpts& o) {
  return run("select", o, {o.data, o.meta}, 0, [&](OutputSet& out) {
    const clcd::Dataset ds = clcd::load_dataset(o.data, o.meta);
    clcd::DataTester tester(ds, ci_config(o.alpha, o.max_cond));
    clcd::ClcdOptions opt;
    opt.max_z = static_cast<std::size_t>(std::max(1, o.max_z));
    opt.workers = static_cast<std::size_t>(std::max(1, o.workers));
    opt.mb.symmetry_correction = o.symmetry;
    const clcd::FeatureSelectionResult res = clcd::clcd_fs(tester, ds.labels(), ds.features(), opt);
    for (const auto& e : res.events) spdlog::info("select: {}", e);
    const clcd::NameTable nt = clcd::names_of(ds);
    out.write_json("selection.json", clcd::selection_json(res, ds.labels(), nt));
    std::string selected;
    for (clcd::VarId f : res.selected) selected += ds.name(f) + "\n";
    out.write("selected.csv", selected);
    const clcd::SelectionGrid g = clcd::selection_grid(res, ds.labels());
    std::string grid = "label";
    for (clcd::VarId f : g.features) grid += "," + ds.name(f);
    grid += "\n";
    for (std::size_t i = 0; i < g.labels.size(); ++i) {
      grid += ds.name(g.labels[i]);
      for (int c : g.cells[i]) grid += c ? ",1" : ",0";
      grid += "\n";
    }
    out.write("grid.csv", grid);
  });
}

json scores_json(const clcd::VariableScores& s) {
  return {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}, {"precision", s.precision}, {"recall", s.recall}};
}

json metrics_json(const clcd::MlMetrics& m) {
  return {{"hamming_loss", m.hamming_loss},
          {"ranking_loss", m.ranking_loss},
          {"ranking_skipped_rows", m.ranking_skipped},
          {"f_macro", m.f_macro},
          {"f_micro", m.f_micro}};
}

std::vector<std::string> read_name_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw clcd::Error("cannot open '" + path + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw clcd::Error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw clcd::Error("'" + path + "': " + e.what());
  }
}

int cmd_eval(const EvalOpts& o) {
  return run("eval", o, {o.found, o.truth, o.selected, o.data, o.meta}, o.seed, [&](OutputSet& out) {
    const bool discovery = !o.found.empty() || !o.truth.empty();
    const bool selection = !o.selected.empty() || !o.data.empty() || !o.meta.empty();
    if (!discovery && !selection) throw clcd::Error("eval needs --found/--truth or --selected/--data/--meta");
    if (discovery && (o.found.empty() || o.truth.empty())) throw clcd::Error("--found and --truth go together");
    if (selection && (o.selected.empty() || o.data.empty() || o.meta.empty()))
      throw clcd::Error("--selected, --data and --meta go together");
    if (!(o.split > 0.0 && o.split < 1.0)) throw clcd::Error("--split must lie strictly between 0 and 1");
    json result = json::object();
    if (discovery) {
      const auto [truth, nt] = clcd::truth_from_json(read_json_file(o.truth));
      const clcd::FoundSets found = clcd::found_from_json(read_json_file(o.found), nt);
      const clcd::DiscoveryScores s = clcd::score_variables(found.common, found.specific, truth);
      result["discovery"] = {{"common", scores_json(s.common)},
                             {"specific", scores_json(s.specific)},
                             {"averaged", scores_json(s.averaged)}};
    }
    if (selection) {
      const clcd::Dataset ds = clcd::load_dataset(o.data, o.meta);
      clcd::VarSet subset;
      for (const auto& n : read_name_list(o.selected)) {
        const clcd::VarId v = ds.id(n);
        if (ds.role(v) == clcd::Role::label) throw clcd::Error("selected list contains label '" + n + "'");
        subset.insert(v);
      }
      const auto [train_rows, test_rows] = clcd::split_rows(ds.n_rows(), o.split, o.seed);
      const clcd::Dataset train = ds.select_rows(train_rows);
      const clcd::Dataset test = ds.select_rows(test_rows);
      const clcd::LabelMatrix truth = clcd::label_matrix(test);
      auto score = [&](const clcd::VarSet& feats) {
        const auto model = clcd::br_nb_train(train, feats);
        const auto pred = clcd::br_nb_predict(model, test);
        return clcd::ml_metrics(pred.pred, pred.scores, truth);
      };
      result["classification"] = {{"selected", metrics_json(score(subset))},
                                  {"all_features", metrics_json(score(ds.features()))},
                                  {"n_selected", subset.size()},
                                  {"n_train", train_rows.size()},
                                  {"n_test", test_rows.size()}};
    }
    out.write_json("scores.json", result);
  });
}

// sweep.json: {"base": {generator fields}, "points": [{overrides}...],
//              "algorithms": [...], "alpha", "max_cond", "max_z"}
clcd::BenchConfig load_sweep(const std::string& path) {
  const json j = read_json_file(path);
  clcd::BenchConfig bc;
  try {
    const clcd::GenConfig base = clcd::gen_config_from_json(j.value("base", json::object()));
    if (j.contains("points")) {
      for (const auto& p : j.at("points")) bc.configs.push_back(clcd::gen_config_from_json(p, base));
    } else {
      bc.configs.push_back(base);
    }
    if (j.contains("algorithms")) {
      bc.algorithms.clear();
      for (const auto& a : j.at("algorithms")) bc.algorithms.push_back(clcd::parse_algorithm(a.get<std::string>()));
    }
    bc.ci = ci_config(j.value("alpha", 0.05), j.value("max_cond", 3));
    bc.clcd.max_z = j.value("max_z", 1);
  } catch (const json::exception& e) {
    throw clcd::Error("sweep file: " + std::string(e.what()));
  }
  return bc;
}

int cmd_bench(const BenchOpts& o) {
  return run("bench", o, {o.sweep}, 0, [&](OutputSet& out) {
    clcd::BenchConfig bc = load_sweep(o.sweep);
    bc.seeds = o.seeds;
    bc.workers = static_cast<std::size_t>(std::max(1, o.workers));
    if (o.timing == "wall") bc.timing = clcd::TimingMode::wall;
    else if (o.timing == "tests") bc.timing = clcd::TimingMode::tests;
    else throw clcd::Error("--timing must be wall or tests");
    const clcd::BenchReport report = clcd::run_benchmark(bc);
    std::ostringstream csv;
    clcd::write_report(csv, report.rows);
    out.write("report.csv", csv.str());
    json cells = json::array();
    for (const auto& c : report.cells) {
      json cell = {{"p_c", bc.configs[c.config].p_c},
                   {"p_m", bc.configs[c.config].p_m},
                   {"seed", c.seed},
                   {"algorithm", clcd::to_string(c.algorithm)},
                   {"common", scores_json(c.scores.common)},
                   {"specific", scores_json(c.scores.specific)},
                   {"averaged", scores_json(c.scores.averaged)},
                   {"ci_tests", c.tests}};
      if (bc.timing == clcd::TimingMode::wall) cell["seconds"] = c.seconds;
      cells.push_back(cell);
    }
    out.write_json("cells.json", cells);
  });
}

template <typename Opts, typename Cmd>
int replay_as(const json& config, const std::string& out, Cmd&& cmd) {
  Opts o;
  from_json_opts(config, o);
  o.out = out;
  return cmd(o);
}

int cmd_replay(const std::string& manifest_path, const std::string& out, bool check_inputs) {
  json m;
  try {
    m = read_json_file(manifest_path);
    if (check_inputs)
      for (const auto& [path, hash] : m.at("inputs").items())
        if (fnv1a64_file(path) != hash.get<std::string>())
          throw clcd::Error("input '" + path + "' changed since the manifest was written");
    const std::string sub = m.at("subcommand");
    const json& cfg = m.at("config");
    if (sub == "gen") return replay_as<GenOpts>(cfg, out, cmd_gen);
    if (sub == "discover") return replay_as<DiscoverOpts>(cfg, out, cmd_discover);
    if (sub == "select") return replay_as<SelectOpts>(cfg, out, cmd_select);
    if (sub == "eval") return replay_as<EvalOpts>(cfg, out, cmd_eval);
    if (sub == "bench") return replay_as<BenchOpts>(cfg, out, cmd_bench);
    throw clcd::Error("unknown subcommand '" + sub + "' in manifest");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("clcd");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("CLCD_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else spdlog::set_level(spdlog::level::err);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Common and label-specific causal discovery for multi-label data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenOpts gen;
  auto* g = app.add_subcommand("gen", "Generate a ground-truthed network and sample it");
  g->add_option("--labels", gen.cfg.n_labels, "Number of labels")->check(CLI::PositiveNumber);
  g->add_option("--features", gen.cfg.n_features, "Number of features")->check(CLI::PositiveNumber);
  g->add_option("--samples", gen.cfg.n_samples, "Number of sampled rows")->check(CLI::PositiveNumber);
  g->add_option("--pc", gen.cfg.p_c, "Fraction of labels with a label parent or child")->check(CLI::Range(0.0, 1.0));
  g->add_option("--pm", gen.cfg.p_m, "Fraction of labels with multiple MBs")->check(CLI::Range(0.0, 1.0));
  g->add_option("--seed", gen.cfg.seed, "Random seed");
  g->add_option("--mb-min", gen.cfg.mb_size.lo, "Smallest MB size");
  g->add_option("--mb-max", gen.cfg.mb_size.hi, "Largest MB size");
  g->add_option("--eq-min", gen.cfg.eq_copies.lo, "Fewest equivalent copies per class");
  g->add_option("--eq-max", gen.cfg.eq_copies.hi, "Most equivalent copies per class");
  g->add_option("--share", gen.cfg.share_prob, "Chance a parent or spouse is shared")->check(CLI::Range(0.0, 1.0));
  g->add_option("--arity", gen.cfg.arity, "Arity of generated features")->check(CLI::Range(2, 65535));
  g->add_option("--out", gen.out, "Output directory");

  DiscoverOpts disc;
  auto* d = app.add_subcommand("discover", "Common and label-specific variable discovery");
  d->add_option("--data", disc.data, "CSV data file")->required();
  d->add_option("--meta", disc.meta, "Metadata JSON")->required();
  d->add_option("--alpha", disc.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  d->add_option("--max-z", disc.max_z, "Largest equivalence set size")->check(CLI::PositiveNumber);
  d->add_option("--max-cond", disc.max_cond, "Largest conditioning set size")->check(CLI::NonNegativeNumber);
  d->add_option("--algo", disc.algo, "clcd | hiton-intersect | iamb-intersect")
      ->check(CLI::IsMember({"clcd", "hiton-intersect", "iamb-intersect"}));
  d->add_option("--workers", disc.workers, "Worker threads")->check(CLI::PositiveNumber);
  d->add_flag("--symmetry", disc.symmetry, "Enforce PC symmetry");
  d->add_flag("!--no-phase2", disc.phase2, "Skip shadowed-variable retrieval");
  d->add_option("--out", disc.out, "Output directory");

  SelectOpts sel;
  auto* s = app.add_subcommand("select", "Causality-based multi-label feature selection");
  s->add_option("--data", sel.data, "CSV data file")->required();
  s->add_option("--meta", sel.meta, "Metadata JSON")->required();
  s->add_option("--alpha", sel.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  s->add_option("--max-z", sel.max_z, "Largest equivalence set size")->check(CLI::PositiveNumber);
  s->add_option("--max-cond", sel.max_cond, "Largest conditioning set size")->check(CLI::NonNegativeNumber);
  s->add_option("--workers", sel.workers, "Worker threads")->check(CLI::PositiveNumber);
  s->add_flag("--symmetry", sel.symmetry, "Enforce PC symmetry");
  s->add_option("--out", sel.out, "Output directory");

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "Score discovery output or a selected feature subset");
  e->add_option("--found", ev.found, "Discovery output (clcd.json)");
  e->add_option("--truth", ev.truth, "Ground truth (truth.json)");
  e->add_option("--selected", ev.selected, "Selected feature names, one per line");
  e->add_option("--data", ev.data, "CSV data file");
  e->add_option("--meta", ev.meta, "Metadata JSON");
  e->add_option("--split", ev.split, "Training fraction");
  e->add_option("--seed", ev.seed, "Split seed");
  e->add_option("--out", ev.out, "Output directory");

  BenchOpts bench;
  auto* b = app.add_subcommand("bench", "Run a generator sweep and aggregate discovery scores");
  b->add_option("--sweep", bench.sweep, "Sweep JSON")->required();
  b->add_option("--seeds", bench.seeds, "Seeds per configuration")->check(CLI::PositiveNumber);
  b->add_option("--workers", bench.workers, "Worker threads")->check(CLI::PositiveNumber);
  b->add_option("--timing", bench.timing, "wall (log10 seconds) | tests (log10 CI-test count)")
      ->check(CLI::IsMember({"wall", "tests"}));
  b->add_option("--out", bench.out, "Output directory");

  std::string manifest, replay_out = ".";
  bool no_check = false;
  auto* r = app.add_subcommand("replay", "Rerun a subcommand from its manifest");
  r->add_option("--manifest", manifest, "manifest.json of an earlier run")->required();
  r->add_option("--out", replay_out, "Output directory");
  r->add_flag("--no-input-check", no_check, "Skip input hash verification");

  CLI11_PARSE(app, argc, argv);

  if (g->parsed()) return cmd_gen(gen);
  if (d->parsed()) return cmd_discover(disc);
  if (s->parsed()) return cmd_select(sel);
  if (e->parsed()) return cmd_eval(ev);
  if (b->parsed()) return cmd_bench(bench);
  if (r->parsed()) return cmd_replay(manifest, replay_out, !no_check);
  return 1;
}
