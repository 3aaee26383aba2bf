#include "homoscope/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "homoscope/cpm.hpp"
#include "homoscope/csbmh.hpp"
#include "homoscope/error.hpp"
#include "homoscope/homophily.hpp"
#include "homoscope/parallel.hpp"
#include "homoscope/synthgen.hpp"

namespace homoscope {

namespace {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UndefinedMetric:
    case ErrorKind::DegenerateNode: return 3;
    case ErrorKind::Numerical: return 4;
    default: return 2;
  }
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  f << text;
  if (!f) throw Error(ErrorKind::Io, "failed writing " + path);
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

AggregationKind aggregation(const std::string& agg, bool self_loops) {
  AggregationKind k;
  k.normalization = agg == "sym" ? Normalization::Symmetric : Normalization::RandomWalk;
  k.add_self_loops = self_loops;
  return k;
}

struct Globals {
  std::optional<std::size_t> threads;
  std::uint64_t seed = 0;
  bool json = false;
  bool csv = false;
};

struct GraphInputs {
  std::string edges, labels, features;
  bool undirected = false;
  std::string agg = "rw";
  bool self_loops = false;

  void add_to(CLI::App* app, bool features_required) {
    app->add_option("--edges", edges, "Edge list, one 'u v' pair per line")->required();
    app->add_option("--labels", labels, "Node labels, one per line")->required();
    auto* f = app->add_option("--features", features, "Node features as CSV");
    if (features_required) f->required();
    app->add_flag("--undirected", undirected, "Treat each edge line as undirected");
    app->add_option("--agg", agg, "Aggregation operator")->check(CLI::IsMember({"rw", "sym"}));
    app->add_flag("--self-loops", self_loops, "Add self-loops before aggregating");
  }

  Graph load() const { return load_graph(edges, labels, LoadOptions{!undirected, false}); }
};

std::vector<fs::path> embedding_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::Validation, dir + " contains no embedding files");
  return files;
}

void write_generated(const Graph& g, const FeatureMatrix& x, const nlohmann::ordered_json& manifest, const std::string& dir) {
  fs::create_directories(dir);
  write_edges(g, fs::path(dir) / "edges.txt");
  write_labels(g, fs::path(dir) / "labels.txt");
  write_features(x, fs::path(dir) / "features.csv");
  std::ofstream m(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!m) throw Error(ErrorKind::Io, "cannot write manifest in " + dir);
  m << dump(manifest);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Homophily metrics, CSBM-H analysis and classifier-based tests for node classification graphs", "homoscope"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (default: HOMOSCOPE_THREADS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Random seed");
  auto* json_flag = app.add_flag("--json", g.json, "Write JSON output");
  app.add_flag("--csv", g.csv, "Write CSV output")->excludes(json_flag);

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Compute the homophily metrics of a labeled graph");
  GraphInputs m_in;
  std::string m_out;
  bool m_exclude_self = false;
  m_in.add_to(metrics, false);
  metrics->add_flag("--agg-exclude-self", m_exclude_self, "Leave v out of its own same-label set in h_agg");
  metrics->add_option("--out", m_out, "Output path, '-' for stdout")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep CSBM-H measures over a homophily grid");
  std::string s_config, s_measures = "pbe,dngj,nswd,nshd", s_out;
  sweep_cmd->add_option("--config", s_config, "JSON parameter file")->required();
  sweep_cmd->add_option("--measures", s_measures, "Comma-separated subset of pbe,dngj,nswd,nshd");
  sweep_cmd->add_option("--out", s_out, "Output path, '-' for stdout")->required();

  // cpm
  auto* cpm_cmd = app.add_subcommand("cpm", "Classifier-based test of aggregated against raw features");
  GraphInputs c_in;
  CpmConfig c_cfg;
  std::string c_classifier = "kr-nngp", c_out;
  c_in.add_to(cpm_cmd, true);
  cpm_cmd->add_option("--classifier", c_classifier, "kr-nngp, kr-linear or gnb")
      ->check(CLI::IsMember({"kr-nngp", "kr-linear", "gnb"}));
  cpm_cmd->add_option("--samples", c_cfg.n_sample, "Nodes sampled per round")->check(CLI::PositiveNumber);
  cpm_cmd->add_option("--repeats", c_cfg.repeats, "Number of rounds")->check(CLI::Range(2, 1 << 30));
  cpm_cmd->add_option("--train-frac", c_cfg.train_fraction, "Training share of each sample");
  cpm_cmd->add_option("--ridge", c_cfg.ridge, "Ridge relative to the mean Gram diagonal");
  cpm_cmd->add_option("--out", c_out, "Output path, '-' for stdout")->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate synthetic graphs");
  gen->require_subcommand(1);
  auto* gen_csbmh = gen->add_subcommand("csbmh", "Sample a directed CSBM-H graph");
  std::string gc_config, gc_dir;
  double gc_h = 0.5;
  std::size_t gc_n0 = 500, gc_n1 = 500;
  gen_csbmh->add_option("--config", gc_config, "JSON parameter file (same keys as sweep)")->required();
  gen_csbmh->add_option("--homophily", gc_h, "Homophily h in [0, 1]")->check(CLI::Range(0.0, 1.0));
  gen_csbmh->add_option("--n0", gc_n0, "Nodes in class 0");
  gen_csbmh->add_option("--n1", gc_n1, "Nodes in class 1");
  gen_csbmh->add_option("--out-dir", gc_dir, "Output directory")->required();

  auto* gen_h = gen->add_subcommand("homophily", "Generate an undirected graph with a target edge homophily");
  HomophilyGenSpec gh;
  std::string gh_dir, gh_from, gh_from_labels;
  gen_h->add_option("--target-h", gh.target_h_edge, "Target edge homophily")->required();
  gen_h->add_option("--classes", gh.n_classes, "Number of classes");
  gen_h->add_option("--nodes-per-class", gh.nodes_per_class, "Nodes per class");
  gen_h->add_option("--intra-edges", gh.intra_edges_per_class, "Intra-class edges per class");
  gen_h->add_option("--feature-dim", gh.features.dim, "Gaussian blob dimension");
  gen_h->add_option("--spread", gh.features.spread, "Gaussian blob standard deviation");
  auto* from = gen_h->add_option("--features-from", gh_from, "Take features from this CSV");
  gen_h->add_option("--features-labels", gh_from_labels, "Labels of the --features-from rows")->needs(from);
  from->needs("--features-labels");
  gen_h->add_option("--out-dir", gh_dir, "Output directory")->required();

  // prop
  auto* prop = app.add_subcommand("prop", "Compare the Prop statistic of two sets of embeddings");
  std::string p_a, p_b, p_labels, p_out;
  PropConfig p_cfg;
  prop->add_option("--embeddings-a", p_a, "Directory of graph-aware embedding CSV files")->required();
  prop->add_option("--embeddings-b", p_b, "Directory of graph-agnostic embedding CSV files")->required();
  prop->add_option("--labels", p_labels, "Node labels, one per line")->required();
  prop->add_option("--alpha", p_cfg.alpha, "Per-node significance level");
  prop->add_option("--pairs", p_cfg.pairs_per_node, "Sampled intra and inter distances per node");
  prop->add_option("--out", p_out, "Output path, '-' for stdout")->required();

  std::vector<std::string> argv_store{"homoscope"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (g.threads) set_thread_count(*g.threads);

    if (metrics->parsed()) {
      const Graph graph = m_in.load();
      std::optional<FeatureMatrix> x;
      if (!m_in.features.empty()) x = load_features(m_in.features, graph.num_nodes());
      AggHomophilyOptions agg{aggregation(m_in.agg, m_in.self_loops), !m_exclude_self};
      const auto report = homophily_report(graph, x ? &*x : nullptr, agg);
      write_text(m_out, g.csv ? to_csv(report) : dump(to_json(report)), out);
    } else if (sweep_cmd->parsed()) {
      std::ifstream f(s_config);
      if (!f) throw Error(ErrorKind::Io, "cannot open " + s_config);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(f);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, s_config + ": " + e.what());
      }
      std::vector<double> grid;
      const auto params = params_from_json(j, &grid);
      const auto result = sweep(params, grid, parse_measures(s_measures));
      write_text(s_out, g.json ? dump(to_json(result)) : to_csv(result), out);
    } else if (cpm_cmd->parsed()) {
      c_cfg.classifier = parse_classifier(c_classifier);
      c_cfg.seed = g.seed;
      c_cfg.aggregation = aggregation(c_in.agg, c_in.self_loops);
      const Graph graph = c_in.load();
      const FeatureMatrix x = load_features(c_in.features, graph.num_nodes());
      const auto report = cpm_pvalue(graph, x, c_cfg);
      for (const auto& w : report.warnings) err << "homoscope: warning: " << w << "\n";
      auto j = to_json(report);
      j["classifier"] = to_string(c_cfg.classifier);
      j["seed"] = g.seed;
      write_text(c_out, dump(j), out);
    } else if (gen_csbmh->parsed()) {
      std::ifstream f(gc_config);
      if (!f) throw Error(ErrorKind::Io, "cannot open " + gc_config);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(f);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, gc_config + ": " + e.what());
      }
      auto params = params_from_json(j);
      params.h = gc_h;
      const auto res = generate_csbmh_graph(params, gc_n0, gc_n1, g.seed);
      nlohmann::ordered_json man;
      man["generator"] = "csbmh";
      man["directed"] = true;
      man["seed"] = g.seed;
      man["h"] = gc_h;
      man["n0"] = gc_n0;
      man["n1"] = gc_n1;
      man["n_nodes"] = res.graph.num_nodes();
      man["n_arcs"] = res.graph.num_arcs();
      man["realized_h"] = res.realized_h;
      man["realized_h_edge"] = res.graph.num_arcs() ? h_edge(res.graph) : 0.0;
      write_generated(res.graph, res.features, man, gc_dir);
    } else if (gen_h->parsed()) {
      gh.seed = g.seed;
      if (!gh_from.empty()) {
        gh.features.kind = FeatureSource::Kind::FromFile;
        gh.features.features_path = gh_from;
        gh.features.labels_path = gh_from_labels;
      }
      const auto res = generate_homophily_graph(gh);
      nlohmann::ordered_json man;
      man["generator"] = "homophily";
      man["directed"] = false;
      man["seed"] = g.seed;
      man["target_h_edge"] = gh.target_h_edge;
      man["n_classes"] = gh.n_classes;
      man["nodes_per_class"] = gh.nodes_per_class;
      man["intra_edges"] = res.intra_edges;
      man["inter_edges"] = res.inter_edges;
      man["n_nodes"] = res.graph.num_nodes();
      man["n_edges"] = res.graph.num_edges();
      man["realized_h_edge"] = res.realized_h_edge;
      write_generated(res.graph, res.features, man, gh_dir);
    } else if (prop->parsed()) {
      p_cfg.seed = g.seed;
      const auto labels = load_labels(p_labels);
      auto run_dir = [&](const std::string& dir) {
        std::vector<double> props;
        for (const auto& file : embedding_files(dir)) props.push_back(prop_statistic(load_features(file, labels.size()), labels, p_cfg).prop);
        return props;
      };
      const auto a = run_dir(p_a), b = run_dir(p_b);
      const auto t = prop_pvalue(a, b);
      nlohmann::ordered_json j;
      j["props_a"] = a;
      j["props_b"] = b;
      j["t_stat"] = t.t_stat;
      j["dof"] = t.dof;
      j["p_value"] = t.p_value;
      j["alternative"] = "prop_a < prop_b";
      write_text(p_out, dump(j), out);
    }
  } catch (const Error& e) {
    err << "homoscope: error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "homoscope: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace homoscope
