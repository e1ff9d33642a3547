// mfgcn command-line driver: train, embed, eval.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "mfgcn/datasets.hpp"
#include "mfgcn/evaluator.hpp"

namespace fs = std::filesystem;
using namespace mfgcn;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  // dataset
  std::string dataset, content, cites, edges, attrs, labels;
  std::string data_dir = default_data_dir().string();
  std::string out;
  std::uint64_t seed = 0;
  // model
  std::vector<int> filters{25};
  int filter_dim = 16, embed_dim = 100, depth = 1;
  std::string alpha = "relu", sigma = "tanh";
  // walk
  WalkConfig walk;
  // training
  int batch_size = 512, epochs = 50, negatives = 100, patience = 0, checkpoint_every = 0;
  double lr = 5e-3, supervised_weight = 1.0, label_fraction = 1.0;
  std::string optimizer = "adam";
  bool unsupervised = false, dump_batch = false;
  // eval
  std::string task = "nc", scorer = "inner", classifier = "head", results;
  double fraction = 0.5;
  int seeds = 1, jobs = 1, probe_epochs = 200;
  bool stratified = false;
  // embed
  std::string checkpoint, nodes, output;
};

fs::path output_root() {
  if (const char* env = std::getenv("MFGCN_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

void add_options(CLI::App& app, Options& o) {
  app.option_defaults()->always_capture_default();

  const char* data = "Dataset";
  app.add_option("--dataset", o.dataset, "cora, citeseer, pubmed, wiki, or a directory")->group(data);
  app.add_option("--data-dir", o.data_dir, "Root for the built-in datasets ($MFGCN_DATA_DIR)")->group(data);
  app.add_option("--content", o.content, "Attribute/label file (id features... class)")->group(data);
  app.add_option("--cites", o.cites, "Citation pairs for --content")->group(data);
  app.add_option("--edges", o.edges, "Edge list")->group(data);
  app.add_option("--attrs", o.attrs, "Attributes for --edges")->group(data);
  app.add_option("--labels", o.labels, "Labels for --edges")->group(data);
  app.add_option("--out", o.out, "Run directory (default $MFGCN_OUTPUT_ROOT/<command>-<dataset>-<seed>)")->group(data);
  app.add_option("--seed", o.seed, "Run seed")->group(data);

  const char* model = "Model";
  app.add_option("--filters", o.filters, "Filter count L (a list for --task sweep)")
      ->delimiter(',')->group(model);
  app.add_option("--filter-dim", o.filter_dim, "Output width F of each filter")->group(model);
  app.add_option("--embed-dim", o.embed_dim, "Embedding size d")->group(model);
  app.add_option("--depth", o.depth, "Propagation layers K")->group(model);
  app.add_option("--alpha", o.alpha, "Aggregator activation")
      ->check(CLI::IsMember({"identity", "relu", "sigmoid", "tanh"}))->group(model);
  app.add_option("--sigma", o.sigma, "Encoder activation")
      ->check(CLI::IsMember({"identity", "relu", "sigmoid", "tanh"}))->group(model);

  const char* walk = "Walks";
  app.add_option("--walk-length", o.walk.walk_length, "Steps per walk")->group(walk);
  app.add_option("--p", o.walk.return_param, "Return parameter")->group(walk);
  app.add_option("--q", o.walk.inout_param, "In-out parameter")->group(walk);
  app.add_option("--window", o.walk.window, "Context window")->group(walk);
  app.add_option("--walks-per-center", o.walk.walks_per_center, "Walks rooted at each center")->group(walk);
  app.add_flag("--strict-negatives", o.walk.strict_negatives,
               "Also exclude two-hop nodes and context neighbors from negatives")->group(walk);

  const char* training = "Training";
  app.add_option("--batch-size", o.batch_size, "Centers per batch")->group(training);
  app.add_option("--epochs", o.epochs, "Passes over the nodes")->group(training);
  app.add_option("--lr", o.lr, "Learning rate")->group(training);
  app.add_option("--optimizer", o.optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))->group(training);
  app.add_option("--negatives", o.negatives, "Negative samples per center")->group(training);
  app.add_option("--patience", o.patience, "Early stopping patience in epochs (0 = off)")->group(training);
  app.add_option("--supervised-weight", o.supervised_weight, "Weight of the cross-entropy term")->group(training);
  app.add_option("--checkpoint-every", o.checkpoint_every, "Also checkpoint every N epochs (0 = off)")->group(training);
  app.add_flag("--unsupervised", o.unsupervised, "Structure loss only (train)")->group(training);
  app.add_option("--label-fraction", o.label_fraction, "Share of nodes whose labels train the head (train)")
      ->group(training);
  app.add_flag("--dump-batch", o.dump_batch, "Write the first batch to batch.txt (train)")->group(training);

  const char* eval = "Evaluation";
  app.add_option("--task", o.task, "lp, nc, raw or sweep")
      ->check(CLI::IsMember({"lp", "nc", "raw", "sweep"}))->group(eval);
  app.add_option("--fraction", o.fraction, "Removed-edge share (lp) or labelled share (nc, raw)")->group(eval);
  app.add_option("--seeds", o.seeds, "Runs with seeds seed..seed+n-1")->group(eval);
  app.add_option("--jobs", o.jobs, "Runs in parallel")->group(eval);
  app.add_option("--scorer", o.scorer, "Link scorer: inner or hadamard")
      ->check(CLI::IsMember({"inner", "hadamard"}))->group(eval);
  app.add_option("--classifier", o.classifier, "Node classifier: head or probe")
      ->check(CLI::IsMember({"head", "probe"}))->group(eval);
  app.add_flag("--stratified", o.stratified, "Sample labelled nodes per class")->group(eval);
  app.add_option("--probe-epochs", o.probe_epochs, "Epochs for linear classifiers")->group(eval);
  app.add_option("--results", o.results, "Results table to append to (default <run>/results.txt)")->group(eval);

  const char* embed = "Embedding";
  app.add_option("--checkpoint", o.checkpoint, "Checkpoint to embed with (embed)")->group(embed);
  app.add_option("--nodes", o.nodes, "Only export the node ids listed in this file (embed)")->group(embed);
  app.add_option("--output", o.output, "Embedding file (default <run>/embeddings.txt)")->group(embed);
}

DatasetSource dataset_source(const Options& o) {
  DatasetSource src;
  if (!o.dataset.empty()) src = resolve_dataset(o.dataset, o.data_dir);
  if (!o.content.empty() || !o.cites.empty()) {
    if (o.content.empty() || o.cites.empty()) throw UsageError("--content and --cites go together");
    src = DatasetSource{};
    src.name = o.dataset.empty() ? fs::path(o.content).stem().string() : o.dataset;
    src.content = o.content;
    src.cites = o.cites;
  } else if (!o.edges.empty()) {
    src = DatasetSource{};
    src.name = o.dataset.empty() ? fs::path(o.edges).parent_path().filename().string() : o.dataset;
    src.edges = o.edges;
    if (!o.attrs.empty()) src.attrs = o.attrs;
    if (!o.labels.empty()) src.labels = o.labels;
  }
  if (src.name.empty() && !src.content && !src.edges)
    throw UsageError("no dataset given (--dataset, --content/--cites or --edges)");
  if (src.name.empty()) src.name = "dataset";
  return src;
}

ModelConfig model_config(const Options& o, int filters) {
  ModelConfig cfg;
  cfg.num_filters = filters;
  cfg.filter_dim = o.filter_dim;
  cfg.embed_dim = o.embed_dim;
  cfg.depth = o.depth;
  cfg.aggregator_activation = parse_activation(o.alpha);
  cfg.encoder_activation = parse_activation(o.sigma);
  return cfg;
}

TrainConfig train_config(const Options& o) {
  TrainConfig tc;
  tc.batch_size = o.batch_size;
  tc.epochs = o.epochs;
  tc.learning_rate = o.lr;
  tc.optimizer = parse_optimizer(o.optimizer);
  tc.negatives = o.negatives;
  tc.seed = o.seed;
  tc.early_stop_patience = o.patience;
  tc.supervised_weight = o.supervised_weight;
  tc.walk = o.walk;
  tc.validate();
  return tc;
}

int single_filter_count(const Options& o) {
  if (o.filters.size() != 1) throw UsageError("--filters takes a list only with --task sweep");
  return o.filters.front();
}

struct Run {
  fs::path dir;
  std::ofstream log;
};

Run open_run(const CLI::App& app, const Options& o, const std::string& command,
             const std::string& dataset) {
  Run run;
  run.dir = o.out.empty() ? output_root() / (command + "-" + dataset + "-" + std::to_string(o.seed))
                          : fs::path(o.out);
  fs::create_directories(run.dir);
  std::ofstream cfg(run.dir / "config.txt");
  cfg << "# mfgcn " << command << '\n' << app.config_to_str(true, false);
  if (!cfg) throw DataError("cannot write " + (run.dir / "config.txt").string());
  run.log.open(run.dir / "log.txt");
  if (!run.log) throw DataError("cannot write " + (run.dir / "log.txt").string());
  return run;
}

Graph load(const DatasetSource& src, std::ostream& log) {
  LoadStats stats;
  Graph g = load_dataset(src, &stats);
  log << "# dataset " << src.name << " nodes " << g.node_count() << " edges " << g.edge_count()
      << " attributes " << g.attribute_dim() << " classes " << g.num_classes() << " dropped_edges "
      << stats.dropped_edges << " duplicate_edges " << stats.duplicate_edges << " self_edges "
      << stats.self_edges << '\n';
  return g;
}

void echo_aggregation(const ModelConfig& cfg, std::ostream& log) {
  std::ostringstream line;
  line << "aggregation: " << cfg.num_filters << " filters x " << cfg.filter_dim
       << " = " << cfg.aggregation_width() << "-d, embedding " << cfg.embed_dim << "-d";
  std::cout << line.str() << '\n';
  log << "# " << line.str() << '\n';
}

int cmd_train(const CLI::App& app, const Options& o) {
  const auto src = dataset_source(o);
  ModelConfig cfg = model_config(o, single_filter_count(o));
  TrainConfig tc = train_config(o);
  Run run = open_run(app, o, "train", src.name);
  const Graph g = load(src, run.log);
  cfg.input_dim = static_cast<int>(g.attribute_dim());
  cfg.validate();
  echo_aggregation(cfg, run.log);

  tc.supervised = !o.unsupervised && g.has_labels();
  if (tc.supervised) {
    if (o.label_fraction >= 1.0) {
      tc.label_nodes.resize(static_cast<std::size_t>(g.node_count()));
      std::iota(tc.label_nodes.begin(), tc.label_nodes.end(), 0);
    } else {
      Rng rng = make_stream(o.seed, 200);
      tc.label_nodes = sample_label_nodes(g, o.label_fraction, rng, o.stratified);
    }
    run.log << "# supervised on " << tc.label_nodes.size() << " labelled nodes\n";
  } else {
    run.log << "# unsupervised\n";
  }

  if (o.dump_batch) {
    std::vector<NodeId> centers(static_cast<std::size_t>(std::min(g.node_count(), tc.batch_size)));
    std::iota(centers.begin(), centers.end(), 0);
    Rng rng = make_stream(o.seed, 2);
    std::ofstream out(run.dir / "batch.txt");
    dump_batch(g, make_batch(g, centers, tc.walk, tc.negatives, rng), out);
  }

  auto meta = [&](int epoch) {
    Checkpoint ck;
    ck.meta["seed"] = std::to_string(o.seed);
    ck.meta["epoch"] = std::to_string(epoch);
    ck.meta["dataset"] = src.name;
    ck.meta["supervised"] = tc.supervised ? "1" : "0";
    return ck;
  };
  TrainHooks hooks;
  hooks.log = &run.log;
  ModelConfig resolved = cfg;
  if (tc.supervised) resolved.num_classes = g.num_classes();
  if (o.checkpoint_every > 0) {
    hooks.on_epoch = [&](int epoch, const ModelParams<double>& params) {
      if (epoch % o.checkpoint_every != 0) return;
      Checkpoint ck = meta(epoch);
      ck.config = resolved;
      ck.params = params;
      save_checkpoint(run.dir / ("checkpoint-epoch" + std::to_string(epoch) + ".txt"), ck);
    };
  }

  const auto result = train(g, cfg, tc, hooks);
  Checkpoint ck = meta(static_cast<int>(result.epochs.size()));
  ck.config = result.config;
  ck.params = result.params;
  save_checkpoint(run.dir / "checkpoint.txt", ck);
  if (!result.epochs.empty())
    std::cout << "epochs " << result.epochs.size() << " final loss " << result.epochs.back().total
              << (result.stopped_early ? " (stopped early)" : "") << '\n';
  std::cout << "checkpoint " << (run.dir / "checkpoint.txt").string() << '\n';
  return 0;
}

std::vector<NodeId> read_node_subset(const Graph& g, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<NodeId> nodes;
  std::string name;
  while (in >> name) {
    if (name.starts_with('#')) {
      std::getline(in, name);
      continue;
    }
    auto id = g.find(name);
    if (!id) throw DataError("unknown node '" + name + "' in " + path.string());
    nodes.push_back(*id);
  }
  return nodes;
}

int cmd_embed(const CLI::App& app, const Options& o) {
  if (o.checkpoint.empty()) throw UsageError("embed needs --checkpoint");
  const auto src = dataset_source(o);
  if (!fs::exists(o.checkpoint)) throw DataError("checkpoint not found: " + o.checkpoint);
  Run run = open_run(app, o, "embed", src.name);
  const Graph g = load(src, run.log);
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  if (ck.config.input_dim != g.attribute_dim())
    throw DataError("checkpoint expects " + std::to_string(ck.config.input_dim) +
                    " attributes, dataset has " + std::to_string(g.attribute_dim()));
  echo_aggregation(ck.config, run.log);

  std::vector<NodeId> nodes;
  if (o.nodes.empty()) {
    nodes.resize(static_cast<std::size_t>(g.node_count()));
    std::iota(nodes.begin(), nodes.end(), 0);
  } else {
    nodes = read_node_subset(g, o.nodes);
  }
  const Matrix<double> z = embed_nodes(g, nodes, ck.params, ck.config);
  const fs::path out = o.output.empty() ? run.dir / "embeddings.txt" : fs::path(o.output);
  write_embeddings(out, g, nodes, z);
  run.log << "# embedded " << nodes.size() << " nodes into " << out.string() << '\n';
  std::cout << "embeddings " << out.string() << " (" << nodes.size() << " x " << z.cols() << ")\n";
  return 0;
}

// Runs `work(i)` for i in [0, n) on up to `jobs` threads; results land in order.
template <typename T, typename F>
std::vector<T> fan_out(int n, int jobs, F work) {
  std::vector<T> out(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::mutex mu;
  int next = 0;
  auto worker = [&] {
    for (;;) {
      int i;
      {
        std::lock_guard lock(mu);
        if (next >= n) return;
        i = next++;
      }
      try {
        out[static_cast<std::size_t>(i)] = work(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

int cmd_eval(const CLI::App& app, const Options& o) {
  if (o.seeds < 1) throw UsageError("--seeds must be at least 1");
  if (o.jobs < 1) throw UsageError("--jobs must be at least 1");
  const auto src = dataset_source(o);
  const TrainConfig tc = train_config(o);
  Run run = open_run(app, o, "eval-" + o.task, src.name);
  const Graph g = load(src, run.log);

  EvalOptions opts;
  opts.scorer = o.scorer == "inner" ? EdgeScorer::inner_product : EdgeScorer::hadamard_logreg;
  opts.classifier = o.classifier == "head" ? NodeClassifier::head : NodeClassifier::probe;
  opts.stratified = o.stratified;
  opts.probe_epochs = o.probe_epochs;
  opts.dataset = src.name;

  if (o.task == "sweep") {
    ModelConfig cfg = model_config(o, o.filters.front());
    cfg.input_dim = static_cast<int>(g.attribute_dim());
    const auto per_seed = fan_out<std::vector<SweepRow>>(o.seeds, o.jobs, [&](int i) {
      return filter_sweep(g, o.filters, cfg, tc, o.seed + static_cast<std::uint64_t>(i), opts);
    });
    std::ofstream out(run.dir / "sweep.txt");
    out << "L f1 sec_per_epoch\n";
    std::cout << "L f1 sec_per_epoch\n";
    for (std::size_t r = 0; r < o.filters.size(); ++r) {
      double f1 = 0.0, sec = 0.0;
      for (const auto& rows : per_seed) {
        f1 += rows[r].f1;
        sec += rows[r].seconds_per_epoch;
      }
      f1 /= o.seeds;
      sec /= o.seeds;
      out << o.filters[r] << ' ' << f1 << ' ' << sec << '\n';
      std::cout << o.filters[r] << ' ' << f1 << ' ' << sec << '\n';
      for (int s = 0; s < o.seeds; ++s)
        run.log << "# seed " << o.seed + static_cast<std::uint64_t>(s) << " L " << o.filters[r]
                << " f1 " << per_seed[static_cast<std::size_t>(s)][r].f1 << '\n';
    }
    return 0;
  }

  const ModelConfig cfg = model_config(o, single_filter_count(o));
  if (o.task != "raw") echo_aggregation(cfg, run.log);
  const auto reports = fan_out<EvalReport>(o.seeds, o.jobs, [&](int i) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(i);
    if (o.task == "lp") return eval_link_prediction(g, cfg, tc, o.fraction, seed, opts);
    if (o.task == "nc") return eval_node_classification(g, cfg, tc, o.fraction, seed, opts);
    return eval_raw_feature(g, tc, o.fraction, seed, opts);
  });

  const fs::path table = o.results.empty() ? run.dir / "results.txt" : fs::path(o.results);
  std::ofstream report(run.dir / "report.txt");
  for (const auto& r : reports) {
    append_results_row(table, r);
    report << r.to_text() << '\n';
    run.log << "# seed " << r.seed << ' ' << r.metric << ' ' << r.value << '\n';
    std::cout << r.dataset << ' ' << r.task << " seed " << r.seed << ' ' << r.metric << ' '
              << r.value << (r.degenerate ? " (degenerate)" : "") << '\n';
  }
  const auto s = summarize(reports);
  std::cout << "mean " << s.mean << " min " << s.min << " max " << s.max << " over "
            << reports.size() << " seed(s)\n";
  run.log << "# mean " << s.mean << " min " << s.min << " max " << s.max << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MF-GCN: inductive node embeddings from multi-filter graph convolutions", "mfgcn"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value file; flags override it");
  Options o;
  add_options(app, o);
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint")->fallthrough()->footer("Options are shared by all commands; see mfgcn --help.");
  auto* embed_cmd = app.add_subcommand("embed", "Embed nodes with a trained checkpoint")->fallthrough()->footer("Options are shared by all commands; see mfgcn --help.");
  auto* eval_cmd = app.add_subcommand("eval", "Run an evaluation protocol")->fallthrough()->footer("Options are shared by all commands; see mfgcn --help.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(app, o);
    if (*embed_cmd) return cmd_embed(app, o);
    if (*eval_cmd) return cmd_eval(app, o);
  } catch (const UsageError& e) {
    std::cerr << "mfgcn: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "mfgcn: numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const DataError& e) {
    std::cerr << "mfgcn: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "mfgcn: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mfgcn: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
