#include "mfgcn/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "text.hpp"

namespace mfgcn {

namespace {

enum Stream : std::uint64_t { kSplit = 100, kLabels = 200, kScorer = 300, kProbe = 400 };

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::map<std::string, std::string> echo(const ModelConfig& cfg, const TrainConfig& tc) {
  std::map<std::string, std::string> m;
  m["num_filters"] = std::to_string(cfg.num_filters);
  m["filter_dim"] = std::to_string(cfg.filter_dim);
  m["embed_dim"] = std::to_string(cfg.embed_dim);
  m["aggregator_activation"] = to_string(cfg.aggregator_activation);
  m["encoder_activation"] = to_string(cfg.encoder_activation);
  m["batch_size"] = std::to_string(tc.batch_size);
  m["epochs"] = std::to_string(tc.epochs);
  m["learning_rate"] = detail::format_double(tc.learning_rate);
  m["optimizer"] = to_string(tc.optimizer);
  m["negatives"] = std::to_string(tc.negatives);
  m["walk_length"] = std::to_string(tc.walk.walk_length);
  m["p"] = detail::format_double(tc.walk.return_param);
  m["q"] = detail::format_double(tc.walk.inout_param);
  m["window"] = std::to_string(tc.walk.window);
  m["walks_per_center"] = std::to_string(tc.walk.walks_per_center);
  m["strict_negatives"] = tc.walk.strict_negatives ? "1" : "0";
  return m;
}

SparseRows<double> take_rows(const SparseRows<double>& m, const std::vector<Eigen::Index>& rows) {
  return gather_rows(m, rows);
}

Matrix<double> take_rows(const Matrix<double>& m, const std::vector<Eigen::Index>& rows) {
  return m(rows, Eigen::all);
}

template <typename Features>
LinearClassifier fit_linear(const Features& x, std::span<const int> labels, int num_classes,
                            const TrainConfig& tc, int epochs) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw std::invalid_argument("fit_linear_classifier: label count mismatch");
  if (num_classes < 1) throw std::invalid_argument("fit_linear_classifier: no classes");
  LinearClassifier clf;
  clf.weight = Matrix<double>::Zero(x.cols(), num_classes);
  clf.bias = RowVector<double>::Zero(num_classes);
  if (x.rows() == 0 || epochs == 0) return clf;

  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Matrix<double> mw = Matrix<double>::Zero(x.cols(), num_classes), vw = mw;
  RowVector<double> mb = RowVector<double>::Zero(num_classes), vb = mb;
  long t = 0;
  const double lr = tc.learning_rate;
  auto step = [&](auto& p, const auto& g, auto& m, auto& v) {
    if (tc.optimizer == OptimizerKind::sgd) {
      p -= lr * g;
      return;
    }
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g.cwiseProduct(g);
    const double c1 = 1 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1 - std::pow(b2, static_cast<double>(t));
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };

  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_stream(tc.seed, kProbe);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(tc.batch_size));
      std::vector<Eigen::Index> rows(order.begin() + static_cast<long>(lo),
                                     order.begin() + static_cast<long>(hi));
      const auto xb = take_rows(x, rows);
      Matrix<double> logits = xb * clf.weight;
      logits.rowwise() += clf.bias;
      Matrix<double> grad(logits.rows(), logits.cols());
      for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        grad.row(r) = softmax(logits.row(r));
        grad(r, labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])]) -= 1.0;
      }
      grad /= static_cast<double>(rows.size());
      ++t;
      Matrix<double> gw = xb.transpose() * grad;
      RowVector<double> gb = grad.colwise().sum();
      step(clf.weight, gw, mw, vw);
      step(clf.bias, gb, mb, vb);
    }
  }
  return clf;
}

std::vector<NodeId> complement(NodeId n, const std::vector<NodeId>& sorted_subset) {
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(n) - sorted_subset.size());
  std::size_t k = 0;
  for (NodeId v = 0; v < n; ++v) {
    if (k < sorted_subset.size() && sorted_subset[k] == v)
      ++k;
    else
      out.push_back(v);
  }
  return out;
}

}  // namespace

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "task=" << task << '\n'
      << "dataset=" << dataset << '\n'
      << "fraction=" << detail::format_double(fraction) << '\n'
      << "seed=" << seed << '\n'
      << "metric=" << metric << '\n'
      << "value=" << detail::format_double(value) << '\n'
      << "seconds=" << seconds << '\n'
      << "degenerate=" << (degenerate ? 1 : 0) << '\n';
  for (const auto& [k, v] : config) out << "config." << k << '=' << v << '\n';
  for (const auto& [k, v] : extra) out << "extra." << k << '=' << detail::format_double(v) << '\n';
  return out.str();
}

void append_results_row(const std::filesystem::path& path, const EvalReport& r) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot append to " + path.string());
  if (fresh) out << "dataset task fraction seed metric value seconds\n";
  out << r.dataset << ' ' << r.task << ' ' << detail::format_double(r.fraction) << ' ' << r.seed
      << ' ' << r.metric << ' ' << detail::format_double(r.value) << ' ' << r.seconds << '\n';
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  // Twice the number of (pos, neg) wins, tie pairs counting once.
  std::uint64_t twice_wins = 0, positives = 0, negatives = 0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    std::uint64_t pos = 0, neg = 0;
    while (hi < order.size() && scores[order[hi]] == scores[order[lo]]) {
      (labels[order[hi]] ? pos : neg) += 1;
      ++hi;
    }
    twice_wins += 2 * pos * negatives + pos * neg;
    positives += pos;
    negatives += neg;
    lo = hi;
  }
  if (positives == 0 || negatives == 0)
    throw std::invalid_argument("auc: needs at least one positive and one negative");
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(positives * negatives));
}

double micro_f1(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) throw std::invalid_argument("micro_f1: length mismatch");
  if (truth.empty()) throw std::invalid_argument("micro_f1: empty input");
  // Single-label: a miss is one false positive (predicted class) and one
  // false negative (true class).
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predictions[i] == truth[i]) {
      ++tp;
    } else {
      ++fp;
      ++fn;
    }
  }
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

LinearClassifier fit_linear_classifier(const SparseRows<double>& features,
                                       std::span<const int> labels, int num_classes,
                                       const TrainConfig& tc, int epochs) {
  return fit_linear(features, labels, num_classes, tc, epochs);
}

LinearClassifier fit_linear_classifier(const Matrix<double>& features, std::span<const int> labels,
                                       int num_classes, const TrainConfig& tc, int epochs) {
  return fit_linear(features, labels, num_classes, tc, epochs);
}

std::vector<NodeId> sample_label_nodes(const Graph& g, double fraction, Rng& rng, bool stratified) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("train fraction must lie in (0, 1)");
  std::vector<NodeId> chosen;
  auto pick = [&](std::vector<NodeId> pool) {
    std::shuffle(pool.begin(), pool.end(), rng);
    auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
    count = std::clamp<std::size_t>(count, 1, pool.size());
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<long>(count));
  };
  if (stratified) {
    if (!g.has_labels()) throw std::invalid_argument("stratified sampling needs labels");
    std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(g.num_classes()));
    for (NodeId v = 0; v < g.node_count(); ++v) by_class[g.labels()[v]].push_back(v);
    for (auto& members : by_class)
      if (!members.empty()) pick(members);
  } else {
    std::vector<NodeId> all(static_cast<std::size_t>(g.node_count()));
    std::iota(all.begin(), all.end(), 0);
    pick(std::move(all));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

EvalReport eval_link_prediction(const Graph& g, const ModelConfig& cfg, const TrainConfig& tc,
                                double fraction, std::uint64_t seed, const EvalOptions& opts) {
  const auto start = Clock::now();
  Rng split_rng = make_stream(seed, kSplit);
  EdgeSplit split = split_edges_connected(g, fraction, split_rng);
  split.seed = seed;
  for (auto [a, b] : split.removed_edges)
    if (split.train_graph.has_edge(a, b))
      throw std::logic_error("removed edge still present in the training graph");
  if (split.removed_edges.empty() || split.negative_edges.empty())
    throw std::invalid_argument("link prediction needs removable edges and non-edges");

  ModelConfig model = cfg;
  model.num_classes = 0;
  TrainConfig run = tc;
  run.seed = seed;
  run.supervised = false;
  run.label_nodes.clear();
  const auto trained = train(split.train_graph, model, run);
  const Matrix<double> z = embed_all(split.train_graph, trained.params, trained.config);

  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(split.removed_edges.size() + split.negative_edges.size());
  if (opts.scorer == EdgeScorer::inner_product) {
    for (auto [a, b] : split.removed_edges) {
      scores.push_back(score_edge(z.row(a), z.row(b)));
      labels.push_back(1);
    }
    for (auto [a, b] : split.negative_edges) {
      scores.push_back(score_edge(z.row(a), z.row(b)));
      labels.push_back(0);
    }
  } else {
    // Logistic regression on z_a * z_b, fit on training edges against
    // non-edges that are not test pairs.
    const auto train_edges = split.train_graph.edges();
    std::set<Edge> taken(split.negative_edges.begin(), split.negative_edges.end());
    Rng rng = make_stream(seed, kScorer);
    std::uniform_int_distribution<NodeId> pick(0, g.node_count() - 1);
    std::vector<Edge> fit_neg;
    std::size_t attempts = 0;
    while (fit_neg.size() < train_edges.size() && attempts++ < 100 * train_edges.size()) {
      NodeId a = pick(rng), b = pick(rng);
      if (a == b || g.has_edge(a, b)) continue;
      if (taken.insert(ordered(a, b)).second) fit_neg.push_back(ordered(a, b));
    }
    Matrix<double> feats(static_cast<Eigen::Index>(train_edges.size() + fit_neg.size()), z.cols());
    std::vector<int> fit_labels;
    Eigen::Index r = 0;
    for (auto [a, b] : train_edges) {
      feats.row(r++) = z.row(a).cwiseProduct(z.row(b));
      fit_labels.push_back(1);
    }
    for (auto [a, b] : fit_neg) {
      feats.row(r++) = z.row(a).cwiseProduct(z.row(b));
      fit_labels.push_back(0);
    }
    TrainConfig probe = run;
    const auto clf = fit_linear_classifier(feats, fit_labels, 2, probe, opts.probe_epochs);
    auto prob_edge = [&](NodeId a, NodeId b) {
      RowVector<double> logits = z.row(a).cwiseProduct(z.row(b)) * clf.weight + clf.bias;
      return softmax(logits)(1);
    };
    for (auto [a, b] : split.removed_edges) {
      scores.push_back(prob_edge(a, b));
      labels.push_back(1);
    }
    for (auto [a, b] : split.negative_edges) {
      scores.push_back(prob_edge(a, b));
      labels.push_back(0);
    }
  }

  EvalReport rep;
  rep.task = "link_prediction";
  rep.dataset = opts.dataset;
  rep.fraction = fraction;
  rep.seed = seed;
  rep.metric = "auc";
  rep.value = auc(scores, labels);
  rep.seconds = seconds_since(start);
  rep.config = echo(trained.config, run);
  rep.config["scorer"] = opts.scorer == EdgeScorer::inner_product ? "inner_product" : "hadamard_logreg";
  rep.extra["positives"] = static_cast<double>(split.removed_edges.size());
  rep.extra["negatives"] = static_cast<double>(split.negative_edges.size());
  rep.extra["train_edges"] = static_cast<double>(split.train_graph.edge_count());
  rep.extra["shortfall"] = static_cast<double>(split.shortfall);
  rep.extra["negative_shortfall"] = static_cast<double>(split.negative_shortfall);
  if (!trained.epochs.empty()) rep.extra["final_epoch_loss"] = trained.epochs.back().total;
  return rep;
}

EvalReport eval_node_classification(const Graph& g, const ModelConfig& cfg, const TrainConfig& tc,
                                    double train_fraction, std::uint64_t seed,
                                    const EvalOptions& opts) {
  if (!g.has_labels()) throw std::invalid_argument("node classification needs labels");
  const auto start = Clock::now();
  EvalReport rep;
  rep.task = "node_classification";
  rep.dataset = opts.dataset;
  rep.fraction = train_fraction;
  rep.seed = seed;
  rep.metric = "micro_f1";

  Rng rng = make_stream(seed, kLabels);
  const auto label_nodes = sample_label_nodes(g, train_fraction, rng, opts.stratified);
  const auto test_nodes = complement(g.node_count(), label_nodes);
  rep.extra["train_nodes"] = static_cast<double>(label_nodes.size());
  rep.extra["test_nodes"] = static_cast<double>(test_nodes.size());
  if (test_nodes.empty()) throw std::invalid_argument("no test nodes left");

  TrainConfig run = tc;
  run.seed = seed;
  run.supervised = true;
  run.label_nodes = label_nodes;
  ModelConfig model = cfg;
  model.num_classes = g.num_classes();
  rep.config = echo(model, run);
  rep.config["classifier"] = opts.classifier == NodeClassifier::head ? "head" : "probe";
  rep.config["stratified"] = opts.stratified ? "1" : "0";

  if (g.num_classes() == 1) {
    rep.degenerate = true;
    rep.value = 1.0;
    rep.seconds = seconds_since(start);
    return rep;
  }

  const auto trained = train(g, model, run);
  const Matrix<double> z = embed_all(g, trained.params, trained.config);
  std::vector<int> truth, predicted;
  truth.reserve(test_nodes.size());
  predicted.reserve(test_nodes.size());
  if (opts.classifier == NodeClassifier::head) {
    for (NodeId v : test_nodes) {
      Eigen::Index best = 0;
      classify(z.row(v), trained.params).maxCoeff(&best);
      predicted.push_back(static_cast<int>(best));
      truth.push_back(g.labels()[v]);
    }
  } else {
    std::vector<Eigen::Index> rows(label_nodes.begin(), label_nodes.end());
    std::vector<int> fit_labels;
    for (NodeId v : label_nodes) fit_labels.push_back(g.labels()[v]);
    const auto clf = fit_linear_classifier(Matrix<double>(z(rows, Eigen::all)),
                                           fit_labels, g.num_classes(), run, opts.probe_epochs);
    for (NodeId v : test_nodes) {
      predicted.push_back(clf.predict(z.row(v)));
      truth.push_back(g.labels()[v]);
    }
  }
  rep.value = micro_f1(predicted, truth);
  rep.seconds = seconds_since(start);
  double epoch_seconds = 0.0;
  for (const auto& e : trained.epochs) epoch_seconds += e.seconds;
  if (!trained.epochs.empty()) {
    rep.extra["seconds_per_epoch"] = epoch_seconds / static_cast<double>(trained.epochs.size());
    rep.extra["final_epoch_loss"] = trained.epochs.back().total;
  }
  return rep;
}

EvalReport eval_raw_feature(const Graph& g, const TrainConfig& tc, double train_fraction,
                            std::uint64_t seed, const EvalOptions& opts) {
  if (!g.has_labels()) throw std::invalid_argument("raw-feature classification needs labels");
  const auto start = Clock::now();
  EvalReport rep;
  rep.task = "raw_feature";
  rep.dataset = opts.dataset;
  rep.fraction = train_fraction;
  rep.seed = seed;
  rep.metric = "micro_f1";

  Rng rng = make_stream(seed, kLabels);
  const auto label_nodes = sample_label_nodes(g, train_fraction, rng, opts.stratified);
  const auto test_nodes = complement(g.node_count(), label_nodes);
  if (test_nodes.empty()) throw std::invalid_argument("no test nodes left");
  rep.extra["train_nodes"] = static_cast<double>(label_nodes.size());
  rep.extra["test_nodes"] = static_cast<double>(test_nodes.size());

  TrainConfig run = tc;
  run.seed = seed;
  rep.config["batch_size"] = std::to_string(run.batch_size);
  rep.config["learning_rate"] = detail::format_double(run.learning_rate);
  rep.config["optimizer"] = to_string(run.optimizer);
  rep.config["epochs"] = std::to_string(opts.probe_epochs);
  rep.config["stratified"] = opts.stratified ? "1" : "0";
  if (g.num_classes() == 1) {
    rep.degenerate = true;
    rep.value = 1.0;
    rep.seconds = seconds_since(start);
    return rep;
  }

  const auto x_train = gather_rows(g.attributes(), label_nodes);
  std::vector<int> fit_labels;
  for (NodeId v : label_nodes) fit_labels.push_back(g.labels()[v]);
  const auto clf = fit_linear_classifier(x_train, fit_labels, g.num_classes(), run, opts.probe_epochs);

  std::vector<int> truth, predicted;
  for (NodeId v : test_nodes) {
    RowVector<double> x = g.attributes().row(v);
    predicted.push_back(clf.predict(x));
    truth.push_back(g.labels()[v]);
  }
  rep.value = micro_f1(predicted, truth);
  rep.seconds = seconds_since(start);
  return rep;
}

std::vector<SweepRow> filter_sweep(const Graph& g, std::span<const int> filter_counts,
                                   const ModelConfig& cfg, const TrainConfig& tc,
                                   std::uint64_t seed, const EvalOptions& opts) {
  std::vector<SweepRow> rows;
  for (int count : filter_counts) {
    ModelConfig model = cfg;
    model.num_filters = count;
    const auto rep = eval_node_classification(g, model, tc, 0.3, seed, opts);
    SweepRow row;
    row.filters = count;
    row.f1 = rep.value;
    auto it = rep.extra.find("seconds_per_epoch");
    row.seconds_per_epoch = it == rep.extra.end() ? 0.0 : it->second;
    rows.push_back(row);
  }
  return rows;
}

SeedSummary summarize(std::span<const EvalReport> reports) {
  SeedSummary s;
  if (reports.empty()) return s;
  s.min = s.max = reports.front().value;
  for (const auto& r : reports) {
    s.mean += r.value;
    s.min = std::min(s.min, r.value);
    s.max = std::max(s.max, r.value);
  }
  s.mean /= static_cast<double>(reports.size());
  return s;
}

}  // namespace mfgcn
