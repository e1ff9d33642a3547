#include "mfgcn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

namespace mfgcn {

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be non-negative");
  if (negatives < 1) throw std::invalid_argument("negatives must be positive");
  if (early_stop_patience < 0) throw std::invalid_argument("early_stop_patience must be >= 0");
  walk.validate();
}

namespace {

// Streams derived from the run seed.
enum Stream : std::uint64_t { kInit = 0, kShuffle = 1, kBatches = 2, kHoldout = 3 };

}  // namespace

BatchOutcome evaluate_batch(const Graph& g, const GraphInputs<double>& inputs, const Batch& batch,
                            const ModelParams<double>& params, const ModelConfig& cfg,
                            const TrainConfig& tc, std::span<const char> labeled,
                            bool with_gradient) {
  // Every distinct node of the batch is embedded once.
  std::vector<NodeId> nodes;
  std::vector<int> row_of(static_cast<std::size_t>(g.node_count()), -1);
  auto touch = [&](NodeId v) {
    if (row_of[v] < 0) {
      row_of[v] = static_cast<int>(nodes.size());
      nodes.push_back(v);
    }
  };
  for (std::size_t i = 0; i < batch.size(); ++i) {
    touch(batch.centers[i]);
    for (NodeId c : batch.contexts[i]) touch(c);
    for (NodeId c : batch.negatives[i]) touch(c);
  }

  const auto trace = forward(inputs, nodes, params, cfg, &g);
  const bool use_labels = tc.supervised && params.has_head() && !labeled.empty();
  Matrix<double> dz = Matrix<double>::Zero(trace.z.rows(), trace.z.cols());
  Matrix<double> dlogits;
  if (use_labels) dlogits = Matrix<double>::Zero(trace.z.rows(), params.w_cls.cols());
  std::span<const int> labels = g.has_labels() ? g.labels() : std::span<const int>{};

  std::vector<CenterLoss> parts;
  parts.reserve(batch.size());
  Matrix<double> ctx, neg;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const NodeId u = batch.centers[i];
    const int ru = row_of[u];
    CenterLoss part;
    part.center = u;
    const auto& cs = batch.contexts[i];
    if (!cs.empty()) {
      const auto& ns = batch.negatives[i];
      ctx.resize(static_cast<Eigen::Index>(cs.size()), trace.z.cols());
      neg.resize(static_cast<Eigen::Index>(ns.size()), trace.z.cols());
      for (std::size_t k = 0; k < cs.size(); ++k) ctx.row(static_cast<Eigen::Index>(k)) = trace.z.row(row_of[cs[k]]);
      for (std::size_t k = 0; k < ns.size(); ++k) neg.row(static_cast<Eigen::Index>(k)) = trace.z.row(row_of[ns[k]]);
      auto s = sgns_loss(trace.z.row(ru), ctx, neg);
      part.sgns = s.loss;
      if (with_gradient) {
        dz.row(ru) += s.grad_center;
        for (std::size_t k = 0; k < cs.size(); ++k) dz.row(row_of[cs[k]]) += s.grad_contexts.row(static_cast<Eigen::Index>(k));
        for (std::size_t k = 0; k < ns.size(); ++k) dz.row(row_of[ns[k]]) += s.grad_negatives.row(static_cast<Eigen::Index>(k));
      }
    }
    if (use_labels && labeled[u]) {
      auto probs = classify(trace.z.row(ru), params);
      auto ce = cross_entropy_loss(probs, labels[u]);
      part.supervised = ce.loss;
      part.labeled = true;
      if (with_gradient) dlogits.row(ru) += tc.supervised_weight * ce.grad_logits;
    }
    parts.push_back(part);
  }

  BatchOutcome out;
  out.loss = total_loss(parts, use_labels, tc.supervised_weight);
  if (with_gradient) {
    const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(batch.size(), 1));
    dz *= scale;
    if (use_labels) dlogits *= scale;
    out.grad = backward(trace, params, cfg, dz, dlogits);
  }
  return out;
}

TrainResult train(const Graph& g, const ModelConfig& cfg_in, const TrainConfig& tc,
                  const TrainHooks& hooks) {
  tc.validate();
  ModelConfig cfg = cfg_in;
  if (cfg.input_dim == 0) cfg.input_dim = static_cast<int>(g.attribute_dim());
  if (cfg.input_dim != g.attribute_dim())
    throw std::invalid_argument("model input_dim does not match the graph attribute dimension");
  if (tc.supervised) {
    if (!g.has_labels()) throw std::invalid_argument("supervised training needs labels");
    if (tc.label_nodes.empty()) throw std::invalid_argument("supervised training needs label_nodes");
    if (cfg.num_classes == 0) cfg.num_classes = g.num_classes();
  }
  cfg.validate();

  Rng init_rng = make_stream(tc.seed, kInit);
  TrainResult result;
  result.config = cfg;
  result.params = ModelParams<double>::glorot(cfg, init_rng);
  if (tc.epochs == 0) return result;

  const auto inputs = GraphInputs<double>::from(g);
  std::vector<char> labeled;
  if (tc.supervised) {
    labeled.assign(static_cast<std::size_t>(g.node_count()), 0);
    for (NodeId u : tc.label_nodes) {
      if (!g.contains(u)) throw std::invalid_argument("label node out of range");
      labeled[u] = 1;
    }
  }

  std::vector<NodeId> pool(static_cast<std::size_t>(g.node_count()));
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<NodeId> holdout;
  if (tc.early_stop_patience > 0) {
    Rng hr = make_stream(tc.seed, kHoldout);
    std::shuffle(pool.begin(), pool.end(), hr);
    const auto held = std::max<std::size_t>(1, pool.size() / 10);
    holdout.assign(pool.begin(), pool.begin() + static_cast<long>(held));
    pool.erase(pool.begin(), pool.begin() + static_cast<long>(held));
    std::sort(pool.begin(), pool.end());
    if (pool.empty()) throw std::invalid_argument("graph too small for a held-out split");
  }

  Optimizer<double> opt(tc.optimizer, tc.learning_rate);
  Rng shuffle_rng = make_stream(tc.seed, kShuffle);
  Rng batch_rng = make_stream(tc.seed, kBatches);
  double best_holdout = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(pool.begin(), pool.end(), shuffle_rng);
    EpochStats stats;
    stats.epoch = epoch;
    std::size_t counted = 0;
    int batch_index = 0;
    for (std::size_t lo = 0; lo < pool.size(); lo += static_cast<std::size_t>(tc.batch_size)) {
      ++batch_index;
      const std::size_t hi = std::min(pool.size(), lo + static_cast<std::size_t>(tc.batch_size));
      std::span<const NodeId> centers(pool.data() + lo, hi - lo);
      Batch batch = make_batch(g, centers, tc.walk, tc.negatives, batch_rng);
      if (batch.size() == 0) continue;
      auto outcome = evaluate_batch(g, inputs, batch, result.params, cfg, tc, labeled);
      const auto& loss = outcome.loss;
      if (!std::isfinite(loss.total))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(batch_index));
      opt.step(result.params, outcome.grad);
      stats.sgns += loss.sgns;
      stats.supervised += loss.supervised;
      stats.total += loss.total;
      counted += batch.size();
      if (hooks.log)
        *hooks.log << epoch << ' ' << batch_index << ' ' << loss.sgns << ' ' << loss.supervised
                   << ' ' << loss.total << '\n';
    }
    if (counted > 0) {
      stats.sgns /= static_cast<double>(counted);
      stats.supervised /= static_cast<double>(counted);
      stats.total /= static_cast<double>(counted);
    }
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!holdout.empty()) {
      // Same walks and negatives every epoch so the held-out loss is comparable.
      Rng fixed = make_stream(tc.seed, kHoldout + 1);
      Batch hb = make_batch(g, holdout, tc.walk, tc.negatives, fixed);
      if (hb.size() > 0) {
        auto ho = evaluate_batch(g, inputs, hb, result.params, cfg, tc, labeled, false);
        stats.holdout = ho.loss.total / static_cast<double>(hb.size());
      }
    }
    if (hooks.log)
      *hooks.log << "# epoch " << epoch << " mean sgns " << stats.sgns << " supervised "
                 << stats.supervised << " total " << stats.total << " holdout " << stats.holdout
                 << " seconds " << stats.seconds << '\n';
    result.epochs.push_back(stats);
    if (hooks.on_epoch) hooks.on_epoch(epoch, result.params);

    if (!holdout.empty() && std::isfinite(stats.holdout)) {
      if (stats.holdout < best_holdout) {
        best_holdout = stats.holdout;
        stale = 0;
      } else if (++stale >= tc.early_stop_patience) {
        result.stopped_early = true;
        break;
      }
    }
  }
  return result;
}

Matrix<double> embed_all(const Graph& g, const ModelParams<double>& params, const ModelConfig& cfg) {
  const auto inputs = GraphInputs<double>::from(g);
  Matrix<double> z(g.node_count(), cfg.embed_dim);
  constexpr NodeId kChunk = 4096;
  std::vector<NodeId> nodes;
  for (NodeId lo = 0; lo < g.node_count(); lo += kChunk) {
    const NodeId hi = std::min(g.node_count(), lo + kChunk);
    nodes.resize(static_cast<std::size_t>(hi - lo));
    std::iota(nodes.begin(), nodes.end(), lo);
    z.middleRows(lo, hi - lo) = forward(inputs, nodes, params, cfg, &g).z;
  }
  return z;
}

}  // namespace mfgcn
