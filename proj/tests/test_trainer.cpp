#include <gtest/gtest.h>

#include <sstream>

#include "mfgcn/synthetic.hpp"
#include "properties.hpp"

using namespace mfgcn;
using namespace mfgcn::testing;

namespace {

Graph planted(std::uint64_t seed = 1, int nodes = 200) {
  PlantedPartitionConfig cfg;
  cfg.nodes = nodes;
  cfg.seed = seed;
  return planted_partition(cfg);
}

ModelConfig compact_model() {
  ModelConfig cfg;
  cfg.num_filters = 4;
  cfg.filter_dim = 8;
  cfg.embed_dim = 16;
  return cfg;
}

TrainConfig quick_training(int epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = 64;
  tc.negatives = 20;
  tc.learning_rate = 0.01;
  tc.walk.walk_length = 10;
  return tc;
}

std::vector<NodeId> all_nodes(const Graph& g) {
  std::vector<NodeId> v(static_cast<std::size_t>(g.node_count()));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST(Optimizer, ZeroLearningRateLeavesParametersUntouched) {
  const Graph g = planted();
  for (auto kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
    auto tc = quick_training(0);
    const auto init = train(g, compact_model(), tc).params;
    tc.epochs = 3;
    tc.learning_rate = 0.0;
    tc.optimizer = kind;
    const auto result = train(g, compact_model(), tc);
    EXPECT_EQ(result.epochs.size(), 3u);
    EXPECT_TRUE(result.params == init) << to_string(kind);
  }
}

TEST(Optimizer, FirstAdamStepMovesBySignOfGradient) {
  ModelConfig cfg = compact_model();
  cfg.input_dim = 3;
  Rng rng(1);
  auto params = ModelParams<double>::glorot(cfg, rng);
  auto grad = ModelParams<double>::glorot(cfg, rng);
  const auto before = params;
  Optimizer<double> opt(OptimizerKind::adam, 0.1);
  opt.step(params, grad);
  const Matrix<double> expect =
      before.w_enc.array() - 0.1 * grad.w_enc.array() / (grad.w_enc.array().abs() + 1e-8);
  EXPECT_LE((params.w_enc - expect).cwiseAbs().maxCoeff(), 1e-12);

  Optimizer<double> sgd(OptimizerKind::sgd, 0.5);
  params = before;
  sgd.step(params, grad);
  EXPECT_LE((params.theta - (before.theta - 0.5 * grad.theta)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Train, ZeroEpochsReturnsTheInitialization) {
  const Graph g = planted();
  auto tc = quick_training(0);
  tc.seed = 5;
  const auto result = train(g, compact_model(), tc);
  EXPECT_TRUE(result.epochs.empty());
  ModelConfig cfg = compact_model();
  cfg.input_dim = static_cast<int>(g.attribute_dim());
  Rng rng = make_stream(5, 0);
  EXPECT_TRUE(result.params == ModelParams<double>::glorot(cfg, rng));
  EXPECT_EQ(result.config.input_dim, g.attribute_dim());
}

TEST(Train, SameSeedIsBitIdentical) {
  const Graph g = planted();
  auto tc = quick_training(3);
  tc.seed = 9;
  tc.supervised = true;
  tc.label_nodes = {0, 5, 10, 50, 100, 150};
  std::ostringstream log1, log2;
  TrainHooks h1, h2;
  h1.log = &log1;
  h2.log = &log2;
  const auto a = train(g, compact_model(), tc, h1);
  const auto b = train(g, compact_model(), tc, h2);
  EXPECT_TRUE(a.params == b.params);
  ASSERT_EQ(a.epochs.size(), b.epochs.size());
  for (std::size_t e = 0; e < a.epochs.size(); ++e) {
    EXPECT_EQ(a.epochs[e].sgns, b.epochs[e].sgns);
    EXPECT_EQ(a.epochs[e].supervised, b.epochs[e].supervised);
  }
  tc.seed = 10;
  EXPECT_FALSE(train(g, compact_model(), tc).params == a.params);
}

TEST(Train, LossDecreasesForMostSeeds) {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Graph g = planted(seed + 1);
    auto tc = quick_training(30);
    tc.seed = seed;
    tc.learning_rate = 1e-3;
    const auto result = train(g, ModelConfig{}, tc);
    improved += result.epochs.back().total < result.epochs.front().total;
  }
  EXPECT_GE(improved, 9);
}

TEST(Train, SupervisedNeedsLabelNodes) {
  const Graph g = planted();
  auto tc = quick_training(1);
  tc.supervised = true;
  EXPECT_THROW(train(g, compact_model(), tc), std::invalid_argument);
  tc.label_nodes = {1, 2};
  const auto result = train(g, compact_model(), tc);
  EXPECT_EQ(result.config.num_classes, g.num_classes());
  EXPECT_GT(result.epochs.front().supervised, 0.0);
}

TEST(Train, EarlyStoppingOnAFlatHeldOutLoss) {
  const Graph g = planted();
  auto tc = quick_training(10);
  tc.learning_rate = 0.0;
  tc.early_stop_patience = 2;
  const auto result = train(g, compact_model(), tc);
  EXPECT_TRUE(result.stopped_early);
  EXPECT_EQ(result.epochs.size(), 3u);
  EXPECT_TRUE(std::isfinite(result.epochs.front().holdout));
}

TEST(Train, LogHasOneLinePerBatchAndASummaryPerEpoch) {
  const Graph g = planted();
  auto tc = quick_training(2);
  std::ostringstream log;
  TrainHooks hooks;
  hooks.log = &log;
  int callbacks = 0;
  hooks.on_epoch = [&](int, const ModelParams<double>&) { ++callbacks; };
  train(g, compact_model(), tc, hooks);
  std::istringstream in(log.str());
  std::string line;
  int batches = 0, summaries = 0;
  while (std::getline(in, line)) (line.rfind("# epoch", 0) == 0 ? summaries : batches) += 1;
  EXPECT_EQ(summaries, 2);
  EXPECT_EQ(batches, 2 * 4);  // 200 centers in batches of 64
  EXPECT_EQ(callbacks, 2);
}

TEST(Train, RejectsBadConfigs) {
  const Graph g = planted();
  auto tc = quick_training(1);
  tc.batch_size = 0;
  EXPECT_THROW(train(g, compact_model(), tc), std::invalid_argument);
  tc = quick_training(1);
  tc.walk.return_param = 0.0;
  EXPECT_THROW(train(g, compact_model(), tc), std::invalid_argument);
}

TEST(Inductive, NewNodesLeaveDistantEmbeddingsUnchanged) {
  const Graph g = planted(3);
  auto tc = quick_training(3);
  const auto trained = train(g, compact_model(), tc);
  const Matrix<double> before = embed_all(g, trained.params, trained.config);

  // Ten new nodes, each copying an existing node's attributes and attached
  // to one existing node.
  Rng rng(4);
  std::uniform_int_distribution<NodeId> pick(0, g.node_count() - 1);
  auto names = g.node_names();
  auto edges = g.edges();
  Eigen::MatrixXd x = Eigen::MatrixXd(g.attributes());
  x.conservativeResize(x.rows() + 10, Eigen::NoChange);
  std::vector<NodeId> anchors;
  for (int k = 0; k < 10; ++k) {
    const NodeId id = g.node_count() + k;
    names.push_back("new" + std::to_string(k));
    x.row(id) = x.row(pick(rng));
    anchors.push_back(pick(rng));
    edges.emplace_back(anchors.back(), id);
  }
  auto labels = *g.label_set();
  labels.index.resize(names.size(), 0);
  const Graph bigger(names, edges, x.sparseView(), labels);
  const Matrix<double> after = embed_all(bigger, trained.params, trained.config);
  ASSERT_EQ(after.rows(), g.node_count() + 10);
  EXPECT_LE((after.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);

  // Anchors changed degree, so the anchors and their neighbors move; nothing
  // further away can.
  std::set<NodeId> touched;
  for (NodeId a : anchors) {
    touched.insert(a);
    for (NodeId v : g.neighbors(a)) touched.insert(v);
  }
  int checked = 0;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    if (touched.count(u)) continue;
    EXPECT_TRUE(after.row(u) == before.row(u)) << "node " << u;
    ++checked;
  }
  EXPECT_GT(checked, g.node_count() / 2);
}

TEST(Inductive, EmbedAllMatchesEmbedNodes) {
  const Graph g = planted(5, 90);
  ModelConfig cfg = compact_model();
  cfg.input_dim = static_cast<int>(g.attribute_dim());
  Rng rng(6);
  const auto params = ModelParams<double>::glorot(cfg, rng);
  const auto nodes = all_nodes(g);
  EXPECT_TRUE(embed_all(g, params, cfg) == embed_nodes(g, nodes, params, cfg));
}
