#include <gtest/gtest.h>

#include "properties.hpp"
#include "scratch.hpp"

using namespace mfgcn;
using namespace mfgcn::testing;

namespace {

ModelConfig small_config(int input_dim, int classes = 0) {
  ModelConfig cfg;
  cfg.input_dim = input_dim;
  cfg.num_filters = 4;
  cfg.filter_dim = 3;
  cfg.embed_dim = 6;
  cfg.num_classes = classes;
  return cfg;
}

std::vector<NodeId> all_nodes(const Graph& g) {
  std::vector<NodeId> v(static_cast<std::size_t>(g.node_count()));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

const Activation kActivations[] = {Activation::identity, Activation::relu, Activation::sigmoid,
                                   Activation::tanh};

}  // namespace

TEST(Aggregator, MatchesDenseComputation) {
  const auto check = dense_aggregation_oracle(100, 2024);
  EXPECT_TRUE(check.ok) << check.detail;
}

TEST(Aggregator, EncodeAgreesWithBatchedForward) {
  Rng rng(1);
  const Graph g = random_graph(18, 0.2, 5, rng);
  const auto cfg = small_config(5);
  const auto params = ModelParams<double>::glorot(cfg, rng);
  const auto trace = forward(GraphInputs<double>::from(g), all_nodes(g), params, cfg);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    const RowVector<double> h = encode(g, u, g.attributes(), params, cfg);
    EXPECT_LE((h - trace.hidden.row(u)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((h.normalized() - trace.z.row(u)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Aggregator, OneFilterModelIsTheFirstBlockOfAWiderOne) {
  Rng rng(2);
  const Graph g = random_graph(16, 0.25, 4, rng);
  const auto wide = small_config(4);
  const auto params = ModelParams<double>::glorot(wide, rng);
  auto narrow = wide;
  narrow.num_filters = 1;
  auto one = ModelParams<double>::zeros(narrow);
  one.theta = params.filter(0, wide.filter_dim);
  const auto inputs = GraphInputs<double>::from(g);
  const auto a = forward(inputs, all_nodes(g), params, wide, &g);
  const auto b = forward(inputs, all_nodes(g), [&] {
    auto p = one;
    p.w_enc.setOnes();
    return p;
  }(), narrow, &g);
  EXPECT_LE((a.agg.leftCols(wide.filter_dim) - b.agg).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Aggregator, PermutationEquivariance) {
  Rng rng(3);
  const Graph g = random_graph(20, 0.2, 4, rng, 2);
  std::vector<NodeId> perm = all_nodes(g);
  std::shuffle(perm.begin(), perm.end(), rng);
  // Node u of g becomes node perm[u] of h.
  std::vector<std::string> names(perm.size());
  for (NodeId u = 0; u < g.node_count(); ++u) names[perm[u]] = g.name(u);
  std::vector<Edge> edges;
  for (auto [a, b] : g.edges()) edges.emplace_back(perm[a], perm[b]);
  Eigen::MatrixXd x_dense = Eigen::MatrixXd(g.attributes());
  Eigen::MatrixXd x_perm(x_dense.rows(), x_dense.cols());
  for (NodeId u = 0; u < g.node_count(); ++u) x_perm.row(perm[u]) = x_dense.row(u);
  const Graph h(names, edges, x_perm.sparseView());

  const auto cfg = small_config(4);
  const auto params = ModelParams<double>::glorot(cfg, rng);
  const auto zg = embed_all(g, params, cfg);
  const auto zh = embed_all(h, params, cfg);
  for (NodeId u = 0; u < g.node_count(); ++u)
    EXPECT_LE((zg.row(u) - zh.row(perm[u])).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Embedding, RowsHaveUnitNorm) {
  const auto check = unit_norm_rows(20, 4);
  EXPECT_TRUE(check.ok) << check.detail;
}

TEST(Embedding, ZeroRowIsANumericErrorNamingTheNode) {
  const Graph g({"only"}, {}, AttributeMatrix(1, 2));
  auto cfg = small_config(2);
  Rng rng(5);
  const auto params = ModelParams<double>::glorot(cfg, rng);
  try {
    embed_all(g, params, cfg);
    FAIL() << "zero embedding accepted";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("'only'"), std::string::npos) << e.what();
  }
}

TEST(Embedding, InputDimensionMismatchIsRejected) {
  Rng rng(6);
  const Graph g = random_graph(5, 0.5, 3, rng);
  const auto cfg = small_config(4);
  const auto params = ModelParams<double>::glorot(cfg, rng);
  EXPECT_THROW(embed_all(g, params, cfg), std::invalid_argument);
}

TEST(Gradient, MatchesFiniteDifferencesForEveryActivation) {
  std::uint64_t seed = 100;
  for (Activation alpha : kActivations) {
    for (Activation sigma : kActivations) {
      for (bool supervised : {false, true}) {
        const auto check = batch_gradient_check(alpha, sigma, supervised, seed++);
        EXPECT_TRUE(check.ok) << to_string(alpha) << '/' << to_string(sigma)
                              << (supervised ? " supervised " : " unsupervised ") << check.detail;
      }
    }
  }
}

TEST(Gradient, MaskedFilterGetsExactlyZero) {
  auto f = gradient_fixture(Activation::relu, Activation::tanh, false, 7);
  // Filter 1's outputs never reach the encoder.
  f.params.w_enc.middleRows(f.cfg.input_dim + f.cfg.filter_dim, f.cfg.filter_dim).setZero();
  const auto grad = evaluate_batch(f.g, f.inputs, f.batch, f.params, f.cfg, f.tc, f.labeled).grad;
  EXPECT_TRUE((grad.filter(1, f.cfg.filter_dim).array() == 0.0).all());
  EXPECT_GT(grad.filter(0, f.cfg.filter_dim).norm(), 0.0);
}

TEST(Gradient, RadialDirectionIsProjectedOut) {
  Rng rng(8);
  const Graph g = random_graph(12, 0.3, 5, rng);
  const auto cfg = small_config(5);
  const auto params = ModelParams<double>::glorot(cfg, rng);
  const auto trace = forward(GraphInputs<double>::from(g), all_nodes(g), params, cfg);
  // dz along z itself changes only the length of h, which normalization hides.
  Eigen::VectorXd scale = Eigen::VectorXd::LinSpaced(trace.z.rows(), 0.5, 3.0);
  const Matrix<double> dz = scale.asDiagonal() * trace.z;
  const auto grad = backward(trace, params, cfg, dz);
  grad.for_each_block([](const char* name, const auto& b) {
    EXPECT_LE(b.cwiseAbs().maxCoeff(), 1e-12) << name;
  });
}

TEST(Params, GlorotWithinLimitsAndZeroBiases) {
  auto cfg = small_config(7, 3);
  Rng rng(9);
  const auto p = ModelParams<double>::glorot(cfg, rng);
  EXPECT_LE(p.theta.cwiseAbs().maxCoeff(), std::sqrt(6.0 / (7 + 3)));
  EXPECT_LE(p.w_enc.cwiseAbs().maxCoeff(), std::sqrt(6.0 / (cfg.encoder_input_dim() + 6)));
  EXPECT_LE(p.w_cls.cwiseAbs().maxCoeff(), std::sqrt(6.0 / (6 + 3)));
  EXPECT_TRUE(p.b_enc.isZero(0));
  EXPECT_TRUE(p.b_cls.isZero(0));
  EXPECT_EQ(p.theta.rows(), 7);
  EXPECT_EQ(p.theta.cols(), 12);
}

TEST(Params, ConfigValidation) {
  ModelConfig cfg = small_config(3);
  EXPECT_NO_THROW(cfg.validate());
  cfg.depth = 2;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config(3);
  cfg.num_filters = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  ModelConfig defaults;
  EXPECT_EQ(defaults.aggregation_width(), 400);
  EXPECT_EQ(parse_activation("tanh"), Activation::tanh);
  EXPECT_THROW(parse_activation("gelu"), std::invalid_argument);
}

TEST(Head, SoftmaxRowsSumToOne) {
  auto cfg = small_config(3, 4);
  Rng rng(10);
  const auto p = ModelParams<double>::glorot(cfg, rng);
  RowVector<double> z = RowVector<double>::Random(6).normalized();
  const auto probs = classify(z, p);
  EXPECT_NEAR(probs.sum(), 1.0, 1e-15);
  EXPECT_TRUE((probs.array() > 0).all());
  auto headless = small_config(3);
  EXPECT_THROW(classify(z, ModelParams<double>::zeros(headless)), std::invalid_argument);
}

TEST(Checkpoint, RoundTripReproducesEmbeddings) {
  ScratchDir dir;
  Rng rng(11);
  const Graph g = random_graph(15, 0.3, 4, rng, 3);
  Checkpoint ck;
  ck.config = small_config(4, 3);
  ck.config.aggregator_activation = Activation::sigmoid;
  ck.params = ModelParams<double>::glorot(ck.config, rng);
  ck.params.b_enc.setRandom();
  ck.meta["seed"] = "11";
  save_checkpoint(dir / "ck.txt", ck);
  const auto back = load_checkpoint(dir / "ck.txt");
  EXPECT_TRUE(back.params == ck.params);
  EXPECT_EQ(back.meta, ck.meta);
  EXPECT_EQ(back.config.aggregator_activation, Activation::sigmoid);
  EXPECT_EQ(back.config.num_classes, 3);
  const auto z1 = embed_all(g, ck.params, ck.config);
  const auto z2 = embed_all(g, back.params, back.config);
  EXPECT_TRUE(z1 == z2);
}

TEST(Checkpoint, CorruptionIsAHeaderMismatch) {
  ScratchDir dir;
  Rng rng(12);
  Checkpoint ck;
  ck.config = small_config(4);
  ck.params = ModelParams<double>::glorot(ck.config, rng);
  save_checkpoint(dir / "ck.txt", ck);
  std::string text = slurp(dir / "ck.txt");
  for (const std::string& broken :
       {std::string("garbage\n") + text, text.substr(0, text.size() / 2), std::string()}) {
    dir.write("bad.txt", broken);
    try {
      load_checkpoint(dir / "bad.txt");
      FAIL() << "corrupt checkpoint accepted";
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find("checkpoint header mismatch"), std::string::npos);
    }
  }
}

TEST(Export, EmbeddingFileHasOneLinePerNode) {
  ScratchDir dir;
  Rng rng(13);
  const Graph g = random_graph(9, 0.3, 3, rng);
  const auto cfg = small_config(3);
  const auto z = embed_all(g, ModelParams<double>::glorot(cfg, rng), cfg);
  const auto nodes = all_nodes(g);
  write_embeddings(dir / "emb.txt", g, nodes, z);
  std::istringstream in(slurp(dir / "emb.txt"));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string name;
    fields >> name;
    EXPECT_EQ(name, g.name(rows));
    double v;
    int count = 0;
    double sq = 0;
    while (fields >> v) {
      ++count;
      sq += v * v;
    }
    EXPECT_EQ(count, cfg.embed_dim);
    EXPECT_NEAR(sq, 1.0, 1e-12);
    ++rows;
  }
  EXPECT_EQ(rows, 9);
}
