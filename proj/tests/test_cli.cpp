#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "mfgcn/synthetic.hpp"
#include "scratch.hpp"

using namespace mfgcn;
using namespace mfgcn::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string out, err;
};

Outcome run(const ScratchDir& dir, const std::string& args, const std::string& env = "") {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.path().string() + "' && " + env + " '" MFGCN_BINARY "' " +
                          args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int raw = std::system(cmd.c_str());
  Outcome o;
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

Graph small_planted(int nodes = 90) {
  PlantedPartitionConfig cfg;
  cfg.nodes = nodes;
  return planted_partition(cfg);
}

// Same graph in the citation layout: "id attrs... class" and "id id".
void write_content_cites(const Graph& g, const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream content(dir / (name + ".content")), cites(dir / (name + ".cites"));
  const Eigen::MatrixXd x = Eigen::MatrixXd(g.attributes());
  for (NodeId u = 0; u < g.node_count(); ++u) {
    content << g.name(u);
    for (Eigen::Index c = 0; c < x.cols(); ++c) content << ' ' << x(u, c);
    content << ' ' << g.class_names()[g.labels()[u]] << '\n';
  }
  for (auto [a, b] : g.edges()) cites << g.name(a) << ' ' << g.name(b) << '\n';
}

int count_lines(const std::string& text) {
  return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  return names;
}

const std::string kFast = " --epochs 2 --batch-size 32 --negatives 10 --filters 4 --filter-dim 4 --embed-dim 8";

}  // namespace

TEST(Cli, HelpListsFlagsWithDefaults) {
  ScratchDir dir;
  const auto o = run(dir, "--help");
  EXPECT_EQ(o.status, 0);
  for (const char* flag :
       {"--dataset", "--filters", "--filter-dim", "--embed-dim", "--walk-length", "--p", "--q",
        "--window", "--negatives", "--epochs", "--lr", "--optimizer", "--task", "--fraction",
        "--seeds", "--jobs", "--scorer", "--classifier", "--checkpoint", "--nodes", "--out",
        "--config", "--seed", "--unsupervised", "--dump-batch", "--strict-negatives"})
    EXPECT_NE(o.out.find(flag), std::string::npos) << flag;
  for (const char* dflt : {"--walk-length INT [20]", "--filters INT [[25]]", "--filter-dim INT [16]",
                           "--embed-dim INT [100]", "--p FLOAT [0.5]", "--q FLOAT [1]",
                           "--negatives INT [100]"})
    EXPECT_NE(o.out.find(dflt), std::string::npos) << dflt;
}

TEST(Cli, UsageErrorsExitOne) {
  ScratchDir dir;
  EXPECT_EQ(run(dir, "").status, 1);
  EXPECT_EQ(run(dir, "train --no-such-flag").status, 1);
  EXPECT_EQ(run(dir, "train").status, 1);
  EXPECT_EQ(run(dir, "eval --task bogus --dataset x").status, 1);
}

TEST(Cli, MissingDatasetNamesThePath) {
  ScratchDir dir;
  const auto o = run(dir, "train --dataset cora --data-dir nowhere");
  EXPECT_EQ(o.status, 2);
  EXPECT_NE(o.err.find("nowhere/cora/cora.content"), std::string::npos) << o.err;
  EXPECT_EQ(count_lines(o.err), 1);
}

TEST(Cli, TrainWritesCheckpointLogAndConfig) {
  ScratchDir dir;
  write_content_cites(small_planted(), dir / "data/cora", "cora");
  const auto o = run(dir, "train --dataset cora --unsupervised --filters 25 --filter-dim 16 "
                          "--embed-dim 100 --epochs 1 --negatives 10 --out run1");
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_NE(o.out.find("= 400-d"), std::string::npos) << o.out;
  EXPECT_EQ(listing(dir / "run1"), (std::set<std::string>{"checkpoint.txt", "config.txt", "log.txt"}));
  const auto config = slurp(dir / "run1/config.txt");
  EXPECT_NE(config.find("filter-dim=16"), std::string::npos) << config;
  EXPECT_NE(config.find("unsupervised=true"), std::string::npos) << config;
  EXPECT_NE(slurp(dir / "run1/log.txt").find("# unsupervised"), std::string::npos);
}

TEST(Cli, OutputRootVariableChoosesTheRunDirectory) {
  ScratchDir dir;
  write_content_cites(small_planted(), dir / "data/cora", "cora");
  const auto o = run(dir, "train --dataset cora --seed 4" + kFast, "MFGCN_OUTPUT_ROOT=elsewhere");
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_TRUE(fs::exists(dir / "elsewhere/train-cora-4/checkpoint.txt"));
}

TEST(Cli, ConfigFileIsOverriddenByFlags) {
  ScratchDir dir;
  save_edge_list(small_planted(), dir / "toy");
  dir.write("run.cfg", "# flat settings\nepochs=1\nembed-dim=6\nfilters=3\nnegatives=5\n");
  const auto o = run(dir, "train --config run.cfg --dataset toy --embed-dim 7 --out r");
  ASSERT_EQ(o.status, 0) << o.err;
  const auto config = slurp(dir / "r/config.txt");
  EXPECT_NE(config.find("embed-dim=7"), std::string::npos) << config;
  EXPECT_NE(config.find("epochs=1"), std::string::npos) << config;
  EXPECT_NE(slurp(dir / "r/checkpoint.txt").find("embed_dim 7"), std::string::npos);
}

TEST(Cli, EmbedExportsEveryNodeOrASubset) {
  ScratchDir dir;
  const Graph g = small_planted();
  save_edge_list(g, dir / "toy");
  ASSERT_EQ(run(dir, "train --dataset toy --out t" + kFast).status, 0);
  auto o = run(dir, "embed --dataset toy --checkpoint t/checkpoint.txt --out e");
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_EQ(count_lines(slurp(dir / "e/embeddings.txt")), g.node_count());

  dir.write("subset.txt", g.name(3) + "\n" + g.name(7) + "\n");
  o = run(dir, "embed --dataset toy --checkpoint t/checkpoint.txt --nodes subset.txt --out e2");
  ASSERT_EQ(o.status, 0) << o.err;
  const auto text = slurp(dir / "e2/embeddings.txt");
  EXPECT_EQ(count_lines(text), 2);
  EXPECT_EQ(text.rfind(g.name(3) + " ", 0), 0u);
}

TEST(Cli, CorruptCheckpointIsADataError) {
  ScratchDir dir;
  save_edge_list(small_planted(), dir / "toy");
  dir.write("broken.txt", "not a checkpoint\n");
  const auto o = run(dir, "embed --dataset toy --checkpoint broken.txt --out e");
  EXPECT_EQ(o.status, 2);
  EXPECT_NE(o.err.find("checkpoint header mismatch"), std::string::npos) << o.err;
}

TEST(Cli, EvalLinkPredictionOverSeeds) {
  ScratchDir dir;
  save_edge_list(small_planted(), dir / "toy");
  const auto o = run(dir, "eval --task lp --dataset toy --fraction 0.5 --seeds 3 --out lp" + kFast);
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_EQ(count_lines(slurp(dir / "lp/results.txt")), 4);
  EXPECT_NE(o.out.find("mean "), std::string::npos);
  EXPECT_EQ(listing(dir / "lp"),
            (std::set<std::string>{"config.txt", "log.txt", "report.txt", "results.txt"}));
}

TEST(Cli, EvalNodeClassificationAndRawFeature) {
  ScratchDir dir;
  save_edge_list(small_planted(), dir / "toy");
  auto o = run(dir, "eval --task nc --dataset toy --fraction 0.3 --out nc" + kFast);
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_NE(slurp(dir / "nc/results.txt").find("node_classification 0.3 0 micro_f1"), std::string::npos);
  o = run(dir, "eval --task raw --dataset toy --fraction 0.3 --probe-epochs 5 --out raw");
  ASSERT_EQ(o.status, 0) << o.err;
  EXPECT_NE(slurp(dir / "raw/results.txt").find("raw_feature"), std::string::npos);
}

TEST(Cli, SweepWritesOneRowPerFilterCount) {
  ScratchDir dir;
  save_edge_list(small_planted(), dir / "toy");
  const auto o = run(dir, "eval --task sweep --dataset toy --epochs 1 --negatives 5 --filter-dim 2 "
                          "--embed-dim 4 --filters 1,2,3 --out sw");
  ASSERT_EQ(o.status, 0) << o.err;
  const auto table = slurp(dir / "sw/sweep.txt");
  EXPECT_EQ(table.rfind("L f1 sec_per_epoch\n", 0), 0u);
  EXPECT_EQ(count_lines(table), 4);
}

TEST(Cli, ListOfFiltersOutsideASweepIsAUsageError) {
  ScratchDir dir;
  save_edge_list(small_planted(), dir / "toy");
  EXPECT_EQ(run(dir, "train --dataset toy --filters 1,2").status, 1);
}

TEST(Cli, RerunWithSameSeedReproducesMetrics) {
  ScratchDir dir;
  save_edge_list(small_planted(), dir / "toy");
  const std::string args = "eval --task nc --dataset toy --seed 5 --seeds 2" + kFast;
  ASSERT_EQ(run(dir, args + " --out a").status, 0);
  ASSERT_EQ(run(dir, args + " --jobs 2 --out b").status, 0);
  auto values = [](const std::string& table) {
    std::istringstream in(table);
    std::string line, d, t, f, s, m, v;
    std::vector<std::string> out;
    std::getline(in, line);
    while (in >> d >> t >> f >> s >> m >> v >> line) out.push_back(s + ":" + v);
    return out;
  };
  const auto a = values(slurp(dir / "a/results.txt"));
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(a, values(slurp(dir / "b/results.txt")));
}

TEST(Cli, VanishingEmbeddingIsANumericFailure) {
  ScratchDir dir;
  // No attribute file: every node gets an all-zero attribute row.
  dir.write("edges.txt", "a b\nb c\nc a\nc d\n");
  const auto o = run(dir, "train --edges edges.txt --out z" + kFast);
  EXPECT_EQ(o.status, 3) << o.err;
  EXPECT_NE(o.err.find("zero or non-finite norm"), std::string::npos) << o.err;
}

TEST(Cli, DumpBatchWritesTheFirstBatch) {
  ScratchDir dir;
  save_edge_list(small_planted(), dir / "toy");
  ASSERT_EQ(run(dir, "train --dataset toy --dump-batch --epochs 0 --batch-size 5 --negatives 3 --out d").status, 0);
  EXPECT_GE(count_lines(slurp(dir / "d/batch.txt")), 1);
}
