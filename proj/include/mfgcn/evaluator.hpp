#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfgcn/trainer.hpp"

namespace mfgcn {

struct EvalReport {
  std::string task;  // link_prediction | node_classification | raw_feature
  std::string dataset;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::string metric;  // auc | micro_f1
  double value = 0.0;
  double seconds = 0.0;
  bool degenerate = false;
  std::map<std::string, std::string> config;
  std::map<std::string, double> extra;

  /// Flat "key=value" block, one pair per line.
  std::string to_text() const;
};

/// Appends "dataset task fraction seed metric value seconds" (with a header
/// line when the file is new).
void append_results_row(const std::filesystem::path& path, const EvalReport& r);

enum class EdgeScorer { inner_product, hadamard_logreg };
enum class NodeClassifier { head, probe };

struct EvalOptions {
  EdgeScorer scorer = EdgeScorer::inner_product;
  NodeClassifier classifier = NodeClassifier::head;
  bool stratified = false;
  int probe_epochs = 200;  // linear classifiers trained on fixed features
  std::string dataset = "unnamed";
};

inline double score_edge(const auto& zu, const auto& zv) { return zu.dot(zv); }

/// Mann-Whitney AUC; ties between a positive and a negative count 1/2.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Micro-averaged F1 from pooled TP/FP/FN.
double micro_f1(std::span<const int> predictions, std::span<const int> truth);

/// Multinomial logistic regression (softmax head alone) trained with the
/// configured optimizer on the given rows.
struct LinearClassifier {
  Matrix<double> weight;  // features x classes
  RowVector<double> bias;

  int predict(const auto& row) const {
    RowVector<double> logits = row * weight + bias;
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    return static_cast<int>(best);
  }
};

LinearClassifier fit_linear_classifier(const SparseRows<double>& features,
                                       std::span<const int> labels, int num_classes,
                                       const TrainConfig& tc, int epochs);
LinearClassifier fit_linear_classifier(const Matrix<double>& features, std::span<const int> labels,
                                       int num_classes, const TrainConfig& tc, int epochs);

/// Node subset for supervised training: round(fraction * N) nodes, uniform or
/// stratified by class. Returned sorted.
std::vector<NodeId> sample_label_nodes(const Graph& g, double fraction, Rng& rng,
                                       bool stratified = false);

/// Edge split, unsupervised training on the remaining graph, scoring of the
/// removed edges against sampled non-edges.
EvalReport eval_link_prediction(const Graph& g, const ModelConfig& cfg, const TrainConfig& tc,
                                double fraction, std::uint64_t seed, const EvalOptions& opts = {});

/// Joint training with `train_fraction` labelled nodes, micro-F1 on the rest.
EvalReport eval_node_classification(const Graph& g, const ModelConfig& cfg, const TrainConfig& tc,
                                    double train_fraction, std::uint64_t seed,
                                    const EvalOptions& opts = {});

/// Softmax regression on raw attributes, micro-F1 on the held-out nodes.
EvalReport eval_raw_feature(const Graph& g, const TrainConfig& tc, double train_fraction,
                            std::uint64_t seed, const EvalOptions& opts = {});

struct SweepRow {
  int filters = 0;
  double f1 = 0.0;
  double seconds_per_epoch = 0.0;
};

/// For each filter count: 30% labels, micro-F1 on the other 70%, mean epoch time.
std::vector<SweepRow> filter_sweep(const Graph& g, std::span<const int> filter_counts,
                                   const ModelConfig& cfg, const TrainConfig& tc,
                                   std::uint64_t seed, const EvalOptions& opts = {});

struct SeedSummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};
SeedSummary summarize(std::span<const EvalReport> reports);

}  // namespace mfgcn
