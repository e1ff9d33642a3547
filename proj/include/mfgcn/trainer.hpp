#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mfgcn/model.hpp"
#include "mfgcn/objectives.hpp"
#include "mfgcn/sampler.hpp"

namespace mfgcn {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer(std::string_view name);
std::string to_string(OptimizerKind k);

struct TrainConfig {
  int batch_size = 512;
  int epochs = 50;
  double learning_rate = 5e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  int negatives = 100;  // per center
  std::uint64_t seed = 0;
  bool supervised = false;
  int early_stop_patience = 0;  // 0 disables early stopping
  double supervised_weight = 1.0;
  std::vector<NodeId> label_nodes;  // supervised term restricted to these
  WalkConfig walk;

  void validate() const;
};

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) or plain SGD over every block.
template <typename Scalar>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {}

  void step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grad) {
    ++t_;
    if (kind_ == OptimizerKind::sgd) {
      params.theta -= Scalar(lr_) * grad.theta;
      params.w_enc -= Scalar(lr_) * grad.w_enc;
      params.b_enc -= Scalar(lr_) * grad.b_enc;
      if (params.has_head()) {
        params.w_cls -= Scalar(lr_) * grad.w_cls;
        params.b_cls -= Scalar(lr_) * grad.b_cls;
      }
      return;
    }
    if (t_ == 1) {
      m_ = v_ = grad;
      m_.for_each_block([](const char*, auto& b) { b.setZero(); });
      v_.for_each_block([](const char*, auto& b) { b.setZero(); });
    }
    const Scalar c1 = Scalar(1) - std::pow(Scalar(kBeta1), Scalar(t_));
    const Scalar c2 = Scalar(1) - std::pow(Scalar(kBeta2), Scalar(t_));
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
      m = Scalar(kBeta1) * m + Scalar(1 - kBeta1) * g;
      v = Scalar(kBeta2) * v + Scalar(1 - kBeta2) * g.cwiseProduct(g);
      p.array() -= Scalar(lr_) * (m.array() / c1) / ((v.array() / c2).sqrt() + Scalar(kEps));
    };
    update(params.theta, grad.theta, m_.theta, v_.theta);
    update(params.w_enc, grad.w_enc, m_.w_enc, v_.w_enc);
    update(params.b_enc, grad.b_enc, m_.b_enc, v_.b_enc);
    if (params.has_head()) {
      update(params.w_cls, grad.w_cls, m_.w_cls, v_.w_cls);
      update(params.b_cls, grad.b_cls, m_.b_cls, v_.b_cls);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  OptimizerKind kind_;
  double lr_;
  long t_ = 0;
  ModelParams<Scalar> m_, v_;
};

struct EpochStats {
  int epoch = 0;
  double sgns = 0.0;  // per-center means
  double supervised = 0.0;
  double total = 0.0;
  double holdout = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct TrainResult {
  ModelConfig config;  // input_dim and num_classes resolved from the graph
  ModelParams<double> params;
  std::vector<EpochStats> epochs;
  bool stopped_early = false;
};

struct TrainHooks {
  std::ostream* log = nullptr;  // "epoch batch sgns supervised total" per batch
  std::function<void(int epoch, const ModelParams<double>&)> on_epoch;
};

/// Loss and gradients for one batch at fixed parameters.
struct BatchOutcome {
  LossReport loss;
  ModelParams<double> grad;  // already divided by the batch size
};

BatchOutcome evaluate_batch(const Graph& g, const GraphInputs<double>& inputs, const Batch& batch,
                            const ModelParams<double>& params, const ModelConfig& cfg,
                            const TrainConfig& tc, std::span<const char> labeled,
                            bool with_gradient = true);

/// Mini-batch training loop. Centers are shuffled each epoch and split into
/// batches of batch_size; each batch draws walks and negatives, runs the
/// joint loss and takes one optimizer step.
TrainResult train(const Graph& g, const ModelConfig& cfg, const TrainConfig& tc,
                  const TrainHooks& hooks = {});

/// Unit-norm embeddings of every node of `g` (rows in node order).
Matrix<double> embed_all(const Graph& g, const ModelParams<double>& params, const ModelConfig& cfg);

}  // namespace mfgcn
