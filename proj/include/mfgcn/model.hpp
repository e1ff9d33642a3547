#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfgcn/graph.hpp"
#include "mfgcn/linalg.hpp"

namespace mfgcn {

struct ModelConfig {
  int num_filters = 25;  // L
  int filter_dim = 16;   // F
  int embed_dim = 100;   // d
  int input_dim = 0;     // C, taken from the dataset
  int depth = 1;         // K; only 1 is supported
  Activation aggregator_activation = Activation::relu;
  Activation encoder_activation = Activation::tanh;
  int num_classes = 0;  // M; 0 means no softmax head

  int aggregation_width() const { return num_filters * filter_dim; }
  int encoder_input_dim() const { return input_dim + aggregation_width(); }
  void validate() const;
};

/// Learnable parameters.
///
/// All L filter matrices live side by side in `theta` (C x L*F); filter l is
/// the column block [l*F, (l+1)*F). Node features are row vectors, so the
/// encoder computes [x_u | agg_u] * w_enc + b_enc.
template <typename Scalar>
struct ModelParams {
  Matrix<Scalar> theta;
  Matrix<Scalar> w_enc;  // (C + L*F) x d
  RowVector<Scalar> b_enc;
  Matrix<Scalar> w_cls;  // d x M, empty without a head
  RowVector<Scalar> b_cls;

  bool has_head() const { return w_cls.size() > 0; }

  auto filter(int l, int filter_dim) { return theta.middleCols(l * filter_dim, filter_dim); }
  auto filter(int l, int filter_dim) const { return theta.middleCols(l * filter_dim, filter_dim); }

  static ModelParams zeros(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.theta = Matrix<Scalar>::Zero(cfg.input_dim, cfg.aggregation_width());
    p.w_enc = Matrix<Scalar>::Zero(cfg.encoder_input_dim(), cfg.embed_dim);
    p.b_enc = RowVector<Scalar>::Zero(cfg.embed_dim);
    if (cfg.num_classes > 0) {
      p.w_cls = Matrix<Scalar>::Zero(cfg.embed_dim, cfg.num_classes);
      p.b_cls = RowVector<Scalar>::Zero(cfg.num_classes);
    }
    return p;
  }

  /// Glorot-uniform weights (per filter for theta), zero biases.
  static ModelParams glorot(const ModelConfig& cfg, Rng& rng) {
    ModelParams p = zeros(cfg);
    auto fill = [&rng](auto&& block, double fan_in, double fan_out) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (Eigen::Index j = 0; j < block.cols(); ++j)
        for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = Scalar(u(rng));
    };
    for (int l = 0; l < cfg.num_filters; ++l)
      fill(p.filter(l, cfg.filter_dim), cfg.input_dim, cfg.filter_dim);
    fill(p.w_enc, cfg.encoder_input_dim(), cfg.embed_dim);
    if (p.has_head()) fill(p.w_cls, cfg.embed_dim, cfg.num_classes);
    return p;
  }

  /// Calls f(name, block) for every parameter block in checkpoint order.
  template <typename F>
  void for_each_block(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each_block(F&& f) const {
    visit(*this, f);
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    auto same = [](const auto& x, const auto& y) {
      return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    return same(a.theta, b.theta) && same(a.w_enc, b.w_enc) && same(a.b_enc, b.b_enc) &&
           same(a.w_cls, b.w_cls) && same(a.b_cls, b.b_cls);
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f("theta", self.theta);
    f("w_enc", self.w_enc);
    f("b_enc", self.b_enc);
    if (self.has_head()) {
      f("w_cls", self.w_cls);
      f("b_cls", self.b_cls);
    }
  }
};

// ---------------------------------------------------------------------------
// Per-node forward, written directly against the neighborhood sums.

/// alpha( sum_{j in N(u) + u} c_uj * inputs[j] * theta_l ).
template <typename InputMatrix, typename ThetaDerived>
RowVector<typename ThetaDerived::Scalar> filter_aggregate(const Graph& g, NodeId u,
                                                          const InputMatrix& inputs,
                                                          const Eigen::MatrixBase<ThetaDerived>& theta_l,
                                                          Activation alpha) {
  using Scalar = typename ThetaDerived::Scalar;
  if (!g.contains(u)) throw std::invalid_argument("filter_aggregate: node out of range");
  if (inputs.cols() != theta_l.rows() || inputs.rows() != g.node_count())
    throw std::invalid_argument("filter_aggregate: dimension mismatch");
  RowVector<Scalar> acc = RowVector<Scalar>::Zero(inputs.cols());
  acc += Scalar(norm_coefficient(g, u, u)) * inputs.row(u).template cast<Scalar>();
  for (NodeId j : g.neighbors(u))
    acc += Scalar(norm_coefficient(g, u, j)) * inputs.row(j).template cast<Scalar>();
  RowVector<Scalar> pre = acc * theta_l;
  return activated(alpha, pre);
}

/// CONCAT over l = 0..L-1 of filter_aggregate.
template <typename InputMatrix, typename Scalar>
RowVector<Scalar> mf_aggregate(const Graph& g, NodeId u, const InputMatrix& inputs,
                               const ModelParams<Scalar>& params, const ModelConfig& cfg) {
  RowVector<Scalar> out(cfg.aggregation_width());
  for (int l = 0; l < cfg.num_filters; ++l)
    out.segment(l * cfg.filter_dim, cfg.filter_dim) = filter_aggregate(
        g, u, inputs, params.filter(l, cfg.filter_dim), cfg.aggregator_activation);
  return out;
}

/// sigma( [x_u | mf_aggregate(u)] * w_enc + b_enc ), before normalization.
template <typename InputMatrix, typename Scalar>
RowVector<Scalar> encode(const Graph& g, NodeId u, const InputMatrix& inputs,
                         const ModelParams<Scalar>& params, const ModelConfig& cfg) {
  cfg.validate();
  RowVector<Scalar> joined(cfg.encoder_input_dim());
  joined.head(cfg.input_dim) = inputs.row(u).template cast<Scalar>();
  joined.tail(cfg.aggregation_width()) = mf_aggregate(g, u, inputs, params, cfg);
  RowVector<Scalar> pre = joined * params.w_enc + params.b_enc;
  return activated(cfg.encoder_activation, pre);
}

/// softmax(z * w_cls + b_cls).
template <typename Derived, typename Scalar>
RowVector<Scalar> classify(const Eigen::MatrixBase<Derived>& z, const ModelParams<Scalar>& params) {
  if (!params.has_head()) throw std::invalid_argument("classify: model has no classification head");
  RowVector<Scalar> logits = z * params.w_cls + params.b_cls;
  return softmax(logits);
}

// ---------------------------------------------------------------------------
// Batched forward/backward over a set of nodes.

/// Per-graph inputs for a depth-1 model: the attribute rows X and the
/// propagated rows D^{-1/2}(A+I)D^{-1/2} X. Aggregation is linear before the
/// filter, so every filter reads the same propagated rows.
template <typename Scalar>
struct GraphInputs {
  SparseRows<Scalar> self;
  SparseRows<Scalar> propagated;

  static GraphInputs from(const Graph& g) {
    GraphInputs in;
    in.self = g.attributes().cast<Scalar>();
    in.self.makeCompressed();
    SparseRows<Scalar> a = g.normalized_adjacency().cast<Scalar>();
    in.propagated = (a * in.self).pruned();
    in.propagated.makeCompressed();
    return in;
  }
};

template <typename Scalar>
struct ForwardTrace {
  std::vector<NodeId> nodes;
  SparseRows<Scalar> self;        // |U| x C
  SparseRows<Scalar> propagated;  // |U| x C
  Matrix<Scalar> agg_pre;         // |U| x L*F
  Matrix<Scalar> agg;
  Matrix<Scalar> enc_pre;  // |U| x d
  Matrix<Scalar> hidden;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> norms;
  Matrix<Scalar> z;  // unit rows
};

template <typename Scalar>
ForwardTrace<Scalar> forward(const GraphInputs<Scalar>& in, std::span<const NodeId> nodes,
                             const ModelParams<Scalar>& params, const ModelConfig& cfg,
                             const Graph* names_from = nullptr) {
  cfg.validate();
  if (in.self.cols() != cfg.input_dim)
    throw std::invalid_argument("forward: attribute dimension " + std::to_string(in.self.cols()) +
                                " does not match model input_dim " +
                                std::to_string(cfg.input_dim));
  ForwardTrace<Scalar> t;
  t.nodes.assign(nodes.begin(), nodes.end());
  for (NodeId u : t.nodes)
    if (u < 0 || u >= in.self.rows()) throw std::invalid_argument("forward: node out of range");
  t.self = gather_rows(in.self, t.nodes);
  t.propagated = gather_rows(in.propagated, t.nodes);

  const int c = cfg.input_dim;
  t.agg_pre = t.propagated * params.theta;
  t.agg = activated(cfg.aggregator_activation, t.agg_pre);
  t.enc_pre = t.self * params.w_enc.topRows(c);
  t.enc_pre.noalias() += t.agg * params.w_enc.bottomRows(cfg.aggregation_width());
  t.enc_pre.rowwise() += params.b_enc;
  t.hidden = activated(cfg.encoder_activation, t.enc_pre);
  t.norms = t.hidden.rowwise().norm();
  for (Eigen::Index r = 0; r < t.norms.size(); ++r)
    if (!(t.norms(r) > Scalar(0)) || !std::isfinite(static_cast<double>(t.norms(r)))) {
      const NodeId u = t.nodes[static_cast<std::size_t>(r)];
      const std::string who = names_from ? "'" + names_from->name(u) + "'" : std::to_string(u);
      throw NumericError("embedding of node " + who + " has zero or non-finite norm");
    }
  t.z = t.norms.asDiagonal().inverse() * t.hidden;
  return t;
}

/// Unit-norm embeddings (|nodes| x d) of the listed nodes.
template <typename Scalar>
Matrix<Scalar> embed_nodes(const Graph& g, std::span<const NodeId> nodes,
                           const ModelParams<Scalar>& params, const ModelConfig& cfg) {
  return forward(GraphInputs<Scalar>::from(g), nodes, params, cfg, &g).z;
}

/// Gradients of a scalar loss given dL/dz (|U| x d) and, when the head is
/// present, dL/dlogits (|U| x M, zero rows for nodes without a supervised
/// term). The result has the shape of `params`.
template <typename Scalar>
ModelParams<Scalar> backward(const ForwardTrace<Scalar>& t, const ModelParams<Scalar>& params,
                             const ModelConfig& cfg, const Matrix<Scalar>& dz,
                             const Matrix<Scalar>& dlogits = {}) {
  const auto rows = static_cast<Eigen::Index>(t.nodes.size());
  if (dz.rows() != rows || dz.cols() != cfg.embed_dim)
    throw std::invalid_argument("backward: dz shape mismatch");
  ModelParams<Scalar> grad = ModelParams<Scalar>::zeros(cfg);
  if (!params.has_head()) {
    grad.w_cls.resize(0, 0);
    grad.b_cls.resize(0);
  }

  Matrix<Scalar> dz_total = dz;
  if (dlogits.size() > 0) {
    if (!params.has_head()) throw std::invalid_argument("backward: dlogits without a head");
    if (dlogits.rows() != rows || dlogits.cols() != params.w_cls.cols())
      throw std::invalid_argument("backward: dlogits shape mismatch");
    grad.w_cls.noalias() = t.z.transpose() * dlogits;
    grad.b_cls = dlogits.colwise().sum();
    dz_total.noalias() += dlogits * params.w_cls.transpose();
  }

  // z = h / |h|  =>  dh = (dz - z (z . dz)) / |h|
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> radial = (t.z.cwiseProduct(dz_total)).rowwise().sum();
  Matrix<Scalar> dh = dz_total - radial.asDiagonal() * t.z;
  dh = t.norms.asDiagonal().inverse() * dh;

  Matrix<Scalar> denc =
      dh.cwiseProduct(activation_grad(cfg.encoder_activation, t.enc_pre).eval());
  const int c = cfg.input_dim;
  grad.w_enc.topRows(c) = t.self.transpose() * denc;
  grad.w_enc.bottomRows(cfg.aggregation_width()).noalias() = t.agg.transpose() * denc;
  grad.b_enc = denc.colwise().sum();

  Matrix<Scalar> dagg = denc * params.w_enc.bottomRows(cfg.aggregation_width()).transpose();
  dagg = dagg.cwiseProduct(activation_grad(cfg.aggregator_activation, t.agg_pre).eval());
  grad.theta = t.propagated.transpose() * dagg;

  grad.for_each_block([](const char* name, const auto& block) {
    if (!block.allFinite())
      throw NumericError(std::string("non-finite gradient in parameter block ") + name);
  });
  return grad;
}

// ---------------------------------------------------------------------------
// Persistence

struct Checkpoint {
  ModelConfig config;
  ModelParams<double> params;
  std::map<std::string, std::string> meta;  // seed, epoch, training config echo
};

/// Text checkpoint: "mfgcn-checkpoint 1", config lines, "meta <key> <value>"
/// lines, then "matrix <name> <rows> <cols>" blocks of row-major values.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// "node-id v1 ... vd" per line at full double precision.
void write_embeddings(const std::filesystem::path& path, const Graph& g,
                      std::span<const NodeId> nodes, const Matrix<double>& z);

}  // namespace mfgcn
