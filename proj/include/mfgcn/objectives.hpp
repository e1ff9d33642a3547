#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "mfgcn/common.hpp"
#include "mfgcn/linalg.hpp"

namespace mfgcn {

template <typename Scalar>
struct SgnsResult {
  Scalar loss{};
  RowVector<Scalar> grad_center;
  Matrix<Scalar> grad_contexts;   // one row per context
  Matrix<Scalar> grad_negatives;  // one row per negative
};

/// Skip-gram negative-sampling loss for one center:
///   -sum_c log s(c.u) - sum_n log s(-n.u)
/// over row-vector embeddings, with gradients for every input row.
template <typename CenterDerived, typename ContextDerived, typename NegativeDerived>
SgnsResult<typename CenterDerived::Scalar> sgns_loss(
    const Eigen::MatrixBase<CenterDerived>& center, const Eigen::MatrixBase<ContextDerived>& contexts,
    const Eigen::MatrixBase<NegativeDerived>& negatives) {
  using Scalar = typename CenterDerived::Scalar;
  if (contexts.rows() == 0) throw std::invalid_argument("sgns_loss: empty context list");
  const Eigen::Index d = center.size();
  if (contexts.cols() != d || (negatives.rows() > 0 && negatives.cols() != d))
    throw std::invalid_argument("sgns_loss: dimension mismatch");

  SgnsResult<Scalar> r;
  r.grad_center = RowVector<Scalar>::Zero(d);
  r.grad_contexts.resize(contexts.rows(), d);
  r.grad_negatives.resize(negatives.rows(), d);

  // d/ds [-log s(s)] = s(s) - 1 ;  d/ds [-log s(-s)] = s(s)
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pos = contexts * center.transpose();
  for (Eigen::Index i = 0; i < pos.size(); ++i) {
    r.loss -= log_sigmoid(pos(i));
    const Scalar g = sigmoid(pos(i)) - Scalar(1);
    r.grad_center += g * contexts.row(i);
    r.grad_contexts.row(i) = g * center;
  }
  if (negatives.rows() > 0) {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> neg = negatives * center.transpose();
    for (Eigen::Index i = 0; i < neg.size(); ++i) {
      r.loss -= log_sigmoid(-neg(i));
      const Scalar g = sigmoid(neg(i));
      r.grad_center += g * negatives.row(i);
      r.grad_negatives.row(i) = g * center;
    }
  }
  return r;
}

/// Full-partition skip-gram loss, -sum_c [c.u - log sum_j exp(c_j.u)].
/// Reference for small graphs only.
template <typename CenterDerived, typename AllDerived>
typename CenterDerived::Scalar exact_softmax_loss(const Eigen::MatrixBase<CenterDerived>& center,
                                                  std::span<const NodeId> context_ids,
                                                  const Eigen::MatrixBase<AllDerived>& all) {
  using Scalar = typename CenterDerived::Scalar;
  constexpr Eigen::Index kMaxNodes = 200;
  if (all.rows() > kMaxNodes)
    throw std::invalid_argument("exact_softmax_loss: graph has more than 200 nodes");
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> logits = all * center.transpose();
  const Scalar m = logits.maxCoeff();
  const Scalar log_z = m + std::log((logits.array() - m).exp().sum());
  Scalar loss = 0;
  for (NodeId c : context_ids) {
    if (c < 0 || c >= all.rows()) throw std::invalid_argument("exact_softmax_loss: bad context id");
    loss -= logits(c) - log_z;
  }
  return loss;
}

template <typename Scalar>
struct CrossEntropyResult {
  Scalar loss{};
  RowVector<Scalar> grad_logits;  // probs - onehot(label)
};

template <typename Derived>
CrossEntropyResult<typename Derived::Scalar> cross_entropy_loss(
    const Eigen::MatrixBase<Derived>& probs, int label) {
  using Scalar = typename Derived::Scalar;
  if (label < 0 || label >= probs.size())
    throw std::invalid_argument("cross_entropy_loss: label out of range");
  CrossEntropyResult<Scalar> r;
  r.loss = -std::log(probs(label));
  r.grad_logits = probs;
  r.grad_logits(label) -= Scalar(1);
  return r;
}

struct CenterLoss {
  NodeId center = 0;
  double sgns = 0.0;
  double supervised = 0.0;
  bool labeled = false;
};

struct LossReport {
  double sgns = 0.0;
  double supervised = 0.0;
  double total = 0.0;
  std::vector<CenterLoss> per_center;
};

/// Sums per-center terms. Supervised terms count only for labeled centers
/// and only when `supervised` is set. `supervised_weight` defaults to the
/// plain sum L = L_s + L_r.
LossReport total_loss(std::span<const CenterLoss> parts, bool supervised,
                      double supervised_weight = 1.0);

}  // namespace mfgcn
