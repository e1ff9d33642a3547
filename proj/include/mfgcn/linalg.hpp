#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <string>
#include <string_view>

namespace mfgcn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using SparseRows = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

enum class Activation { identity, relu, sigmoid, tanh };

Activation parse_activation(std::string_view name);
std::string to_string(Activation a);

template <typename Scalar>
Scalar activate(Activation a, Scalar x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::relu: return x > Scalar(0) ? x : Scalar(0);
    case Activation::sigmoid: return Scalar(1) / (Scalar(1) + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
  }
  return x;
}

/// Derivative evaluated at the pre-activation value.
template <typename Scalar>
Scalar activate_grad(Activation a, Scalar x) {
  switch (a) {
    case Activation::identity: return Scalar(1);
    case Activation::relu: return x > Scalar(0) ? Scalar(1) : Scalar(0);
    case Activation::sigmoid: {
      const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-x));
      return s * (Scalar(1) - s);
    }
    case Activation::tanh: {
      const Scalar t = std::tanh(x);
      return Scalar(1) - t * t;
    }
  }
  return Scalar(1);
}

template <typename Derived>
auto activated(Activation a, const Eigen::MatrixBase<Derived>& pre) {
  using Scalar = typename Derived::Scalar;
  return pre.unaryExpr([a](Scalar x) { return activate(a, x); });
}

template <typename Derived>
auto activation_grad(Activation a, const Eigen::MatrixBase<Derived>& pre) {
  using Scalar = typename Derived::Scalar;
  return pre.unaryExpr([a](Scalar x) { return activate_grad(a, x); });
}

/// Numerically stable log(sigmoid(x)).
template <typename Scalar>
Scalar log_sigmoid(Scalar x) {
  return x >= Scalar(0) ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Derived>
RowVector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  RowVector<Scalar> p = (logits.array() - logits.maxCoeff()).exp().matrix();
  return p / p.sum();
}

/// Rows of a row-major sparse matrix, in the given order.
template <typename Scalar, typename Index>
SparseRows<Scalar> gather_rows(const SparseRows<Scalar>& m, const std::vector<Index>& rows) {
  SparseRows<Scalar> out(static_cast<Eigen::Index>(rows.size()), m.cols());
  Eigen::Index nnz = 0;
  for (auto r : rows) nnz += m.outerIndexPtr()[r + 1] - m.outerIndexPtr()[r];
  out.reserve(nnz);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(rows.size()); ++k) {
    out.startVec(k);
    for (typename SparseRows<Scalar>::InnerIterator it(m, rows[static_cast<std::size_t>(k)]); it; ++it)
      out.insertBack(k, it.col()) = it.value();
  }
  out.finalize();
  return out;
}

}  // namespace mfgcn
