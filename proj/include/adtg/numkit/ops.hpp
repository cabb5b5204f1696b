// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <utility>

#include "adtg/numkit/types.hpp"

namespace adtg::numkit {

namespace detail {

inline std::string dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

template <typename Derived>
auto activate(const Eigen::MatrixBase<Derived>& z, Activation act) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out = z;
  switch (act) {
    case Activation::relu: out = out.cwiseMax(Scalar(0)); break;
    case Activation::tanh: out = out.array().tanh().matrix(); break;
    case Activation::identity: break;
  }
  return out;
}

}  // namespace detail

/// Applies the two-layer net to every column of `x`.
template <typename Scalar, typename Derived>
Matrix<Scalar> mlp2_forward(const Mlp2Params<Scalar>& p, const Eigen::MatrixBase<Derived>& x) {
  p.validate();
  if (x.rows() != p.input_dim()) {
    throw ShapeError("two-layer net expects input dim " + std::to_string(p.input_dim()) + ", got " +
                     detail::dims(x.rows(), x.cols()));
  }
  Matrix<Scalar> z1 = p.w1 * x;
  z1.colwise() += p.b1;
  Matrix<Scalar> out = p.w2 * detail::activate(z1, p.activation);
  out.colwise() += p.b2;
  return out;
}

template <typename Scalar, typename DerivedH, typename DerivedX>
Vector<Scalar> rnn_step(const RnnParams<Scalar>& p, const Eigen::MatrixBase<DerivedH>& h_prev,
                        const Eigen::MatrixBase<DerivedX>& x) {
  p.validate();
  if (h_prev.size() != p.hidden_dim() || x.size() != p.input_dim()) {
    throw ShapeError("recurrent cell expects hidden " + std::to_string(p.hidden_dim()) +
                     " and input " + std::to_string(p.input_dim()));
  }
  return (p.w_in * x + p.w_h * h_prev + p.b).array().tanh().matrix();
}

/// Max-shifted log-softmax over a vector of logits.
template <typename Derived>
Vector<typename Derived::Scalar> log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  if (logits.size() == 0) throw ShapeError("softmax over an empty logit vector");
  const Scalar shift = logits.maxCoeff();
  Vector<Scalar> shifted = logits.array() - shift;
  const Scalar lse = std::log(shifted.array().exp().sum());
  return shifted.array() - lse;
}

template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  return log_softmax(logits).array().exp().matrix();
}

template <typename Scalar>
struct CrossEntropy {
  Scalar loss;
  Vector<Scalar> probs;
};

template <typename Derived>
CrossEntropy<typename Derived::Scalar> softmax_cross_entropy(const Eigen::MatrixBase<Derived>& logits,
                                                              Eigen::Index target) {
  if (target < 0 || target >= logits.size()) {
    throw IndexError("target " + std::to_string(target) + " outside " + std::to_string(logits.size()) +
                     " logits");
  }
  auto logp = log_softmax(logits);
  return {-logp(target), logp.array().exp().matrix()};
}

/// `1 - cos(v1, v2)`. Zero-norm inputs are rejected rather than mapped to a value.
template <typename D1, typename D2>
typename D1::Scalar cosine_distance(const Eigen::MatrixBase<D1>& v1, const Eigen::MatrixBase<D2>& v2) {
  if (v1.size() != v2.size()) {
    throw ShapeError("cosine distance of vectors with lengths " + std::to_string(v1.size()) + " and " +
                     std::to_string(v2.size()));
  }
  const auto n1 = v1.norm();
  const auto n2 = v2.norm();
  if (n1 == 0 || n2 == 0) throw DomainError("cosine distance of a zero-norm vector");
  return 1 - v1.dot(v2) / (n1 * n2);
}

}  // namespace adtg::numkit
