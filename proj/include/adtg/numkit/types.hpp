// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "adtg/error.hpp"

namespace adtg::numkit {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Seeded generator used for every random draw in the toolkit.
using Rng = std::mt19937_64;

enum class Activation : std::uint8_t { relu, tanh, identity };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw ParseError("unknown activation '" + s + "'");
}

/// Two-layer feed-forward net: `w2 * act(w1 * x + b1) + b2`.
template <typename Scalar>
struct Mlp2Params {
  Matrix<Scalar> w1;
  Vector<Scalar> b1;
  Matrix<Scalar> w2;
  Vector<Scalar> b2;
  Activation activation = Activation::relu;

  Eigen::Index input_dim() const { return w1.cols(); }
  Eigen::Index hidden_dim() const { return w1.rows(); }
  Eigen::Index output_dim() const { return w2.rows(); }

  void validate() const {
    if (w1.rows() != b1.size() || w2.cols() != w1.rows() || w2.rows() != b2.size()) {
      throw ShapeError("inconsistent two-layer net dimensions");
    }
  }
};

/// Elman cell `h = tanh(w_in * x + w_h * h_prev + b)`.
template <typename Scalar>
struct RnnParams {
  Matrix<Scalar> w_in;
  Matrix<Scalar> w_h;
  Vector<Scalar> b;

  Eigen::Index hidden_dim() const { return b.size(); }
  Eigen::Index input_dim() const { return w_in.cols(); }

  void validate() const {
    if (w_in.rows() != b.size() || w_h.rows() != b.size() || w_h.cols() != b.size()) {
      throw ShapeError("inconsistent recurrent cell dimensions");
    }
  }
};

using Mlp2 = Mlp2Params<double>;
using Rnn = RnnParams<double>;

/// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) fill.
template <typename Scalar = double>
Matrix<Scalar> init_fan_in(Rng& rng, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
  const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(fan_in));
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

template <typename Scalar = double>
Mlp2Params<Scalar> make_mlp2(Rng& rng, Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                             Activation act = Activation::relu) {
  Mlp2Params<Scalar> p;
  p.w1 = init_fan_in<Scalar>(rng, hidden, in, in);
  p.b1 = init_fan_in<Scalar>(rng, hidden, 1, in);
  p.w2 = init_fan_in<Scalar>(rng, out, hidden, hidden);
  p.b2 = init_fan_in<Scalar>(rng, out, 1, hidden);
  p.activation = act;
  return p;
}

template <typename Scalar = double>
RnnParams<Scalar> make_rnn(Rng& rng, Eigen::Index in, Eigen::Index hidden) {
  RnnParams<Scalar> p;
  p.w_in = init_fan_in<Scalar>(rng, hidden, in, in + hidden);
  p.w_h = init_fan_in<Scalar>(rng, hidden, hidden, in + hidden);
  p.b = init_fan_in<Scalar>(rng, hidden, 1, in + hidden);
  return p;
}

}  // namespace adtg::numkit
