// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "adtg/numkit/types.hpp"

namespace adtg::numkit {

/// Non-owning view of one named trainable matrix or vector.
template <typename Scalar>
struct ParamRef {
  std::string name;
  Scalar* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  template <typename Derived>
  static ParamRef of(std::string n, Eigen::PlainObjectBase<Derived>& m) {
    return {std::move(n), m.data(), m.rows(), m.cols()};
  }

  Eigen::Map<Matrix<Scalar>> map() const { return {data, rows, cols}; }
};

template <typename Scalar>
struct AdamState {
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
  long step = 0;
  std::vector<Matrix<Scalar>> m;
  std::vector<Matrix<Scalar>> v;
};

/// One bias-corrected Adam update of `params` in place.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, std::span<const ParamRef<Scalar>> params,
               std::span<const Matrix<Scalar>> grads, Scalar lr) {
  if (!(lr >= 0)) throw UsageError("learning rate must be non-negative");
  if (params.size() != grads.size()) throw ShapeError("parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix<Scalar>::Zero(p.rows, p.cols));
      state.v.push_back(Matrix<Scalar>::Zero(p.rows, p.cols));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("optimizer state was built for other parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].rows() != params[k].rows || grads[k].cols() != params[k].cols ||
        state.m[k].rows() != params[k].rows || state.m[k].cols() != params[k].cols) {
      throw ShapeError("gradient shape differs for parameter '" + params[k].name + "'");
    }
    if (!grads[k].allFinite()) throw TrainingError("non-finite gradient for parameter '" + params[k].name + "'");
  }

  ++state.step;
  const Scalar c1 = 1 - std::pow(state.beta1, static_cast<Scalar>(state.step));
  const Scalar c2 = 1 - std::pow(state.beta2, static_cast<Scalar>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    m = state.beta1 * m + (1 - state.beta1) * grads[k];
    v = state.beta2 * v + (1 - state.beta2) * grads[k].cwiseAbs2();
    auto w = params[k].map();
    w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace adtg::numkit
