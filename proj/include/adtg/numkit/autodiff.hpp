// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reverse-mode differentiation over dense Eigen matrices.
//
// A `BasicTape` records every intermediate value produced by the free
// functions below together with a closure that pushes the upstream
// gradient to the node's inputs. Only the operations the models in this
// repository compose are provided.

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adtg/numkit/types.hpp"

namespace adtg::numkit {

template <typename Scalar>
class BasicTape;

template <typename Scalar>
class BasicVar {
 public:
  BasicVar() = default;
  BasicVar(BasicTape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  BasicTape<Scalar>* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix<Scalar>& value() const { return tape_->value(id_); }
  const Matrix<Scalar>& grad() const { return tape_->grad(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  BasicTape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

template <typename Scalar>
class BasicTape {
 public:
  using Mat = Matrix<Scalar>;
  using Var = BasicVar<Scalar>;
  using Backprop = std::function<void(BasicTape&, const Mat& upstream)>;

  BasicTape() { nodes_.reserve(64); }
  BasicTape(const BasicTape&) = delete;
  BasicTape& operator=(const BasicTape&) = delete;

  Var variable(Mat value) { return push(std::move(value), true, {}); }
  Var constant(Mat value) { return push(std::move(value), false, {}); }

  /// Leaves that read `value` in place. It must outlive the tape and stay
  /// unchanged until backward() has run.
  Var variable_ref(const Mat& value) { return push_ref(value, true); }
  Var constant_ref(const Mat& value) { return push_ref(value, false); }
  template <typename Other>
  Var variable_ref(const Other&) = delete;
  template <typename Other>
  Var constant_ref(const Other&) = delete;
  Var variable_ref(Mat&&) = delete;
  Var constant_ref(Mat&&) = delete;

  /// Records an operation result. `inputs` decide whether a gradient is needed.
  Var record(Mat value, std::initializer_list<Var> inputs, Backprop back) {
    bool needs = false;
    for (const Var& v : inputs) {
      check_owner(v);
      needs = needs || nodes_[v.id()].needs_grad;
    }
    return push(std::move(value), needs, needs ? std::move(back) : Backprop{});
  }

  Var record(Mat value, const std::vector<Var>& inputs, Backprop back) {
    bool needs = false;
    for (const Var& v : inputs) {
      check_owner(v);
      needs = needs || nodes_[v.id()].needs_grad;
    }
    return push(std::move(value), needs, needs ? std::move(back) : Backprop{});
  }

  const Mat& value(int id) const { return nodes_.at(id).get(); }

  /// Gradient of the last `backward` target; zeros for unreached nodes.
  const Mat& grad(int id) const {
    const Node& n = nodes_.at(id);
    if (n.grad.size() == 0 && n.get().size() != 0) {
      n.grad = Mat::Zero(n.get().rows(), n.get().cols());
    }
    return n.grad;
  }

  bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }

  template <typename Derived>
  void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[v.id()];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad.resize(g.rows(), g.cols());
      n.grad.noalias() = g;
    } else {
      n.grad.noalias() += g;
    }
  }

  void backward(const Var& loss) {
    check_owner(loss);
    const Mat& lv = nodes_[loss.id()].get();
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw UsageError("gradient requested for a non-scalar value of shape " +
                       std::to_string(lv.rows()) + "x" + std::to_string(lv.cols()));
    }
    for (Node& n : nodes_) n.grad.resize(0, 0);
    nodes_[loss.id()].grad = Mat::Ones(1, 1);
    for (int i = loss.id(); i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.backprop || n.grad.size() == 0) continue;
      n.backprop(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    const Mat* ref = nullptr;
    mutable Mat grad;
    bool needs_grad = false;
    Backprop backprop;

    const Mat& get() const { return ref ? *ref : value; }
  };

  Var push(Mat value, bool needs, Backprop back) {
    if (!value.allFinite()) throw DomainError("non-finite value produced on the gradient tape");
    nodes_.push_back(Node{std::move(value), nullptr, Mat{}, needs, std::move(back)});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  Var push_ref(const Mat& value, bool needs) {
    if (!value.allFinite()) throw DomainError("non-finite value produced on the gradient tape");
    nodes_.push_back(Node{Mat{}, &value, Mat{}, needs, Backprop{}});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  void check_owner(const Var& v) const {
    if (v.tape() != this) throw UsageError("variable belongs to a different tape");
  }

  std::vector<Node> nodes_;
};

using Tape = BasicTape<double>;
using Var = BasicVar<double>;

// ---------------------------------------------------------------------------
// Elementary operations.

template <typename S>
BasicVar<S> matmul(const BasicVar<S>& a, const BasicVar<S>& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul inner dimensions differ");
  auto* t = a.tape();
  return t->record(a.value() * b.value(), {a, b}, [a, b](BasicTape<S>& tp, const Matrix<S>& g) {
    if (tp.needs_grad(a)) tp.accumulate(a, g * b.value().transpose());
    if (tp.needs_grad(b)) tp.accumulate(b, a.value().transpose() * g);
  });
}

/// `w * x + b` with `b` (rows x 1) broadcast across the columns of `x`.
template <typename S>
BasicVar<S> affine(const BasicVar<S>& w, const BasicVar<S>& x, const BasicVar<S>& b) {
  if (w.cols() != x.rows() || b.cols() != 1 || b.rows() != w.rows()) {
    throw ShapeError("affine map dimensions differ");
  }
  Matrix<S> out = w.value() * x.value();
  out.colwise() += b.value().col(0);
  return w.tape()->record(std::move(out), {w, x, b}, [w, x, b](BasicTape<S>& tp, const Matrix<S>& g) {
    if (tp.needs_grad(w)) tp.accumulate(w, g * x.value().transpose());
    if (tp.needs_grad(x)) tp.accumulate(x, w.value().transpose() * g);
    if (tp.needs_grad(b)) tp.accumulate(b, g.rowwise().sum());
  });
}

template <typename S>
BasicVar<S> operator+(const BasicVar<S>& a, const BasicVar<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("sum of differently shaped values");
  return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](BasicTape<S>& tp, const Matrix<S>& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

template <typename S>
BasicVar<S> operator-(const BasicVar<S>& a, const BasicVar<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("difference of differently shaped values");
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](BasicTape<S>& tp, const Matrix<S>& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, -g);
  });
}

/// `c - a`, elementwise.
template <typename S>
BasicVar<S> operator-(S c, const BasicVar<S>& a) {
  Matrix<S> out = (-a.value()).array() + c;
  return a.tape()->record(std::move(out), {a}, [a](BasicTape<S>& tp, const Matrix<S>& g) { tp.accumulate(a, -g); });
}

template <typename S>
BasicVar<S> operator*(S c, const BasicVar<S>& a) {
  return a.tape()->record(c * a.value(), {a}, [a, c](BasicTape<S>& tp, const Matrix<S>& g) { tp.accumulate(a, c * g); });
}

/// Elementwise product.
template <typename S>
BasicVar<S> hadamard(const BasicVar<S>& a, const BasicVar<S>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("elementwise product of differently shaped values");
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](BasicTape<S>& tp, const Matrix<S>& g) {
    if (tp.needs_grad(a)) tp.accumulate(a, g.cwiseProduct(b.value()));
    if (tp.needs_grad(b)) tp.accumulate(b, g.cwiseProduct(a.value()));
  });
}

template <typename S>
BasicVar<S> relu(const BasicVar<S>& a) {
  Matrix<S> out = a.value().cwiseMax(S(0));
  return a.tape()->record(std::move(out), {a}, [a](BasicTape<S>& tp, const Matrix<S>& g) {
    tp.accumulate(a, (a.value().array() > S(0)).select(g.array(), S(0)).matrix());
  });
}

template <typename S>
BasicVar<S> tanh(const BasicVar<S>& a) {
  Matrix<S> out = a.value().array().tanh().matrix();
  auto* t = a.tape();
  const int self = static_cast<int>(t->size());
  return t->record(std::move(out), {a}, [a, self](BasicTape<S>& tp, const Matrix<S>& g) {
    const Matrix<S>& y = tp.value(self);
    tp.accumulate(a, (g.array() * (S(1) - y.array().square())).matrix());
  });
}

template <typename S>
BasicVar<S> activate(const BasicVar<S>& a, Activation act) {
  switch (act) {
    case Activation::relu: return relu(a);
    case Activation::tanh: return tanh(a);
    case Activation::identity: return a;
  }
  return a;
}

/// Stacks values with equal column counts on top of each other.
template <typename S>
BasicVar<S> concat_rows(const std::vector<BasicVar<S>>& parts) {
  if (parts.empty()) throw ShapeError("concatenation of nothing");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ShapeError("row concatenation with differing column counts");
    rows += p.rows();
  }
  Matrix<S> out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return parts.front().tape()->record(std::move(out), parts, [parts](BasicTape<S>& tp, const Matrix<S>& g) {
    Eigen::Index r0 = 0;
    for (const auto& p : parts) {
      tp.accumulate(p, g.middleRows(r0, p.rows()));
      r0 += p.rows();
    }
  });
}

/// Repeats a column vector `n` times side by side.
template <typename S>
BasicVar<S> repeat_cols(const BasicVar<S>& v, Eigen::Index n) {
  if (v.cols() != 1) throw ShapeError("repeat_cols expects a column vector");
  Matrix<S> out = v.value().replicate(1, n);
  return v.tape()->record(std::move(out), {v}, [v](BasicTape<S>& tp, const Matrix<S>& g) {
    tp.accumulate(v, g.rowwise().sum());
  });
}

/// Column j of the result is row `ids[j]` of `table`, transposed.
template <typename S>
BasicVar<S> gather_rows(const BasicVar<S>& table, const std::vector<Eigen::Index>& ids) {
  Matrix<S> out(table.cols(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] < 0 || ids[j] >= table.rows()) throw IndexError("embedding row " + std::to_string(ids[j]));
    out.col(static_cast<Eigen::Index>(j)) = table.value().row(ids[j]).transpose();
  }
  return table.tape()->record(std::move(out), {table}, [table, ids](BasicTape<S>& tp, const Matrix<S>& g) {
    Matrix<S> gt = Matrix<S>::Zero(table.rows(), table.cols());
    for (std::size_t j = 0; j < ids.size(); ++j) gt.row(ids[j]) += g.col(static_cast<Eigen::Index>(j)).transpose();
    tp.accumulate(table, gt);
  });
}

/// Picks the listed columns.
template <typename S>
BasicVar<S> select_cols(const BasicVar<S>& a, const std::vector<Eigen::Index>& cols) {
  Matrix<S> out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = a.value().col(cols[j]);
  return a.tape()->record(std::move(out), {a}, [a, cols](BasicTape<S>& tp, const Matrix<S>& g) {
    Matrix<S> ga = Matrix<S>::Zero(a.rows(), a.cols());
    for (std::size_t j = 0; j < cols.size(); ++j) ga.col(cols[j]) += g.col(static_cast<Eigen::Index>(j));
    tp.accumulate(a, ga);
  });
}

template <typename S>
BasicVar<S> entry(const BasicVar<S>& a, Eigen::Index i, Eigen::Index j) {
  Matrix<S> out(1, 1);
  out(0, 0) = a.value()(i, j);
  return a.tape()->record(std::move(out), {a}, [a, i, j](BasicTape<S>& tp, const Matrix<S>& g) {
    Matrix<S> ga = Matrix<S>::Zero(a.rows(), a.cols());
    ga(i, j) = g(0, 0);
    tp.accumulate(a, ga);
  });
}

template <typename S>
BasicVar<S> sum(const BasicVar<S>& a) {
  Matrix<S> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {a}, [a](BasicTape<S>& tp, const Matrix<S>& g) {
    tp.accumulate(a, Matrix<S>::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

/// Row vector of `1 - cos(a_j, v)` over the columns `a_j` of `a`.
template <typename S>
BasicVar<S> cosine_distance_cols(const BasicVar<S>& a, const BasicVar<S>& v) {
  if (v.cols() != 1 || a.rows() != v.rows()) throw ShapeError("cosine distance dimensions differ");
  const Eigen::Index n = a.cols();
  const S vn = v.value().norm();
  Vector<S> an = a.value().colwise().norm().transpose();
  if (vn == 0 || (an.array() == 0).any()) throw DomainError("cosine distance of a zero-norm vector");
  Vector<S> dots = (a.value().transpose() * v.value()).col(0);
  Matrix<S> out(1, n);
  for (Eigen::Index j = 0; j < n; ++j) out(0, j) = 1 - dots(j) / (an(j) * vn);
  return a.tape()->record(std::move(out), {a, v}, [a, v, an, vn, dots](BasicTape<S>& tp, const Matrix<S>& g) {
    // d(cos)/da = v/(|a||v|) - cos * a/|a|^2 ; same with roles swapped for v.
    const Matrix<S>& av = a.value();
    const Matrix<S>& vv = v.value();
    Matrix<S> ga(av.rows(), av.cols());
    Matrix<S> gv = Matrix<S>::Zero(vv.rows(), 1);
    for (Eigen::Index j = 0; j < av.cols(); ++j) {
      const S cos = dots(j) / (an(j) * vn);
      ga.col(j) = -g(0, j) * (vv.col(0) / (an(j) * vn) - cos * av.col(j) / (an(j) * an(j)));
      gv += -g(0, j) * (av.col(j) / (an(j) * vn) - cos * vv.col(0) / (vn * vn));
    }
    if (tp.needs_grad(a)) tp.accumulate(a, ga);
    if (tp.needs_grad(v)) tp.accumulate(v, gv);
  });
}

/// Cross-entropy of a softmax over all entries of `logits` (any vector shape).
template <typename S>
BasicVar<S> softmax_cross_entropy(const BasicVar<S>& logits, Eigen::Index target) {
  const Eigen::Index n = logits.value().size();
  if (target < 0 || target >= n) {
    throw IndexError("target " + std::to_string(target) + " outside " + std::to_string(n) + " logits");
  }
  Vector<S> flat = Eigen::Map<const Vector<S>>(logits.value().data(), n);
  const S shift = flat.maxCoeff();
  Vector<S> e = (flat.array() - shift).exp();
  const S z = e.sum();
  Vector<S> probs = e / z;
  Matrix<S> out(1, 1);
  out(0, 0) = -((flat(target) - shift) - std::log(z));
  return logits.tape()->record(std::move(out), {logits}, [logits, probs, target](BasicTape<S>& tp, const Matrix<S>& g) {
    Matrix<S> gl = Eigen::Map<const Matrix<S>>(probs.data(), logits.rows(), logits.cols());
    gl.data()[target] -= 1;
    tp.accumulate(logits, g(0, 0) * gl);
  });
}

/// Column-major reinterpretation with the same number of entries.
template <typename S>
BasicVar<S> reshape(const BasicVar<S>& a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) throw ShapeError("reshape changes the number of entries");
  const Eigen::Index r0 = a.rows(), c0 = a.cols();
  Matrix<S> out = Eigen::Map<const Matrix<S>>(a.value().data(), rows, cols);
  return a.tape()->record(std::move(out), {a}, [a, r0, c0](BasicTape<S>& tp, const Matrix<S>& g) {
    tp.accumulate(a, Eigen::Map<const Matrix<S>>(g.data(), r0, c0));
  });
}

/// Sum over columns j of the cross-entropy of softmax(logits.col(j)) against targets[j].
template <typename S>
BasicVar<S> softmax_cross_entropy_cols(const BasicVar<S>& logits, const std::vector<Eigen::Index>& targets) {
  const Eigen::Index k = logits.rows(), n = logits.cols();
  if (static_cast<Eigen::Index>(targets.size()) != n) throw ShapeError("one target per column required");
  Matrix<S> probs(k, n);
  S total = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (targets[j] < 0 || targets[j] >= k) {
      throw IndexError("target " + std::to_string(targets[j]) + " outside " + std::to_string(k) + " logits");
    }
    const auto col = logits.value().col(j);
    const S shift = col.maxCoeff();
    probs.col(j) = (col.array() - shift).exp().matrix();
    const S z = probs.col(j).sum();
    probs.col(j) /= z;
    total += -((col(targets[j]) - shift) - std::log(z));
  }
  Matrix<S> out(1, 1);
  out(0, 0) = total;
  return logits.tape()->record(std::move(out), {logits}, [logits, probs, targets](BasicTape<S>& tp, const Matrix<S>& g) {
    Matrix<S> gl = probs;
    for (std::size_t j = 0; j < targets.size(); ++j) gl(targets[j], static_cast<Eigen::Index>(j)) -= 1;
    tp.accumulate(logits, g(0, 0) * gl);
  });
}

// ---------------------------------------------------------------------------
// Parameter bindings for the composite layers.

template <typename S>
struct Mlp2Vars {
  BasicVar<S> w1, b1, w2, b2;
  Activation activation = Activation::relu;
};

template <typename S>
struct RnnVars {
  BasicVar<S> w_in, w_h, b;
};

template <typename S>
Mlp2Vars<S> bind(BasicTape<S>& tape, const Mlp2Params<S>& p, bool trainable = true) {
  auto ref = [&](const Matrix<S>& m) { return trainable ? tape.variable_ref(m) : tape.constant_ref(m); };
  auto copy = [&](const Matrix<S>& m) { return trainable ? tape.variable(m) : tape.constant(m); };
  return {ref(p.w1), copy(p.b1), ref(p.w2), copy(p.b2), p.activation};
}

template <typename S>
RnnVars<S> bind(BasicTape<S>& tape, const RnnParams<S>& p, bool trainable = true) {
  auto ref = [&](const Matrix<S>& m) { return trainable ? tape.variable_ref(m) : tape.constant_ref(m); };
  auto copy = [&](const Matrix<S>& m) { return trainable ? tape.variable(m) : tape.constant(m); };
  return {ref(p.w_in), ref(p.w_h), copy(p.b)};
}

/// Column-batched two-layer net.
template <typename S>
BasicVar<S> mlp2(const Mlp2Vars<S>& p, const BasicVar<S>& x) {
  return affine(p.w2, activate(affine(p.w1, x, p.b1), p.activation), p.b2);
}

template <typename S>
BasicVar<S> rnn_step(const RnnVars<S>& p, const BasicVar<S>& h_prev, const BasicVar<S>& x) {
  return tanh(affine(p.w_in, x, p.b) + matmul(p.w_h, h_prev));
}

// ---------------------------------------------------------------------------
// Whole-function gradients and the finite-difference checker.

template <typename S>
using LossFn = std::function<BasicVar<S>(BasicTape<S>&, std::span<const BasicVar<S>>)>;

template <typename S>
S evaluate(const LossFn<S>& f, std::span<const Matrix<S>> params) {
  BasicTape<S> tape;
  std::vector<BasicVar<S>> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.constant(p));
  BasicVar<S> out = f(tape, vars);
  if (out.rows() != 1 || out.cols() != 1) throw UsageError("loss function returned a non-scalar");
  return out.value()(0, 0);
}

/// Exact reverse-mode gradient of `f` at `params`.
template <typename S>
std::vector<Matrix<S>> grad(const LossFn<S>& f, std::span<const Matrix<S>> params) {
  BasicTape<S> tape;
  std::vector<BasicVar<S>> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.variable(p));
  BasicVar<S> out = f(tape, vars);
  tape.backward(out);
  std::vector<Matrix<S>> grads;
  grads.reserve(vars.size());
  for (const auto& v : vars) grads.push_back(v.grad());
  return grads;
}

/// Max over coordinates of |analytic - central difference| / max(1, |central difference|).
template <typename S>
S finite_diff_check(const LossFn<S>& f, std::span<const Matrix<S>> params, S eps) {
  if (!(eps > 0)) throw UsageError("finite-difference step must be positive");
  const auto analytic = grad(f, params);
  std::vector<Matrix<S>> probe(params.begin(), params.end());
  S worst = 0;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    for (Eigen::Index i = 0; i < probe[k].size(); ++i) {
      S& x = probe[k].data()[i];
      const S saved = x;
      x = saved + eps;
      const S up = evaluate<S>(f, probe);
      x = saved - eps;
      const S down = evaluate<S>(f, probe);
      x = saved;
      const S numeric = (up - down) / (2 * eps);
      const S err = std::abs(analytic[k].data()[i] - numeric) / std::max(S(1), std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace adtg::numkit
