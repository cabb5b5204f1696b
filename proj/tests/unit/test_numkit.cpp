// Copyright 2026 The ADTG Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "adtg/numkit/adam.hpp"
#include "adtg/numkit/autodiff.hpp"
#include "adtg/numkit/ops.hpp"
#include "doctest.h"

using namespace adtg;
using namespace adtg::numkit;

namespace {

MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

// Straight-line re-evaluation with explicit loops, independent of Eigen products.
std::vector<double> mlp_oracle(const Mlp2& p, const std::vector<double>& x) {
  std::vector<double> hidden(p.w1.rows());
  for (Eigen::Index i = 0; i < p.w1.rows(); ++i) {
    double acc = p.b1(i);
    for (Eigen::Index j = 0; j < p.w1.cols(); ++j) acc += p.w1(i, j) * x[j];
    hidden[i] = acc > 0 ? acc : 0.0;
  }
  std::vector<double> out(p.w2.rows());
  for (Eigen::Index i = 0; i < p.w2.rows(); ++i) {
    double acc = p.b2(i);
    for (Eigen::Index j = 0; j < p.w2.cols(); ++j) acc += p.w2(i, j) * hidden[j];
    out[i] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("mlp2_forward zero weights return the output bias") {
  Mlp2 p;
  p.w1 = MatrixXd::Zero(3, 2);
  p.b1 = VectorXd::Zero(3);
  p.w2 = MatrixXd::Zero(2, 3);
  p.b2 = (VectorXd(2) << 1, 2).finished();
  const MatrixXd y = mlp2_forward(p, VectorXd::Constant(2, 5.0));
  CHECK(y(0, 0) == 1.0);
  CHECK(y(1, 0) == 2.0);
}

TEST_CASE("mlp2_forward dead ReLU yields the output bias") {
  Mlp2 p;
  p.w1 = MatrixXd::Ones(1, 1);
  p.b1 = VectorXd::Zero(1);
  p.w2 = MatrixXd::Ones(1, 1);
  p.b2 = VectorXd::Constant(1, 0.25);
  CHECK(mlp2_forward(p, VectorXd::Constant(1, -3.0))(0, 0) == 0.25);
}

TEST_CASE("mlp2_forward matches the loop oracle") {
  Rng rng(11);
  const Mlp2 p = make_mlp2(rng, 4, 8, 3);
  const MatrixXd x = random_matrix(rng, 4, 1);
  const std::vector<double> ref = mlp_oracle(p, {x(0), x(1), x(2), x(3)});
  const MatrixXd y = mlp2_forward(p, x);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(y(i, 0) - ref[i]) < 1e-12);
}

TEST_CASE("mlp2_forward rejects a wrong input dimension") {
  Rng rng(1);
  const Mlp2 p = make_mlp2(rng, 4, 8, 3);
  CHECK_THROWS_AS(mlp2_forward(p, VectorXd::Zero(5)), ShapeError);
}

TEST_CASE("rnn_step") {
  SUBCASE("zero parameters give a zero state") {
    Rnn p{MatrixXd::Zero(4, 3), MatrixXd::Zero(4, 4), VectorXd::Zero(4)};
    CHECK(rnn_step(p, VectorXd::Ones(4), VectorXd::Ones(3)).isZero());
  }
  SUBCASE("large bias saturates") {
    Rnn p{MatrixXd::Zero(4, 3), MatrixXd::Zero(4, 4), VectorXd::Constant(4, 50.0)};
    const VectorXd h = rnn_step(p, VectorXd::Zero(4), VectorXd::Ones(3));
    CHECK((h.array() > 1 - 1e-12).all());
  }
  SUBCASE("scalar cell") {
    Rnn p{MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), VectorXd::Zero(1)};
    CHECK(rnn_step(p, VectorXd::Zero(1), VectorXd::Constant(1, 0.5))(0) == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
  }
  SUBCASE("dimension mismatch") {
    Rnn p{MatrixXd::Zero(4, 3), MatrixXd::Zero(4, 4), VectorXd::Zero(4)};
    CHECK_THROWS_AS(rnn_step(p, VectorXd::Zero(3), VectorXd::Zero(3)), ShapeError);
  }
}

TEST_CASE("softmax_cross_entropy") {
  SUBCASE("uniform logits give ln N") {
    const auto ce = softmax_cross_entropy(VectorXd::Constant(7, 0.3), 2);
    CHECK(ce.loss == doctest::Approx(std::log(7.0)).epsilon(1e-14));
  }
  SUBCASE("large margin does not overflow") {
    const auto ce = softmax_cross_entropy((VectorXd(2) << 1000, 0).finished(), 0);
    CHECK(std::isfinite(ce.loss));
    CHECK(ce.loss < 1e-300);
    CHECK(ce.loss >= 0);
  }
  SUBCASE("direct formula") {
    const double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0);
    const double expected = -std::log(e3 / (e1 + e2 + e3));
    const auto ce = softmax_cross_entropy((VectorXd(3) << 1, 2, 3).finished(), 2);
    CHECK(std::abs(ce.loss - expected) < 1e-12);
  }
  SUBCASE("target out of range") {
    CHECK_THROWS_AS(softmax_cross_entropy(VectorXd::Zero(3), 3), IndexError);
    CHECK_THROWS_AS(softmax_cross_entropy(VectorXd::Zero(3), -1), IndexError);
  }
}

TEST_CASE("softmax is a shift-invariant distribution") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const VectorXd z = random_matrix(rng, 1 + trial % 9, 1, 20.0);
    const VectorXd p = softmax(z);
    CHECK((p.array() >= 0).all());
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    const VectorXd q = softmax((z.array() + 123.5).matrix());
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("cosine_distance") {
  const VectorXd v = (VectorXd(3) << 1, -2, 0.5).finished();
  CHECK(std::abs(cosine_distance(v, v)) < 1e-15);
  CHECK(cosine_distance(v, (-v).eval()) == doctest::Approx(2.0));
  CHECK(cosine_distance((VectorXd(2) << 1, 0).finished(), (VectorXd(2) << 0, 3).finished()) == 1.0);
  CHECK_THROWS_AS(cosine_distance(v, VectorXd::Zero(3).eval()), DomainError);
  CHECK_THROWS_AS(cosine_distance(v, VectorXd::Ones(2).eval()), ShapeError);

  Rng rng(9);
  std::uniform_real_distribution<double> pos(0.01, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    const VectorXd a = random_matrix(rng, 6, 1);
    const VectorXd b = random_matrix(rng, 6, 1);
    const double d = cosine_distance(a, b);
    CHECK(d >= 0);
    CHECK(d <= 2);
    CHECK(d == doctest::Approx(cosine_distance(b, a)).epsilon(1e-14));
    CHECK(d == doctest::Approx(cosine_distance((pos(rng) * a).eval(), (pos(rng) * b).eval())).epsilon(1e-12));
  }
}

TEST_CASE("adam_step") {
  SUBCASE("first step moves by the learning rate") {
    // m = 0.1, v = 0.001; bias correction restores 1 and 1; step = 0.1 / (1 + 1e-8).
    MatrixXd w = MatrixXd::Constant(1, 1, 2.0);
    AdamState<double> st;
    std::vector<ParamRef<double>> ps{ParamRef<double>::of("w", w)};
    std::vector<MatrixXd> gs{MatrixXd::Ones(1, 1)};
    adam_step<double>(st, ps, gs, 0.1);
    CHECK(std::abs((w(0, 0) - 2.0) - (-0.1 / (1.0 + 1e-8))) < 1e-15);
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    Rng rng(3);
    MatrixXd w = random_matrix(rng, 3, 4);
    const MatrixXd w0 = w;
    AdamState<double> st;
    std::vector<ParamRef<double>> ps{ParamRef<double>::of("w", w)};
    std::vector<MatrixXd> gs{MatrixXd::Zero(3, 4)};
    for (int i = 0; i < 5; ++i) adam_step<double>(st, ps, gs, 0.5);
    CHECK(w == w0);
  }
  SUBCASE("zero learning rate is the identity") {
    Rng rng(4);
    MatrixXd w = random_matrix(rng, 2, 2);
    const MatrixXd w0 = w;
    AdamState<double> st;
    std::vector<ParamRef<double>> ps{ParamRef<double>::of("w", w)};
    std::vector<MatrixXd> gs{random_matrix(rng, 2, 2)};
    adam_step<double>(st, ps, gs, 0.0);
    CHECK(w == w0);
  }
  SUBCASE("non-finite gradient names the parameter") {
    MatrixXd w = MatrixXd::Zero(1, 1);
    AdamState<double> st;
    std::vector<ParamRef<double>> ps{ParamRef<double>::of("weights.w1", w)};
    std::vector<MatrixXd> gs{MatrixXd::Constant(1, 1, std::nan(""))};
    try {
      adam_step<double>(st, ps, gs, 0.1);
      FAIL("expected a training error");
    } catch (const TrainingError& e) {
      CHECK(std::string(e.what()).find("weights.w1") != std::string::npos);
    }
  }
  SUBCASE("convex quadratic converges") {
    Rng rng(21);
    const MatrixXd target = random_matrix(rng, 8, 1, 3.0);
    MatrixXd w = random_matrix(rng, 8, 1, 3.0);
    AdamState<double> st;
    std::vector<ParamRef<double>> ps{ParamRef<double>::of("w", w)};
    int steps = 0;
    while ((w - target).norm() >= 1e-3 && steps < 5000) {
      std::vector<MatrixXd> gs{2.0 * (w - target)};
      adam_step<double>(st, ps, gs, 0.1);
      ++steps;
    }
    CHECK((w - target).norm() < 1e-3);
  }
}

TEST_CASE("grad") {
  SUBCASE("square") {
    LossFn<double> f = [](Tape&, std::span<const Var> p) {
      return sum(matmul(p[0], p[0]));
    };
    std::vector<MatrixXd> w{MatrixXd::Constant(1, 1, 3.0)};
    CHECK(grad(f, std::span<const MatrixXd>(w))[0](0, 0) == 6.0);
  }
  SUBCASE("constant function") {
    LossFn<double> f = [](Tape& t, std::span<const Var>) { return t.constant(MatrixXd::Constant(1, 1, 4.0)); };
    std::vector<MatrixXd> w{MatrixXd::Ones(2, 3)};
    CHECK(grad(f, std::span<const MatrixXd>(w))[0].isZero());
  }
  SUBCASE("non-scalar loss is a usage error") {
    LossFn<double> f = [](Tape&, std::span<const Var> p) { return p[0]; };
    std::vector<MatrixXd> w{MatrixXd::Ones(2, 1)};
    CHECK_THROWS_AS(grad(f, std::span<const MatrixXd>(w)), UsageError);
  }
  SUBCASE("linear layer cross-entropy against central differences") {
    Rng rng(17);
    const MatrixXd x = random_matrix(rng, 5, 1);
    LossFn<double> f = [x](Tape& t, std::span<const Var> p) {
      return softmax_cross_entropy(affine(p[0], t.constant(x), p[1]), 2);
    };
    std::vector<MatrixXd> params{random_matrix(rng, 4, 5), random_matrix(rng, 4, 1)};
    const auto g = grad(f, std::span<const MatrixXd>(params));
    const double eps = 1e-5;
    for (std::size_t k = 0; k < params.size(); ++k) {
      for (Eigen::Index i = 0; i < params[k].size(); ++i) {
        auto probe = params;
        probe[k].data()[i] += eps;
        const double up = evaluate(f, std::span<const MatrixXd>(probe));
        probe[k].data()[i] -= 2 * eps;
        const double down = evaluate(f, std::span<const MatrixXd>(probe));
        const double numeric = (up - down) / (2 * eps);
        const double analytic = g[k].data()[i];
        CHECK(std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-3) < 1e-6);
      }
    }
  }
}

TEST_CASE("finite_diff_check") {
  Rng rng(23);
  SUBCASE("quadratic") {
    const MatrixXd c = random_matrix(rng, 4, 1);
    LossFn<double> f = [c](Tape& t, std::span<const Var> p) {
      const Var d = p[0] - t.constant(c);
      return sum(hadamard(d, d)) + sum(matmul(p[1], p[0]));
    };
    std::vector<MatrixXd> q{random_matrix(rng, 4, 1), random_matrix(rng, 1, 4)};
    CHECK(finite_diff_check(f, std::span<const MatrixXd>(q), 1e-5) < 1e-8);
  }
  SUBCASE("two-layer net with cross-entropy") {
    const MatrixXd x = random_matrix(rng, 6, 3);
    LossFn<double> f = [x](Tape& t, std::span<const Var> p) {
      const Mlp2Vars<double> net{p[0], p[1], p[2], p[3], Activation::relu};
      return softmax_cross_entropy(mlp2(net, t.constant(x)), 2);
    };
    // Central differences straddling a ReLU kink are meaningless; resample until
    // every hidden pre-activation is clear of zero by more than the step.
    Mlp2 init = make_mlp2(rng, 6, 10, 1);
    auto pre = [&] { return ((init.w1 * x).colwise() + init.b1).cwiseAbs().minCoeff(); };
    while (pre() < 1e-2) init = make_mlp2(rng, 6, 10, 1);
    std::vector<MatrixXd> params{init.w1, init.b1, init.w2, init.b2};
    CHECK(finite_diff_check(f, std::span<const MatrixXd>(params), 1e-3) < 1e-4);
  }
  SUBCASE("recurrent cell unrolled five steps") {
    const MatrixXd xs = random_matrix(rng, 3, 5);
    LossFn<double> f = [xs](Tape& t, std::span<const Var> p) {
      const RnnVars<double> cell{p[0], p[1], p[2]};
      Var h = t.constant(MatrixXd::Zero(6, 1));
      for (int s = 0; s < 5; ++s) h = rnn_step(cell, h, t.constant(xs.col(s)));
      return softmax_cross_entropy(matmul(p[3], h), 1);
    };
    const Rnn init = make_rnn(rng, 3, 6);
    std::vector<MatrixXd> params{init.w_in, init.w_h, init.b, random_matrix(rng, 4, 6)};
    CHECK(finite_diff_check(f, std::span<const MatrixXd>(params), 1e-3) < 1e-4);
  }
  SUBCASE("non-positive step is rejected") {
    LossFn<double> f = [](Tape&, std::span<const Var> p) { return sum(p[0]); };
    std::vector<MatrixXd> w{MatrixXd::Ones(1, 1)};
    CHECK_THROWS_AS(finite_diff_check(f, std::span<const MatrixXd>(w), 0.0), UsageError);
  }
}

TEST_CASE("tape operations agree with finite differences on random small instances") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> dim(2, 8);
    const int n = dim(rng), c = dim(rng);
    const std::vector<Eigen::Index> ids{0, 2, 1, 2};
    LossFn<double> f = [n, c, ids](Tape& t, std::span<const Var> p) {
      const Var table = p[0];                       // 3 x n
      const Var cols = gather_rows(table, ids);     // n x 4
      const Var v = p[1];                           // n x 1
      const Var stacked = concat_rows<double>({cols, repeat_cols(v, 4)});
      const Var d = cosine_distance_cols(select_cols(stacked, {0, 1, 3}), concat_rows<double>({v, v}));
      const Var hinge = relu(0.5 - d);
      (void)c;
      return sum(hinge) + entry(d, 0, 1) + 0.3 * sum(tanh(p[2]));
    };
    std::vector<MatrixXd> params{random_matrix(rng, 3, n), random_matrix(rng, n, 1), random_matrix(rng, c, 2)};
    CHECK(finite_diff_check(f, std::span<const MatrixXd>(params), 1e-6) < 1e-4);
  }
}

TEST_CASE("column-wise cross-entropy and reshape") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> dim(1, 6);
    const int k = dim(rng), n = dim(rng);
    std::vector<Eigen::Index> targets;
    for (int j = 0; j < n; ++j) targets.push_back(static_cast<Eigen::Index>(rng() % static_cast<unsigned>(k)));
    const MatrixXd z = random_matrix(rng, k, n, 3.0);

    Tape t;
    const double got = softmax_cross_entropy_cols(t.constant(z), targets).value()(0, 0);
    double want = 0;
    for (int j = 0; j < n; ++j) want += softmax_cross_entropy(VectorXd(z.col(j)), targets[j]).loss;
    CHECK(got == doctest::Approx(want).epsilon(1e-12));

    // Row vector in, k x n logits out: the layout the tracker uses.
    LossFn<double> f = [k, n, targets](Tape&, std::span<const Var> p) {
      return softmax_cross_entropy_cols(reshape(tanh(p[0]), k, n), targets);
    };
    std::vector<MatrixXd> params{random_matrix(rng, 1, k * n)};
    CHECK(finite_diff_check(f, std::span<const MatrixXd>(params), 1e-6) < 1e-6);
  }
  Tape t;
  const Var v = t.constant(MatrixXd::Zero(2, 3));
  CHECK(reshape(v, 3, 2).rows() == 3);
  CHECK_THROWS_AS(reshape(v, 4, 2), ShapeError);
  CHECK_THROWS_AS(softmax_cross_entropy_cols(v, {0, 1}), ShapeError);
  CHECK_THROWS_AS(softmax_cross_entropy_cols(v, {0, 1, 2}), IndexError);
}

TEST_CASE("reference leaves read in place") {
  Rng rng(3);
  MatrixXd w = random_matrix(rng, 3, 4);
  const MatrixXd x = random_matrix(rng, 4, 2);
  Tape t;
  const Var wv = t.variable_ref(w);
  CHECK(&wv.value() == &w);
  const Var loss = sum(matmul(wv, t.constant(x)));
  t.backward(loss);
  Tape u;
  const Var wc = u.variable(w);
  u.backward(sum(matmul(wc, u.constant(x))));
  CHECK(wv.grad() == wc.grad());
  w(0, 0) = std::numeric_limits<double>::infinity();
  Tape bad;
  CHECK_THROWS_AS(bad.constant_ref(w), DomainError);
}

TEST_CASE("forward operations are bitwise deterministic") {
  Rng a(99), b(99);
  const Mlp2 p1 = make_mlp2(a, 5, 7, 2);
  const Mlp2 p2 = make_mlp2(b, 5, 7, 2);
  const MatrixXd x = MatrixXd::Constant(5, 3, 0.7);
  CHECK(mlp2_forward(p1, x) == mlp2_forward(p2, x));
}
