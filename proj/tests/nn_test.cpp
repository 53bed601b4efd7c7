/*
 * Copyright 2026 The mtuplift Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "common/errors.hpp"
#include "nn/optim.hpp"
#include "nn/tape.hpp"
#include "oracles.hpp"

namespace mtu::nn {
namespace {

Matrix mat(Eigen::Index rows, Eigen::Index cols, std::initializer_list<double> v) {
  Matrix m(rows, cols);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

TEST(DenseTest, IdentityLinear) {
  ParamStore ps;
  ps.add("W", 2, 2).value = Matrix::Identity(2, 2);
  ps.add("b", 1, 2).value.setZero();
  Tape tape;
  const Var y = tape.dense_forward(tape.constant(mat(1, 2, {1, 1})), ps.at("W"), ps.at("b"),
                                   Activation::kLinear);
  EXPECT_DOUBLE_EQ(tape.value(y)(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(tape.value(y)(0, 1), 1.0);
}

TEST(DenseTest, ReluClampsNegative) {
  ParamStore ps;
  ps.add("W", 1, 1).value(0, 0) = 1.0;
  ps.add("b", 1, 1).value(0, 0) = 0.0;
  Tape tape;
  const Var y = tape.dense_forward(tape.constant(mat(1, 1, {-3})), ps.at("W"), ps.at("b"),
                                   Activation::kRelu);
  EXPECT_EQ(tape.value(y)(0, 0), 0.0);
}

TEST(DenseTest, HandArithmetic) {
  ParamStore ps;
  ps.add("W", 1, 2).value = mat(1, 2, {1, 1});
  ps.add("b", 1, 1).value(0, 0) = 0.5;
  Tape tape;
  const Var y = tape.dense_forward(tape.constant(mat(1, 2, {1, 2})), ps.at("W"), ps.at("b"),
                                   Activation::kLinear);
  EXPECT_DOUBLE_EQ(tape.value(y)(0, 0), 3.5);
}

TEST(DenseTest, ShapeMismatchThrows) {
  ParamStore ps;
  ps.add("W", 1, 3);
  ps.add("b", 1, 1);
  Tape tape;
  EXPECT_THROW(tape.dense(tape.constant(mat(1, 2, {1, 2})), ps.at("W"), ps.at("b")),
               DimensionError);
}

TEST(SoftmaxTest, Examples) {
  const std::vector<double> zero = {0, 0};
  const Vector a = softmax(zero);
  EXPECT_NEAR(a[0], 0.5, 1e-15);
  EXPECT_NEAR(a[1], 0.5, 1e-15);
  for (double c : {-50.0, 0.0, 3.0, 700.0}) {
    const std::vector<double> v = {c, c, c};
    const Vector s = softmax(v);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(s[i], 1.0 / 3.0, 1e-15);
  }
  const std::vector<double> v = {1, 2};
  const Vector s = softmax(v);
  // 1 / (1 + e) and e / (1 + e).
  EXPECT_NEAR(s[0], 0.2689414213699951, 1e-12);
  EXPECT_NEAR(s[1], 0.7310585786300049, 1e-12);
}

TEST(SoftmaxTest, EmptyThrows) {
  EXPECT_THROW(softmax(std::vector<double>{}), DimensionError);
}

TEST(SoftmaxTest, PropertySumAndShift) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 5.0);
  std::uniform_int_distribution<int> len(1, 12);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (double& x : v) x = n(rng);
    const double shift = n(rng) * 10;
    std::vector<double> w = v;
    for (double& x : w) x += shift;
    const Vector a = softmax(v);
    const Vector b = softmax(w);
    EXPECT_LT(std::abs(a.sum() - 1.0), 1e-9);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      EXPECT_GT(a[i], 0.0);
      EXPECT_NEAR(a[i], b[i], 1e-12);
    }
  }
}

TEST(KlTest, Examples) {
  const std::vector<double> half = {0.5, 0.5};
  const std::vector<double> one = {1.0, 0.0};
  EXPECT_EQ(kl_divergence(half, half), 0.0);
  EXPECT_NEAR(kl_divergence(one, half), std::log(2.0), 1e-15);
  // q floored to [1, 1e-8] and renormalized.
  const double q1 = 1.0 / (1.0 + 1e-8);
  const double q2 = 1e-8 / (1.0 + 1e-8);
  const double expected = 0.5 * std::log(0.5 / q1) + 0.5 * std::log(0.5 / q2);
  const double got = kl_divergence(half, one);
  EXPECT_TRUE(std::isfinite(got));
  EXPECT_NEAR(got, expected, 1e-12);
}

TEST(KlTest, Errors) {
  const std::vector<double> a = {0.5, 0.5};
  const std::vector<double> b = {0.2, 0.3, 0.5};
  const std::vector<double> bad = {0.5, 0.6};
  EXPECT_THROW(kl_divergence(a, b), DimensionError);
  EXPECT_THROW(kl_divergence(bad, a), DimensionError);
}

TEST(KlTest, NonNegativeAndAsymmetric) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  bool asymmetric = false;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> lp(4), lq(4);
    for (auto& x : lp) x = n(rng);
    for (auto& x : lq) x = n(rng);
    const Vector p = softmax(lp);
    const Vector q = softmax(lq);
    const std::vector<double> pv(p.data(), p.data() + 4), qv(q.data(), q.data() + 4);
    const double pq = kl_divergence(pv, qv);
    EXPECT_GE(pq, 0.0);
    EXPECT_EQ(kl_divergence(pv, pv), 0.0);
    if (std::abs(pq - kl_divergence(qv, pv)) > 1e-6) asymmetric = true;
  }
  EXPECT_TRUE(asymmetric);
}

TEST(MseTest, Examples) {
  const std::vector<double> a = {0, 1};
  const std::vector<double> b = {1, 1};
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mse(a, b), 0.5);
  EXPECT_THROW(mse(a, std::vector<double>{1.0}), DimensionError);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(6), y(6);
    for (auto& v : x) v = n(rng);
    for (auto& v : y) v = n(rng);
    EXPECT_DOUBLE_EQ(mse(x, y), mse(y, x));
  }
}

TEST(BackwardTest, EmptyTapeThrows) {
  Tape tape;
  EXPECT_THROW(tape.backward(Var{0}), StateError);
}

TEST(BackwardTest, ConstantLossHasZeroGradients) {
  ParamStore ps;
  std::mt19937_64 rng(1);
  ParamStore::init_dense(ps.add("W", 3, 2), 2, rng);
  Tape tape;
  const Var loss = tape.sum_squared_error(tape.constant(mat(1, 1, {2.0})), mat(1, 1, {1.0}));
  const Gradients g = tape.backward(loss);
  const Matrix* gw = g.find(ps.at("W"));
  EXPECT_TRUE(gw == nullptr || gw->isZero(0.0));
}

// Finite-difference agreement for every primitive.
class OpGradientTest : public ::testing::Test {
 protected:
  void expect_gradients(ParamStore& ps, const std::function<Var(Tape&)>& build) {
    std::mt19937_64 rng(99);
    const auto report = mtu::testing::grad_check(ps, build, rng, 64);
    EXPECT_LT(report.max_rel_error, 1e-6) << report.worst;
    EXPECT_GT(report.checked, 0u);
  }
  std::mt19937_64 rng_{5};
};

TEST_F(OpGradientTest, DenseSigmoidMse) {
  ParamStore ps;
  ps.add("W", 3, 4).value = random_matrix(3, 4, rng_);
  ps.add("b", 1, 3).value = random_matrix(1, 3, rng_);
  const Matrix x = random_matrix(5, 4, rng_);
  const Matrix target = random_matrix(5, 3, rng_);
  expect_gradients(ps, [&](Tape& t) {
    return t.mean_squared_error(
        t.dense_forward(t.constant(x), ps.at("W"), ps.at("b"), Activation::kSigmoid), target);
  });
}

TEST_F(OpGradientTest, ReluAwayFromKink) {
  ParamStore ps;
  ps.add("W", 4, 3).value = random_matrix(4, 3, rng_);
  ps.add("b", 1, 4).value = random_matrix(1, 4, rng_);
  const Matrix x = random_matrix(6, 3, rng_);
  const Matrix target = random_matrix(6, 4, rng_);
  expect_gradients(ps, [&](Tape& t) {
    return t.sum_squared_error(
        t.dense_forward(t.constant(x), ps.at("W"), ps.at("b"), Activation::kRelu), target);
  });
}

TEST_F(OpGradientTest, SoftmaxRowsAndScale) {
  ParamStore ps;
  ps.add("L", 4, 5).value = random_matrix(4, 5, rng_);
  const Matrix target = random_matrix(4, 5, rng_);
  const std::vector<std::int32_t> rows = {0, 1, 2, 3};
  expect_gradients(ps, [&](Tape& t) {
    const Var p = t.softmax_rows(t.embedding(ps.at("L"), rows, "L"));
    return t.sum_squared_error(t.scale(p, 3.0), target);
  });
}

TEST_F(OpGradientTest, EmbeddingRepeatsAccumulate) {
  ParamStore ps;
  ps.add("E", 5, 3).value = random_matrix(5, 3, rng_);
  const Matrix target = random_matrix(4, 3, rng_);
  const std::vector<std::int32_t> ids = {1, 3, 1, 4};
  expect_gradients(ps, [&](Tape& t) {
    return t.sum_squared_error(t.embedding(ps.at("E"), ids, "f"), target);
  });
}

TEST_F(OpGradientTest, MeanPool) {
  ParamStore ps;
  ps.add("E", 6, 3).value = random_matrix(6, 3, rng_);
  const Matrix target = random_matrix(3, 3, rng_);
  const std::vector<std::vector<std::int32_t>> lists = {{0, 1}, {2, 2, 5}, {4}};
  expect_gradients(ps, [&](Tape& t) {
    return t.sum_squared_error(t.mean_pool(ps.at("E"), lists, "g"), target);
  });
}

TEST_F(OpGradientTest, WeightedSumConcatAdd) {
  ParamStore ps;
  ps.add("A", 3, 2).value = random_matrix(3, 2, rng_);
  ps.add("X", 3, 4).value = random_matrix(3, 4, rng_);
  ps.add("Y", 3, 4).value = random_matrix(3, 4, rng_);
  const Matrix target = random_matrix(3, 8, rng_);
  const std::vector<std::int32_t> rows = {0, 1, 2};
  expect_gradients(ps, [&](Tape& t) {
    const Var a = t.softmax_rows(t.embedding(ps.at("A"), rows, "A"));
    const Var x = t.embedding(ps.at("X"), rows, "X");
    const Var y = t.embedding(ps.at("Y"), rows, "Y");
    const std::vector<Var> items = {x, y};
    const Var mixed = t.weighted_sum(a, items);
    return t.sum_squared_error(t.concat_cols(mixed, t.add(x, y)), target);
  });
}

TEST_F(OpGradientTest, KlRowsBothArguments) {
  ParamStore ps;
  ps.add("P", 4, 3).value = random_matrix(4, 3, rng_);
  ps.add("Q", 4, 3).value = random_matrix(4, 3, rng_);
  const std::vector<std::int32_t> rows = {0, 1, 2, 3};
  expect_gradients(ps, [&](Tape& t) {
    return t.kl_rows(t.softmax_rows(t.embedding(ps.at("P"), rows, "P")),
                     t.softmax_rows(t.embedding(ps.at("Q"), rows, "Q")));
  });
}

TEST_F(OpGradientTest, KlRowsWithFlooredReference) {
  ParamStore ps;
  ps.add("P", 2, 3).value = random_matrix(2, 3, rng_);
  ps.add("Q", 2, 3).value = mat(2, 3, {0.3, -45.0, 0.1, 1.0, 0.5, -50.0});
  const std::vector<std::int32_t> rows = {0, 1};
  expect_gradients(ps, [&](Tape& t) {
    return t.kl_rows(t.softmax_rows(t.embedding(ps.at("P"), rows, "P")),
                     t.softmax_rows(t.embedding(ps.at("Q"), rows, "Q")));
  });
}

TEST(StopGradientTest, BlocksFlow) {
  ParamStore ps;
  ps.add("E", 2, 2).value = mat(2, 2, {1, 2, 3, 4});
  Tape tape;
  const Var e = tape.embedding(ps.at("E"), std::vector<std::int32_t>{0, 1}, "E");
  const Var loss = tape.sum_squared_error(tape.stop_gradient(e), Matrix::Zero(2, 2));
  const Gradients g = tape.backward(loss);
  const Matrix* ge = g.find(ps.at("E"));
  EXPECT_TRUE(ge == nullptr || ge->isZero(0.0));
}

TEST(AdamTest, ZeroGradientIsIdentity) {
  ParamStore ps;
  std::mt19937_64 rng(2);
  ParamStore::init_dense(ps.add("W", 3, 3), 3, rng);
  const Matrix before = ps.at("W").value;
  Adam adam(ps, AdamConfig{});
  for (int i = 0; i < 5; ++i) {
    ps.zero_grad();
    adam.step();
  }
  EXPECT_EQ(ps.at("W").value, before);
}

TEST(AdamTest, FirstStepMagnitude) {
  ParamStore ps;
  ps.add("x", 1, 1).value(0, 0) = 1.0;
  Adam adam(ps, AdamConfig{});
  EXPECT_DOUBLE_EQ(adam.learning_rate(), 0.001);
  ps.at("x").grad(0, 0) = 1.0;
  adam.step();
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
  EXPECT_NEAR(ps.at("x").value(0, 0), 1.0 - 0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(adam.state().step, 1);
}

TEST(AdamTest, NonFiniteGradientNamesParameter) {
  ParamStore ps;
  ps.add("alpha", 1, 2);
  ps.add("beta", 1, 1);
  Adam adam(ps, AdamConfig{});
  ps.at("beta").grad(0, 0) = std::nan("");
  try {
    adam.step();
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
}

TEST(PlateauTest, Examples) {
  PlateauSchedule improving(1.0);
  for (double l : {1.0, 0.9, 0.8}) improving.update(l);
  EXPECT_DOUBLE_EQ(improving.learning_rate(), 1.0);

  PlateauSchedule worse(1.0);
  EXPECT_DOUBLE_EQ(worse.update(1.0), 1.0);
  EXPECT_DOUBLE_EQ(worse.update(1.1), 1.0);
  EXPECT_DOUBLE_EQ(worse.update(1.2), 0.6);

  PlateauSchedule mixed(1.0);
  for (double l : {1.0, 1.1, 0.9, 1.0, 1.1}) mixed.update(l);
  EXPECT_EQ(mixed.reductions(), 1);
  EXPECT_DOUBLE_EQ(mixed.learning_rate(), 0.6);
}

TEST(PlateauTest, NonIncreasingByExactFactor) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PlateauSchedule s(0.001);
  double lr = s.learning_rate();
  for (int epoch = 0; epoch < 200; ++epoch) {
    const double next = s.update(u(rng));
    EXPECT_TRUE(next == lr || next == lr * 0.6);
    lr = next;
  }
}

}  // namespace
}  // namespace mtu::nn
