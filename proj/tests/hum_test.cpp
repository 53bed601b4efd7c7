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
#include <filesystem>
#include <numeric>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "common/errors.hpp"
#include "hum/model.hpp"
#include "hum/train.hpp"
#include "oracles.hpp"

namespace mtu::hum {
namespace {

using nn::Matrix;
using Vec = Eigen::VectorXd;

data::DatasetSchema small_schema(int num_features, int K, int cardinality = 5) {
  data::DatasetSchema s;
  for (int f = 0; f < num_features; ++f) {
    data::FeatureSpec spec;
    spec.name = "f" + std::to_string(f);
    spec.kind = data::FeatureKind::kCategorical;
    spec.cardinality = cardinality;
    s.features.push_back(spec);
  }
  s.num_treatments = K;
  s.responses = {"y"};
  return s;
}

HumConfig small_config(int d = 4, int M = 2) {
  HumConfig c;
  c.embedding_dim = d;
  c.num_experts = M;
  c.expert_hidden = 6;
  c.expert_output = 5;
  c.tower_hidden = 4;
  c.embedding_init_sd = 0.5;
  c.seed = 3;
  return c;
}

Batch random_batch(const data::DatasetSchema& s, std::size_t n, std::mt19937_64& rng) {
  Batch b;
  std::uniform_int_distribution<int> arm(0, s.num_treatments);
  std::normal_distribution<double> y(1.0, 1.0);
  b.ids.assign(s.features.size(), std::vector<std::int32_t>(n));
  for (std::size_t f = 0; f < s.features.size(); ++f) {
    std::uniform_int_distribution<int> id(0, s.features[f].cardinality - 1);
    for (auto& v : b.ids[f]) v = id(rng);
  }
  for (std::size_t i = 0; i < n; ++i) {
    b.treatments.push_back(arm(rng));
    b.labels.push_back(y(rng));
  }
  return b;
}

// Plain per-instance re-derivation of the forward pass, straight from the
// parameter tensors.
struct Reference {
  const HumModel& m;

  const Matrix& P(const std::string& name) const { return m.params().at(name).value; }
  Vec dense(const std::string& name, const Vec& x) const {
    return P(name + "/W") * x + P(name + "/b").transpose();
  }
  static Vec relu(Vec v) { return v.cwiseMax(0.0); }
  static Vec softmax(const Vec& v) {
    Vec e = (v.array() - v.maxCoeff()).exp();
    return e / e.sum();
  }

  struct Out {
    Vec attention;
    Vec gate;
    double y;
  };

  Out forward(const std::vector<std::int32_t>& x, int k, int t, bool treated_tower) const {
    const std::string b = "branch" + std::to_string(k) + "/";
    const Vec et = P("embed/t").row(t).transpose();
    Out o;
    o.attention = softmax(dense(b + "attention", et));
    Vec sel = Vec::Zero(et.size());
    for (std::size_t f = 0; f < x.size(); ++f) {
      sel += o.attention[static_cast<Eigen::Index>(f)] *
             P("embed/x/" + m.schema().features[f].name).row(x[f]).transpose();
    }
    Vec fused(2 * et.size());
    fused << sel, et;
    o.gate = softmax(dense(b + "gate", fused));
    Vec mix;
    for (int e = 0; e < m.config().num_experts; ++e) {
      const std::string en = b + "expert" + std::to_string(e);
      const Vec h = relu(dense(en + "/output", relu(dense(en + "/hidden", fused))));
      mix = e == 0 ? Vec(o.gate[0] * h) : Vec(mix + o.gate[e] * h);
    }
    const std::string tower = b + (treated_tower ? "tower_treated" : "tower_control");
    o.y = dense(tower + "/output", relu(dense(tower + "/hidden", mix)))[0];
    return o;
  }
};

double kl(const Vec& p, const Vec& q) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) s += p[j] * std::log(p[j] / q[j]);
  return s;
}

TEST(FeatureSelectTest, SingleFeatureGetsAllAttention) {
  const HumModel model(small_schema(1, 2), 0, small_config());
  Batch b;
  b.ids = {{3, 1}};
  b.treatments = {1, 0};
  b.labels = {0, 0};
  nn::Tape tape;
  const std::vector<std::size_t> rows = {0, 1};
  const auto features = model.embed_features(tape, b, rows);
  nn::Var attention{};
  const nn::Var sel =
      model.feature_select(tape, features, model.embed_treatment(tape, 1, 2), 1, &attention);
  EXPECT_DOUBLE_EQ(tape.value(attention)(0, 0), 1.0);
  EXPECT_EQ(tape.value(sel), tape.value(features[0]));
}

TEST(FeatureSelectTest, HandComputedTwoFeatures) {
  HumConfig cfg = small_config(2);
  HumModel model(small_schema(2, 1), 0, cfg);
  auto& ps = model.params();
  ps.at("embed/t").value << 0, 0, 1, 2;  // e_t(1) = [1, 2]
  ps.at("embed/x/f0").value.setZero();
  ps.at("embed/x/f1").value.setZero();
  ps.at("embed/x/f0").value.row(0) << 1, 0;
  ps.at("embed/x/f1").value.row(0) << 0, 3;
  ps.at("branch1/attention/W").value << 1, 0, 0, 1;
  ps.at("branch1/attention/b").value << 0, -1;
  // logits = [1, 2 - 1] = [1, 1] -> attention [0.5, 0.5] -> [0.5, 1.5]
  Batch b;
  b.ids = {{0}, {0}};
  b.treatments = {1};
  b.labels = {0};
  nn::Tape tape;
  const std::vector<std::size_t> rows = {0};
  const auto features = model.embed_features(tape, b, rows);
  nn::Var attention{};
  const nn::Var sel =
      model.feature_select(tape, features, model.embed_treatment(tape, 1, 1), 1, &attention);
  EXPECT_DOUBLE_EQ(tape.value(attention)(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(tape.value(attention)(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(tape.value(sel)(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(tape.value(sel)(0, 1), 1.5);
}

TEST(FeatureSelectTest, BranchOutsideRangeThrows) {
  const HumModel model(small_schema(2, 2), 0, small_config());
  Batch b;
  b.ids = {{0}, {0}};
  b.treatments = {0};
  b.labels = {0};
  nn::Tape tape;
  const std::vector<std::size_t> rows = {0};
  const auto features = model.embed_features(tape, b, rows);
  const nn::Var et = model.embed_treatment(tape, 0, 1);
  EXPECT_THROW(model.feature_select(tape, features, et, 0, nullptr), UsageError);
  EXPECT_THROW(model.feature_select(tape, features, et, 3, nullptr), UsageError);
}

TEST(FuseTest, ConcatenatesSelectedFirst) {
  nn::Tape tape;
  Matrix a(1, 2), c(1, 2);
  a << 1, 2;
  c << 3, 4;
  const Matrix& f = tape.value(HumModel::fuse(tape, tape.constant(a), tape.constant(c)));
  ASSERT_EQ(f.cols(), 4);
  EXPECT_EQ(f(0, 0), 1);
  EXPECT_EQ(f(0, 1), 2);
  EXPECT_EQ(f(0, 2), 3);
  EXPECT_EQ(f(0, 3), 4);
  const Matrix& z = tape.value(HumModel::fuse(tape, tape.constant(a), tape.constant(Matrix::Zero(1, 2))));
  EXPECT_EQ(z(0, 2), 0);
  EXPECT_EQ(z(0, 3), 0);
}

TEST(BranchForwardTest, SingleExpertGateIsOne) {
  const HumModel model(small_schema(2, 2), 0, small_config(4, 1));
  std::mt19937_64 rng(1);
  const Batch b = random_batch(model.schema(), 6, rng);
  nn::Tape tape;
  std::vector<std::size_t> rows(6);
  std::iota(rows.begin(), rows.end(), 0);
  const auto features = model.embed_features(tape, b, rows);
  const BranchPass pass = model.forward(tape, features, 2, 0);
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(tape.value(pass.gate)(i, 0), 1.0);
}

TEST(BranchForwardTest, GateSumsToOneAndIdenticalExpertsIgnoreGate) {
  HumModel model(small_schema(3, 2), 0, small_config(4, 3));
  auto& ps = model.params();
  for (const char* layer : {"hidden", "output"}) {
    for (const char* part : {"W", "b"}) {
      const std::string src = std::string("branch1/expert0/") + layer + "/" + part;
      for (int e = 1; e < 3; ++e) {
        ps.at("branch1/expert" + std::to_string(e) + "/" + layer + "/" + part).value =
            ps.at(src).value;
      }
    }
  }
  std::mt19937_64 rng(4);
  const Batch b = random_batch(model.schema(), 8, rng);
  std::vector<std::size_t> rows(8);
  std::iota(rows.begin(), rows.end(), 0);
  auto predict = [&] {
    nn::Tape tape;
    const auto features = model.embed_features(tape, b, rows);
    const BranchPass pass = model.forward(tape, features, 1, 1);
    const Matrix& g = tape.value(pass.gate);
    for (Eigen::Index i = 0; i < g.rows(); ++i) EXPECT_NEAR(g.row(i).sum(), 1.0, 1e-12);
    return Matrix(tape.value(pass.prediction));
  };
  const Matrix before = predict();
  std::normal_distribution<double> n(0.0, 2.0);
  for (Eigen::Index i = 0; i < ps.at("branch1/gate/W").size(); ++i) {
    ps.at("branch1/gate/W").value.data()[i] = n(rng);
  }
  const Matrix after = predict();
  EXPECT_TRUE(before.isApprox(after, 1e-12));
}

TEST(BranchForwardTest, MatchesReferenceForward) {
  const HumModel model(small_schema(3, 2), 0, small_config());
  std::mt19937_64 rng(8);
  const Batch b = random_batch(model.schema(), 10, rng);
  std::vector<std::size_t> rows(10);
  std::iota(rows.begin(), rows.end(), 0);
  const Reference ref{model};
  nn::Tape tape;
  const auto features = model.embed_features(tape, b, rows);
  for (int k = 1; k <= 2; ++k) {
    for (int t : {0, k}) {
      const BranchPass pass = model.forward(tape, features, k, t);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<std::int32_t> x;
        for (const auto& col : b.ids) x.push_back(col[i]);
        const auto o = ref.forward(x, k, t, t != 0);
        EXPECT_NEAR(tape.value(pass.prediction)(static_cast<Eigen::Index>(i), 0), o.y, 1e-12);
      }
    }
  }
}

TEST(HumLossTest, SingleTreatmentControlIsPlainMse) {
  HumConfig cfg = small_config();
  cfg.lambda_kl = 5.0;
  const HumModel model(small_schema(2, 1), 0, cfg);
  Batch b;
  b.ids = {{1, 2}, {0, 4}};
  b.treatments = {0, 0};
  b.labels = {0.5, -1.0};
  nn::Tape tape;
  const double loss = tape.scalar(hum_loss(tape, model, b));
  const Reference ref{model};
  double expected = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const double y = ref.forward({b.ids[0][i], b.ids[1][i]}, 1, 0, false).y;
    expected += (b.labels[i] - y) * (b.labels[i] - y);
  }
  EXPECT_NEAR(loss, expected / 2.0, 1e-12);
}

TEST(HumLossTest, HandExpandedTwoInstanceBatch) {
  HumConfig cfg = small_config();
  cfg.lambda_kl = 0.7;
  const HumModel model(small_schema(2, 2), 0, cfg);
  Batch b;
  b.ids = {{1, 3}, {2, 0}};
  b.treatments = {1, 0};
  b.labels = {1.5, -0.25};
  nn::Tape tape;
  const double loss = tape.scalar(hum_loss(tape, model, b));

  const Reference ref{model};
  const std::vector<std::int32_t> x1 = {1, 2}, x2 = {3, 0};
  const double treated = ref.forward(x1, 1, 1, true).y;
  const auto c1 = ref.forward(x2, 1, 0, false);
  const auto c2 = ref.forward(x2, 2, 0, false);
  const Vec mean = (c1.gate + c2.gate) / 2.0;
  const double expected =
      (std::pow(1.5 - treated, 2) + std::pow(-0.25 - c1.y, 2) + std::pow(-0.25 - c2.y, 2) +
       0.7 * (kl(c1.gate, mean) + kl(c2.gate, mean))) /
      2.0;
  EXPECT_NEAR(loss, expected, 1e-12);
}

TEST(HumLossTest, EmptyBatchThrows) {
  const HumModel model(small_schema(2, 2), 0, small_config());
  Batch b;
  b.ids = {{}, {}};
  nn::Tape tape;
  EXPECT_THROW(hum_loss(tape, model, b), DataError);
}

TEST(HumLossTest, MaskedTowersGetExactlyZeroGradient) {
  const HumModel model(small_schema(3, 2), 0, small_config());
  std::mt19937_64 rng(6);
  Batch b = random_batch(model.schema(), 12, rng);
  for (auto& t : b.treatments) t = 1;
  nn::Tape tape;
  const nn::Gradients g = tape.backward(hum_loss(tape, model, b));
  const auto& ps = model.params();
  std::size_t masked = 0;
  for (std::size_t p = 0; p < ps.size(); ++p) {
    const std::string& name = ps[p].name;
    const bool other_branch = name.rfind("branch2/", 0) == 0;
    const bool control_tower = name.find("tower_control") != std::string::npos;
    if (!other_branch && !control_tower) continue;
    ++masked;
    const Matrix* gp = g.find(ps[p]);
    EXPECT_TRUE(gp == nullptr || gp->isZero(0.0)) << name;
  }
  EXPECT_GT(masked, 0u);

  // Perturbing another branch leaves the loss unchanged.
  HumModel other = model;
  for (std::size_t p = 0; p < other.params().size(); ++p) {
    if (other.params()[p].name.rfind("branch2/", 0) == 0) other.params()[p].value.array() += 0.3;
  }
  nn::Tape t1, t2;
  EXPECT_EQ(t1.scalar(hum_loss(t1, model, b)), t2.scalar(hum_loss(t2, other, b)));
}

TEST(HumLossTest, KlTermNonNegative) {
  HumConfig with = small_config();
  HumConfig without = small_config();
  without.lambda_kl = 0.0;
  const HumModel a(small_schema(3, 3), 0, with);
  const HumModel b(small_schema(3, 3), 0, without);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Batch batch = random_batch(a.schema(), 16, rng);
    nn::Tape t1, t2;
    EXPECT_GE(t1.scalar(hum_loss(t1, a, batch)), t2.scalar(hum_loss(t2, b, batch)));
  }
}

class HumGradientTest : public ::testing::TestWithParam<bool> {};

TEST_P(HumGradientTest, FiniteDifferencesOnFullLoss) {
  HumConfig cfg = small_config(4, 3);
  cfg.kl_stop_gradient = GetParam();
  HumModel model(small_schema(3, 2), 0, cfg);
  std::mt19937_64 rng(21);
  const Batch b = random_batch(model.schema(), 32, rng);
  const auto report = mtu::testing::grad_check(
      model.params(), [&](nn::Tape& t) { return hum_loss(t, model, b); }, rng, 24, 1e-6);
  EXPECT_LT(report.max_rel_error, 1e-3) << report.worst;
  EXPECT_EQ(report.tensors, model.params().size());
}

INSTANTIATE_TEST_SUITE_P(KlTarget, HumGradientTest, ::testing::Values(false, true));

TEST(ConfigTest, Defaults) {
  const HumConfig c;
  EXPECT_EQ(c.embedding_dim, 32);
  EXPECT_EQ(c.batch_size, 4096);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.001);
  EXPECT_DOUBLE_EQ(c.lr_factor, 0.6);
  EXPECT_EQ(c.lr_patience, 2);
  EXPECT_EQ(c.num_experts, 4);
  EXPECT_DOUBLE_EQ(c.lambda_kl, 1.0);
  EXPECT_FALSE(c.kl_stop_gradient);
  const HumConfig back = hum_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(hum_config_from_json({{"lr_factor", 1.5}}), UsageError);
}

class TrainTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fixture_ = new mtu::testing::SyntheticFixture(mtu::testing::synthetic_fixture(1000, 2));
  }
  static void TearDownTestSuite() { delete fixture_; }
  static HumConfig config() {
    HumConfig c;
    c.embedding_dim = 8;
    c.expert_hidden = 16;
    c.expert_output = 8;
    c.tower_hidden = 8;
    c.batch_size = 64;
    c.max_epochs = 5;
    c.seed = 4;
    return c;
  }
  static mtu::testing::SyntheticFixture* fixture_;
};
mtu::testing::SyntheticFixture* TrainTest::fixture_ = nullptr;

TEST_F(TrainTest, LossDecreasesOverFirstFiveEpochs) {
  const TrainResult r = train(fixture_->dataset, {}, 0, config());
  ASSERT_EQ(r.history.size(), 5u);
  for (std::size_t e = 1; e < r.history.size(); ++e) {
    EXPECT_LT(r.history[e].train_loss, r.history[e - 1].train_loss);
  }
}

TEST_F(TrainTest, DeterministicPerSeed) {
  const TrainResult a = train(fixture_->dataset, {}, 1, config());
  const TrainResult b = train(fixture_->dataset, {}, 1, config());
  for (std::size_t p = 0; p < a.model.params().size(); ++p) {
    EXPECT_EQ(a.model.params()[p].value, b.model.params()[p].value);
  }
}

TEST_F(TrainTest, InferenceContract) {
  const TrainResult r = train(fixture_->dataset, {}, 0, config());
  const auto& inst = fixture_->dataset.instances;
  const UpliftEstimates e = infer_all_treatments(r.model, inst[0].x);
  EXPECT_EQ(e.treated.size(), 2u);
  EXPECT_EQ(e.control.size(), 2u);
  EXPECT_EQ(e.control_gates.size(), 2u);
  const UpliftEstimates same = infer_all_treatments(r.model, inst[0].x);
  EXPECT_EQ(e.treated, same.treated);
  EXPECT_EQ(e.control, same.control);

  // Batched inference ignores the observed treatment.
  data::Dataset flipped = fixture_->dataset;
  for (auto& i : flipped.instances) i.t = (i.t + 1) % 3;
  std::vector<std::size_t> rows(200);
  std::iota(rows.begin(), rows.end(), 0);
  const auto a = infer_batch(r.model, fixture_->dataset, rows, 64);
  const auto b = infer_batch(r.model, flipped, rows, 64);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(a[i].treated, b[i].treated);
    EXPECT_EQ(a[i].control, b[i].control);
    const auto [lo, hi] = std::minmax_element(a[i].control.begin(), a[i].control.end());
    EXPECT_LE(*lo, a[i].control_star);
    EXPECT_LE(a[i].control_star, *hi);
    const UpliftEstimates single = infer_all_treatments(r.model, inst[i].x);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(single.treated[k], a[i].treated[k], 1e-12);
  }
}

TEST_F(TrainTest, CheckpointRoundTrip) {
  const TrainResult r = train(fixture_->dataset, {}, 1, config());
  const std::string path =
      (std::filesystem::temp_directory_path() / "mtuplift_hum_ckpt.json").string();
  save_checkpoint(r.model, path);
  const HumModel back = load_checkpoint(path);
  EXPECT_EQ(back.response(), 1);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& x = fixture_->dataset.instances[i].x;
    const auto a = infer_all_treatments(r.model, x);
    const auto b = infer_all_treatments(back, x);
    EXPECT_EQ(a.treated, b.treated);
    EXPECT_EQ(a.control, b.control);
  }
  nlohmann::json j = checkpoint_json(r.model);
  j["version"] = 99;
  EXPECT_THROW(model_from_checkpoint(j), VersionError);
  j = checkpoint_json(r.model);
  j.erase("version");
  EXPECT_THROW(model_from_checkpoint(j), VersionError);
  j = checkpoint_json(r.model);
  j["schema_hash"] = "0";
  EXPECT_THROW(model_from_checkpoint(j), VersionError);
  EXPECT_THROW(check_compatible(r.model, small_schema(2, 2)), VersionError);
  std::filesystem::remove(path);
}

TEST(TrainSignTest, NoiseFreeSignAgreementAfterConvergence) {
  data::SyntheticConfig sc;
  sc.n = 30000;
  sc.seed = 11;
  sc.noise_sd = 0.0;
  const data::SyntheticRct rct = data::generate_synthetic_rct(sc);
  const data::Split parts = data::split(rct.table.size(), {0.8, 0.1, 0.1}, 5);
  const data::RawTable train_raw = rct.table.subset(parts.train);
  const data::DatasetSchema schema = data::fit_discretizers(train_raw);
  const data::Dataset train_set = data::discretize(train_raw, schema);
  const data::Dataset val_set = data::discretize(rct.table.subset(parts.validation), schema);
  const data::Dataset test_set = data::discretize(rct.table.subset(parts.test), schema);
  HumConfig c;
  c.batch_size = 256;
  c.max_epochs = 40;
  c.early_stop_patience = 4;
  c.seed = 2;
  for (int r = 0; r < 2; ++r) {
    const TrainResult res = train(train_set, val_set, r, c);
    std::size_t agree = 0, total = 0;
    for (std::size_t j = 0; j < test_set.size(); ++j) {
      const std::size_t i = parts.test[j];
      const auto e = infer_all_treatments(res.model, test_set.instances[j].x);
      for (int k = 1; k <= 2; ++k) {
        const double est = e.treated[static_cast<std::size_t>(k - 1)] -
                           e.control[static_cast<std::size_t>(k - 1)];
        agree += (est > 0) == (rct.truth.tau(i, r, k) > 0) ? 1 : 0;
        ++total;
      }
    }
    const double rate = static_cast<double>(agree) / static_cast<double>(total);
    EXPECT_GE(rate, 0.9) << "response " << r;
  }
}

}  // namespace
}  // namespace mtu::hum
