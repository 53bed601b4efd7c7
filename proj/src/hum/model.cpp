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

#include "hum/model.hpp"

#include "common/errors.hpp"

namespace mtu::hum {

void HumConfig::validate() const {
  if (embedding_dim < 1 || num_experts < 1 || expert_hidden < 1 || expert_output < 1 ||
      tower_hidden < 1) {
    throw UsageError("HUM layer sizes must be positive");
  }
  if (!(embedding_init_sd > 0.0)) throw UsageError("embedding_init_sd must be > 0");
  if (!(lambda_kl >= 0.0)) throw UsageError("lambda_kl must be >= 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw UsageError("lr_factor must be in (0, 1)");
  if (lr_patience < 1) throw UsageError("lr_patience must be >= 1");
  if (max_epochs < 1) throw UsageError("max_epochs must be >= 1");
  if (early_stop_patience < 0) throw UsageError("early_stop_patience must be >= 0");
}

nlohmann::json to_json(const HumConfig& c) {
  return {
      {"embedding_dim", c.embedding_dim},     {"num_experts", c.num_experts},
      {"expert_hidden", c.expert_hidden},     {"expert_output", c.expert_output},
      {"tower_hidden", c.tower_hidden},       {"embedding_init_sd", c.embedding_init_sd},
      {"lambda_kl", c.lambda_kl},
      {"kl_stop_gradient", c.kl_stop_gradient}, {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},     {"lr_factor", c.lr_factor},
      {"lr_patience", c.lr_patience},         {"max_epochs", c.max_epochs},
      {"early_stop_patience", c.early_stop_patience}, {"seed", c.seed},
  };
}

HumConfig hum_config_from_json(const nlohmann::json& j, HumConfig c) {
  try {
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.num_experts = j.value("num_experts", c.num_experts);
    c.expert_hidden = j.value("expert_hidden", c.expert_hidden);
    c.expert_output = j.value("expert_output", c.expert_output);
    c.tower_hidden = j.value("tower_hidden", c.tower_hidden);
    c.embedding_init_sd = j.value("embedding_init_sd", c.embedding_init_sd);
    c.lambda_kl = j.value("lambda_kl", c.lambda_kl);
    c.kl_stop_gradient = j.value("kl_stop_gradient", c.kl_stop_gradient);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_factor = j.value("lr_factor", c.lr_factor);
    c.lr_patience = j.value("lr_patience", c.lr_patience);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad HUM config: ") + e.what());
  }
  c.validate();
  return c;
}

Batch make_batch(const data::Dataset& ds, std::span<const std::size_t> rows, int response) {
  Batch b;
  const std::size_t nf = ds.schema.features.size();
  b.ids.assign(nf, std::vector<std::int32_t>(rows.size()));
  b.treatments.resize(rows.size());
  b.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& inst = ds.instances[rows[i]];
    for (std::size_t f = 0; f < nf; ++f) b.ids[f][i] = inst.x[f];
    b.treatments[i] = inst.t;
    b.labels[i] = inst.y[static_cast<std::size_t>(response)];
  }
  return b;
}

HumModel::HumModel(data::DatasetSchema schema, int response, HumConfig config)
    : schema_(std::move(schema)), response_(response), config_(config) {
  schema_.validate();
  config_.validate();
  if (!schema_.fitted()) throw StateError("HUM needs a schema with fitted bins");
  if (response < 0 || response >= schema_.num_responses()) {
    throw UsageError("response index " + std::to_string(response) + " out of range");
  }
  build();
}

HumModel::Dense HumModel::add_dense(const std::string& name, int out, int in,
                                    std::mt19937_64& rng) {
  Dense d;
  d.weights = params_.size();
  nn::ParamStore::init_dense(params_.add(name + "/W", out, in), static_cast<std::size_t>(in), rng);
  d.bias = params_.size();
  nn::ParamStore::init_dense(params_.add(name + "/b", 1, out), static_cast<std::size_t>(in), rng);
  return d;
}

void HumModel::build() {
  std::mt19937_64 rng(config_.seed);
  const int d = config_.embedding_dim;
  const int fx = schema_.num_features();
  for (const auto& f : schema_.features) {
    feature_tables_.push_back(params_.size());
    nn::ParamStore::init_normal(params_.add("embed/x/" + f.name, f.vocab_size(), d), config_.embedding_init_sd, rng);
  }
  treatment_table_ = params_.size();
  nn::ParamStore::init_normal(params_.add("embed/t", schema_.num_treatments + 1, d), config_.embedding_init_sd, rng);

  for (int k = 1; k <= schema_.num_treatments; ++k) {
    const std::string p = "branch" + std::to_string(k) + "/";
    Branch b;
    b.attention = add_dense(p + "attention", fx, d, rng);
    b.gate = add_dense(p + "gate", config_.num_experts, 2 * d, rng);
    for (int m = 0; m < config_.num_experts; ++m) {
      const std::string e = p + "expert" + std::to_string(m);
      b.expert_hidden.push_back(add_dense(e + "/hidden", config_.expert_hidden, 2 * d, rng));
      b.expert_output.push_back(
          add_dense(e + "/output", config_.expert_output, config_.expert_hidden, rng));
    }
    b.treated_hidden =
        add_dense(p + "tower_treated/hidden", config_.tower_hidden, config_.expert_output, rng);
    b.treated_output = add_dense(p + "tower_treated/output", 1, config_.tower_hidden, rng);
    b.control_hidden =
        add_dense(p + "tower_control/hidden", config_.tower_hidden, config_.expert_output, rng);
    b.control_output = add_dense(p + "tower_control/output", 1, config_.tower_hidden, rng);
    branches_.push_back(std::move(b));
  }
}

const HumModel::Branch& HumModel::branch(int k) const {
  if (k < 1 || k > schema_.num_treatments) {
    throw UsageError("branch " + std::to_string(k) + " outside [1, " +
                     std::to_string(schema_.num_treatments) + "]");
  }
  return branches_[static_cast<std::size_t>(k - 1)];
}

nn::Var HumModel::apply(nn::Tape& tape, nn::Var x, const Dense& d, nn::Activation act) const {
  return tape.dense_forward(x, params_[d.weights], params_[d.bias], act);
}

std::vector<nn::Var> HumModel::embed_features(nn::Tape& tape, const Batch& batch,
                                              std::span<const std::size_t> rows) const {
  std::vector<nn::Var> out;
  out.reserve(feature_tables_.size());
  std::vector<std::int32_t> ids(rows.size());
  for (std::size_t f = 0; f < feature_tables_.size(); ++f) {
    for (std::size_t i = 0; i < rows.size(); ++i) ids[i] = batch.ids[f][rows[i]];
    out.push_back(tape.embedding(params_[feature_tables_[f]], ids, schema_.features[f].name));
  }
  return out;
}

nn::Var HumModel::embed_treatment(nn::Tape& tape, int treatment, std::size_t batch) const {
  const std::vector<std::int32_t> ids(batch, treatment);
  return tape.embedding(params_[treatment_table_], ids, schema_.treatment_column);
}

nn::Var HumModel::feature_select(nn::Tape& tape, std::span<const nn::Var> features, nn::Var e_t,
                                 int k, nn::Var* attention) const {
  const Branch& b = branch(k);
  const nn::Var weights = tape.softmax_rows(apply(tape, e_t, b.attention, nn::Activation::kLinear));
  if (attention != nullptr) *attention = weights;
  return tape.weighted_sum(weights, features);
}

nn::Var HumModel::fuse(nn::Tape& tape, nn::Var selected, nn::Var e_t) {
  return tape.concat_cols(selected, e_t);
}

BranchPass HumModel::branch_forward(nn::Tape& tape, nn::Var fused, int k, Path path) const {
  const Branch& b = branch(k);
  BranchPass out;
  out.gate = tape.softmax_rows(apply(tape, fused, b.gate, nn::Activation::kLinear));
  std::vector<nn::Var> experts;
  experts.reserve(b.expert_hidden.size());
  for (std::size_t m = 0; m < b.expert_hidden.size(); ++m) {
    const nn::Var h = apply(tape, fused, b.expert_hidden[m], nn::Activation::kRelu);
    experts.push_back(apply(tape, h, b.expert_output[m], nn::Activation::kRelu));
  }
  const nn::Var mixture = tape.weighted_sum(out.gate, experts);
  const bool treated = path == Path::kTreated;
  const nn::Var h =
      apply(tape, mixture, treated ? b.treated_hidden : b.control_hidden, nn::Activation::kRelu);
  const auto head = schema_.response_kind == data::ResponseKind::kBinary ? nn::Activation::kSigmoid
                                                                         : nn::Activation::kLinear;
  out.prediction = apply(tape, h, treated ? b.treated_output : b.control_output, head);
  return out;
}

BranchPass HumModel::forward(nn::Tape& tape, std::span<const nn::Var> features, int k,
                             int treatment) const {
  if (features.empty()) throw DimensionError("no feature embeddings");
  const std::size_t rows = static_cast<std::size_t>(tape.value(features[0]).rows());
  const nn::Var e_t = embed_treatment(tape, treatment, rows);
  nn::Var attention;
  const nn::Var selected = feature_select(tape, features, e_t, k, &attention);
  BranchPass pass =
      branch_forward(tape, fuse(tape, selected, e_t), k, treatment == 0 ? Path::kControl : Path::kTreated);
  pass.attention = attention;
  return pass;
}

nn::Var hum_loss(nn::Tape& tape, const HumModel& model, const Batch& batch) {
  const std::size_t n = batch.size();
  if (n == 0) throw DataError("HUM loss over an empty batch");
  const int K = model.num_treatments();
  std::vector<std::vector<std::size_t>> by_arm(static_cast<std::size_t>(K) + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const int t = batch.treatments[i];
    if (t < 0 || t > K) throw DataError("treatment " + std::to_string(t) + " outside [0, K]");
    by_arm[static_cast<std::size_t>(t)].push_back(i);
  }
  auto labels_of = [&](const std::vector<std::size_t>& rows) {
    nn::Matrix y(static_cast<Eigen::Index>(rows.size()), 1);
    for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i), 0) = batch.labels[rows[i]];
    return y;
  };

  std::vector<nn::Var> terms;
  for (int k = 1; k <= K; ++k) {
    const auto& rows = by_arm[static_cast<std::size_t>(k)];
    if (rows.empty()) continue;
    const auto features = model.embed_features(tape, batch, rows);
    const BranchPass pass = model.forward(tape, features, k, k);
    terms.push_back(tape.sum_squared_error(pass.prediction, labels_of(rows)));
  }

  const auto& control = by_arm[0];
  if (!control.empty()) {
    const auto features = model.embed_features(tape, batch, control);
    const nn::Matrix y = labels_of(control);
    std::vector<nn::Var> gates;
    for (int k = 1; k <= K; ++k) {
      const BranchPass pass = model.forward(tape, features, k, 0);
      terms.push_back(tape.sum_squared_error(pass.prediction, y));
      gates.push_back(pass.gate);
    }
    const double lambda = model.config().lambda_kl;
    if (lambda > 0.0) {
      nn::Var mean = gates[0];
      for (std::size_t k = 1; k < gates.size(); ++k) mean = tape.add(mean, gates[k]);
      mean = tape.scale(mean, 1.0 / static_cast<double>(K));
      if (model.config().kl_stop_gradient) mean = tape.stop_gradient(mean);
      for (const nn::Var& z : gates) terms.push_back(tape.scale(tape.kl_rows(z, mean), lambda));
    }
  }

  nn::Var total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = tape.add(total, terms[i]);
  return tape.scale(total, 1.0 / static_cast<double>(n));
}

}  // namespace mtu::hum
