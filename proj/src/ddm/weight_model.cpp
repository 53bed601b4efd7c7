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

#include "ddm/weight_model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "common/errors.hpp"
#include "common/log.hpp"
#include "ddm/decision.hpp"
#include "nn/optim.hpp"

namespace mtu::ddm {

void WeightModelConfig::validate() const {
  if (num_responses < 1) throw UsageError("weight model needs at least one response");
  if (group_vocab.empty()) throw UsageError("weight model needs at least one feature group");
  for (int v : group_vocab) {
    if (v < 1) throw UsageError("feature group vocabulary must be positive");
  }
  if (embedding_dim < 1 || num_experts < 1 || expert_hidden < 1 || tower_hidden < 1) {
    throw UsageError("weight model layer sizes must be positive");
  }
  if (!(embedding_init_sd > 0.0)) throw UsageError("embedding_init_sd must be > 0");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw UsageError("lr_factor must be in (0, 1)");
  if (lr_patience < 1) throw UsageError("lr_patience must be >= 1");
  if (max_epochs < 1) throw UsageError("max_epochs must be >= 1");
}

nlohmann::json to_json(const WeightModelConfig& c) {
  return {
      {"num_responses", c.num_responses}, {"group_vocab", c.group_vocab},
      {"embedding_dim", c.embedding_dim}, {"num_experts", c.num_experts},
      {"expert_hidden", c.expert_hidden}, {"tower_hidden", c.tower_hidden},
      {"embedding_init_sd", c.embedding_init_sd}, {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate}, {"lr_factor", c.lr_factor},
      {"lr_patience", c.lr_patience},     {"max_epochs", c.max_epochs},
      {"seed", c.seed},
  };
}

WeightModelConfig weight_config_from_json(const nlohmann::json& j, WeightModelConfig c) {
  try {
    c.num_responses = j.value("num_responses", c.num_responses);
    c.group_vocab = j.value("group_vocab", c.group_vocab);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.num_experts = j.value("num_experts", c.num_experts);
    c.expert_hidden = j.value("expert_hidden", c.expert_hidden);
    c.tower_hidden = j.value("tower_hidden", c.tower_hidden);
    c.embedding_init_sd = j.value("embedding_init_sd", c.embedding_init_sd);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lr_factor = j.value("lr_factor", c.lr_factor);
    c.lr_patience = j.value("lr_patience", c.lr_patience);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad weight model config: ") + e.what());
  }
  return c;
}

WeightModel::WeightModel(WeightModelConfig config) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const int ds = config_.embedding_dim;
  for (std::size_t g = 0; g < config_.group_vocab.size(); ++g) {
    group_tables_.push_back(params_.size());
    nn::ParamStore::init_normal(
        params_.add("embed/group" + std::to_string(g), config_.group_vocab[g], ds),
        config_.embedding_init_sd, rng);
  }
  const int in = ds * static_cast<int>(config_.group_vocab.size());
  for (int m = 0; m < config_.num_experts; ++m) {
    experts_.push_back(add_dense("expert" + std::to_string(m), config_.expert_hidden, in, rng));
  }
  for (int r = 0; r < config_.num_responses; ++r) {
    const std::string p = "response" + std::to_string(r) + "/";
    gates_.push_back(add_dense(p + "gate", config_.num_experts, in, rng));
    tower_hidden_.push_back(
        add_dense(p + "tower/hidden", config_.tower_hidden, config_.expert_hidden, rng));
    tower_output_.push_back(add_dense(p + "tower/output", 1, config_.tower_hidden, rng));
  }
}

WeightModel::Dense WeightModel::add_dense(const std::string& name, int out, int in,
                                          std::mt19937_64& rng) {
  Dense d;
  d.weights = params_.size();
  nn::ParamStore::init_dense(params_.add(name + "/W", out, in), static_cast<std::size_t>(in), rng);
  d.bias = params_.size();
  nn::ParamStore::init_dense(params_.add(name + "/b", 1, out), static_cast<std::size_t>(in), rng);
  return d;
}

nn::Var WeightModel::apply(nn::Tape& tape, nn::Var x, const Dense& d, nn::Activation act) const {
  return tape.dense_forward(x, params_[d.weights], params_[d.bias], act);
}

nn::Var WeightModel::pool(nn::Tape& tape, std::span<const RequestContext* const> requests) const {
  if (requests.empty()) throw DataError("empty request batch");
  std::optional<nn::Var> out;
  for (std::size_t g = 0; g < group_tables_.size(); ++g) {
    std::vector<std::vector<std::int32_t>> lists;
    lists.reserve(requests.size());
    for (const RequestContext* req : requests) {
      if (req->groups.size() != group_tables_.size()) {
        throw DataError("request '" + req->user_id + "' has " +
                        std::to_string(req->groups.size()) + " feature groups, expected " +
                        std::to_string(group_tables_.size()));
      }
      lists.push_back(req->groups[g]);
    }
    const nn::Var pooled =
        tape.mean_pool(params_[group_tables_[g]], lists, "group" + std::to_string(g));
    out = out ? tape.concat_cols(*out, pooled) : pooled;
  }
  return *out;
}

nn::Var WeightModel::forward(nn::Tape& tape, nn::Var pooled) const {
  std::vector<nn::Var> hidden;
  hidden.reserve(experts_.size());
  for (const Dense& e : experts_) hidden.push_back(apply(tape, pooled, e, nn::Activation::kRelu));
  std::optional<nn::Var> out;
  for (int r = 0; r < config_.num_responses; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    const nn::Var gate =
        tape.softmax_rows(apply(tape, pooled, gates_[ri], nn::Activation::kLinear));
    const nn::Var mixed = tape.weighted_sum(gate, hidden);
    const nn::Var h = apply(tape, mixed, tower_hidden_[ri], nn::Activation::kRelu);
    const nn::Var o = apply(tape, h, tower_output_[ri], nn::Activation::kSigmoid);
    out = out ? tape.concat_cols(*out, o) : o;
  }
  return *out;
}

std::vector<double> pool_request(const WeightModel& model, const RequestContext& request) {
  nn::Tape tape;
  const RequestContext* one[] = {&request};
  const nn::Matrix& m = tape.value(model.pool(tape, one));
  return {m.data(), m.data() + m.size()};
}

std::vector<double> weight_forward(const WeightModel& model, const RequestContext& request) {
  nn::Tape tape;
  const RequestContext* one[] = {&request};
  const nn::Matrix& m = tape.value(model.forward(tape, model.pool(tape, one)));
  return {m.data(), m.data() + m.size()};
}

std::vector<std::vector<double>> weight_forward_batch(const WeightModel& model,
                                                      std::span<const RequestContext> requests) {
  std::vector<std::vector<double>> out;
  out.reserve(requests.size());
  constexpr std::size_t kChunk = 1024;
  for (std::size_t begin = 0; begin < requests.size(); begin += kChunk) {
    const std::size_t end = std::min(requests.size(), begin + kChunk);
    std::vector<const RequestContext*> ptrs;
    for (std::size_t i = begin; i < end; ++i) ptrs.push_back(&requests[i]);
    nn::Tape tape;
    const nn::Matrix& m = tape.value(model.forward(tape, model.pool(tape, ptrs)));
    for (Eigen::Index b = 0; b < m.rows(); ++b) {
      out.emplace_back(m.row(b).data(), m.row(b).data() + m.cols());
    }
  }
  return out;
}

LabeledRequests label_requests(std::span<const RequestContext> requests, int num_responses) {
  LabeledRequests out;
  for (const RequestContext& req : requests) {
    auto label = proportion_label(req.exposures, num_responses);
    if (!label) {
      ++out.skipped;
      continue;
    }
    out.requests.push_back(&req);
    out.labels.push_back(std::move(*label));
  }
  return out;
}

nn::Var weight_loss(nn::Tape& tape, const WeightModel& model,
                    std::span<const RequestContext* const> requests,
                    const std::vector<std::vector<double>>& labels) {
  if (labels.size() != requests.size()) {
    throw DimensionError("label count does not match request count");
  }
  const int R = model.num_responses();
  nn::Matrix target(static_cast<Eigen::Index>(labels.size()), R);
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b].size() != static_cast<std::size_t>(R)) {
      throw DimensionError("label width does not match the number of responses");
    }
    for (int r = 0; r < R; ++r) target(static_cast<Eigen::Index>(b), r) = labels[b][r];
  }
  return tape.mean_squared_error(model.forward(tape, model.pool(tape, requests)), target);
}

namespace {

double dataset_loss(const WeightModel& model, const std::vector<const RequestContext*>& reqs,
                    const std::vector<std::vector<double>>& labels,
                    const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  constexpr std::size_t kChunk = 1024;
  double total = 0.0;
  for (std::size_t begin = 0; begin < rows.size(); begin += kChunk) {
    const std::size_t end = std::min(rows.size(), begin + kChunk);
    std::vector<const RequestContext*> batch;
    std::vector<std::vector<double>> y;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(reqs[rows[i]]);
      y.push_back(labels[rows[i]]);
    }
    nn::Tape tape;
    total += tape.scalar(weight_loss(tape, model, batch, y)) * static_cast<double>(end - begin);
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace

WeightTrainResult train_weight_model(std::span<const RequestContext> requests,
                                     const WeightModelConfig& config) {
  const LabeledRequests labeled = label_requests(requests, config.num_responses);
  if (labeled.skipped > 0) {
    log::warning(std::to_string(labeled.skipped) + " requests without exposures skipped");
  }
  if (labeled.requests.empty()) throw DataError("no labelled requests to train on");

  WeightTrainResult result{WeightModel(config), {}, {}, labeled.skipped};
  WeightModel& model = result.model;
  std::mt19937_64 rng(config.seed ^ 0x5851f42d4c957f2dULL);

  std::vector<std::size_t> order(labeled.requests.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_val = order.size() >= 20 ? order.size() / 10 : 0;
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  nn::Adam adam(model.params(), nn::AdamConfig{config.learning_rate});
  nn::PlateauSchedule schedule(config.learning_rate, config.lr_patience, config.lr_factor);
  nn::ParamStore best = model.params();
  double best_loss = std::numeric_limits<double>::infinity();

  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double sum = 0.0;
    for (std::size_t begin = 0; begin < train.size(); begin += bs) {
      const std::size_t end = std::min(train.size(), begin + bs);
      std::vector<const RequestContext*> batch;
      std::vector<std::vector<double>> y;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(labeled.requests[train[i]]);
        y.push_back(labeled.labels[train[i]]);
      }
      nn::Tape tape;
      const nn::Var loss = weight_loss(tape, model, batch, y);
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) {
        throw NumericalError("weight model loss diverged in epoch " + std::to_string(epoch + 1));
      }
      sum += value * static_cast<double>(end - begin);
      model.params().zero_grad();
      tape.backward(loss).accumulate_into(model.params());
      adam.step();
    }
    const double train_loss = sum / static_cast<double>(train.size());
    const double val_loss =
        val.empty() ? train_loss : dataset_loss(model, labeled.requests, labeled.labels, val);
    result.train_loss.push_back(train_loss);
    result.validation_loss.push_back(val_loss);
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = model.params();
    }
    adam.set_learning_rate(schedule.update(val_loss));
    log::info("weights epoch " + std::to_string(epoch + 1) + " train " +
              std::to_string(train_loss) + " val " + std::to_string(val_loss));
  }
  model.params() = best;
  return result;
}

void save_weight_model(const WeightModel& model, const std::string& path) {
  nlohmann::json params = nlohmann::json::array();
  const nn::ParamStore& store = model.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const nn::Param& p = store[i];
    params.push_back({{"name", p.name},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"values", std::vector<double>(p.value.data(), p.value.data() + p.size())}});
  }
  const nlohmann::json j = {{"format", "mtuplift.weights"},
                            {"version", kWeightModelVersion},
                            {"config", to_json(model.config())},
                            {"params", std::move(params)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write weight model '" + path + "'");
  out << j.dump() << '\n';
  if (!out) throw IoError("short write to '" + path + "'");
}

WeightModel load_weight_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight model '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw VersionError("weight model '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object() || j.value("format", std::string()) != "mtuplift.weights") {
    throw VersionError("'" + path + "' is not a weight model");
  }
  if (j.value("version", -1) != kWeightModelVersion) {
    throw VersionError("unsupported weight model version in '" + path + "'");
  }
  try {
    WeightModel model(weight_config_from_json(j.at("config")));
    const auto& params = j.at("params");
    if (params.size() != model.params().size()) {
      throw VersionError("weight model tensor count mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      nn::Param& p = model.params()[i];
      const auto& jp = params[i];
      if (jp.at("name").get<std::string>() != p.name ||
          jp.at("rows").get<Eigen::Index>() != p.value.rows() ||
          jp.at("cols").get<Eigen::Index>() != p.value.cols()) {
        throw VersionError("weight model tensor '" + p.name + "' does not match");
      }
      const auto values = jp.at("values").get<std::vector<double>>();
      if (values.size() != static_cast<std::size_t>(p.size())) {
        throw VersionError("tensor '" + p.name + "' has the wrong number of values");
      }
      std::copy(values.begin(), values.end(), p.value.data());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw VersionError(std::string("malformed weight model: ") + e.what());
  }
}

}  // namespace mtu::ddm
