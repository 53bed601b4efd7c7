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

#include "hum/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "common/errors.hpp"
#include "common/log.hpp"
#include "ddm/aggregate.hpp"
#include "nn/optim.hpp"

namespace mtu::hum {
namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

double evaluate_loss(const HumModel& model, const data::Dataset& ds, std::size_t chunk) {
  if (ds.size() == 0) throw DataError("cannot evaluate loss on an empty dataset");
  const auto rows = all_rows(ds.size());
  double total = 0.0;
  for (std::size_t start = 0; start < rows.size(); start += chunk) {
    const std::size_t end = std::min(rows.size(), start + chunk);
    const std::span<const std::size_t> part(rows.data() + start, end - start);
    const Batch batch = make_batch(ds, part, model.response());
    nn::Tape tape;
    total += tape.scalar(hum_loss(tape, model, batch)) * static_cast<double>(part.size());
  }
  return total / static_cast<double>(ds.size());
}

TrainResult train(const data::Dataset& train_set, const data::Dataset& validation_set,
                  int response, const HumConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.size() == 0) throw DataError("empty training set");
  TrainResult result{HumModel(train_set.schema, response, config), {}, 0};
  HumModel& model = result.model;
  nn::Adam adam(model.params(), nn::AdamConfig{config.learning_rate});
  nn::PlateauSchedule schedule(config.learning_rate, config.lr_patience, config.lr_factor);

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  auto order = all_rows(train_set.size());
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  double best = std::numeric_limits<double>::infinity();
  nn::ParamStore best_params = model.params();
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::span<const std::size_t> part(order.data() + start, end - start);
      const Batch batch = make_batch(train_set, part, response);
      nn::Tape tape;
      const nn::Var loss = hum_loss(tape, model, batch);
      const double value = tape.scalar(loss);
      if (!std::isfinite(value)) {
        throw NumericalError("HUM loss diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(start / batch_size) + " (loss " +
                             std::to_string(value) + ", lr " +
                             std::to_string(adam.learning_rate()) + ")");
      }
      epoch_loss += value * static_cast<double>(part.size());
      model.params().zero_grad();
      tape.backward(loss).accumulate_into(model.params());
      adam.step();
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(order.size());
    stats.validation_loss = validation_set.size() > 0
                                ? evaluate_loss(model, validation_set)
                                : stats.train_loss;
    if (!std::isfinite(stats.validation_loss)) {
      throw NumericalError("validation loss is not finite at epoch " + std::to_string(epoch));
    }
    stats.learning_rate = adam.learning_rate();
    adam.set_learning_rate(schedule.update(stats.validation_loss));
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    log::debug("hum epoch " + std::to_string(epoch) + " train " + std::to_string(stats.train_loss) +
               " val " + std::to_string(stats.validation_loss));

    if (stats.validation_loss < best) {
      best = stats.validation_loss;
      best_params = model.params();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (config.early_stop_patience > 0 && ++since_best >= config.early_stop_patience) {
      break;
    }
  }
  model.params() = best_params;
  model.params().zero_grad();
  return result;
}

std::vector<UpliftEstimates> infer_batch(const HumModel& model, const data::Dataset& ds,
                                         std::span<const std::size_t> rows, std::size_t chunk) {
  check_compatible(model, ds.schema);
  const int K = model.num_treatments();
  std::vector<UpliftEstimates> out;
  out.reserve(rows.size());
  for (std::size_t start = 0; start < rows.size(); start += chunk) {
    const std::size_t end = std::min(rows.size(), start + chunk);
    const std::span<const std::size_t> part = rows.subspan(start, end - start);
    const Batch batch = make_batch(ds, part, model.response());
    const auto local = all_rows(part.size());
    nn::Tape tape;
    const auto features = model.embed_features(tape, batch, local);
    std::vector<BranchPass> treated, control;
    for (int k = 1; k <= K; ++k) {
      treated.push_back(model.forward(tape, features, k, k));
      control.push_back(model.forward(tape, features, k, 0));
    }
    for (std::size_t i = 0; i < part.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      UpliftEstimates e;
      for (int k = 0; k < K; ++k) {
        e.treated.push_back(tape.value(treated[static_cast<std::size_t>(k)].prediction)(row, 0));
        e.control.push_back(tape.value(control[static_cast<std::size_t>(k)].prediction)(row, 0));
        const nn::Matrix& g = tape.value(control[static_cast<std::size_t>(k)].gate);
        e.control_gates.emplace_back(g.row(row).data(), g.row(row).data() + g.cols());
      }
      e.control_star = ddm::aggregate_control(e.control);
      out.push_back(std::move(e));
    }
  }
  return out;
}

UpliftEstimates infer_all_treatments(const HumModel& model, std::span<const std::int32_t> x) {
  if (static_cast<int>(x.size()) != model.num_features()) {
    throw DimensionError("expected " + std::to_string(model.num_features()) + " feature ids, got " +
                         std::to_string(x.size()));
  }
  data::Dataset one;
  one.schema = model.schema();
  data::Instance inst;
  inst.x.assign(x.begin(), x.end());
  inst.y.assign(static_cast<std::size_t>(model.schema().num_responses()), 0.0);
  one.instances.push_back(std::move(inst));
  const std::size_t row = 0;
  return infer_batch(model, one, std::span<const std::size_t>(&row, 1)).front();
}

void check_compatible(const HumModel& model, const data::DatasetSchema& schema) {
  if (model.schema().structural_hash() != schema.structural_hash()) {
    throw VersionError("dataset schema " + schema.structural_hash() +
                       " does not match the checkpoint schema " +
                       model.schema().structural_hash());
  }
}

nlohmann::json checkpoint_json(const HumModel& model) {
  nlohmann::json params = nlohmann::json::array();
  const nn::ParamStore& store = model.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const nn::Param& p = store[i];
    params.push_back({{"name", p.name},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"values", std::vector<double>(p.value.data(), p.value.data() + p.size())}});
  }
  return {
      {"format", "mtuplift.hum"},
      {"version", kCheckpointVersion},
      {"schema_hash", model.schema().structural_hash()},
      {"schema", data::to_json(model.schema())},
      {"response", model.response()},
      {"response_name", model.schema().responses[static_cast<std::size_t>(model.response())]},
      {"config", to_json(model.config())},
      {"params", std::move(params)},
  };
}

HumModel model_from_checkpoint(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", std::string()) != "mtuplift.hum") {
    throw VersionError("not a HUM checkpoint");
  }
  if (!j.contains("version")) throw VersionError("checkpoint has no version field");
  const int version = j["version"].get<int>();
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  try {
    const data::DatasetSchema schema = data::schema_from_json(j.at("schema"));
    if (schema.structural_hash() != j.at("schema_hash").get<std::string>()) {
      throw VersionError("checkpoint schema hash does not match its schema");
    }
    HumModel model(schema, j.at("response").get<int>(), hum_config_from_json(j.at("config")));
    const auto& params = j.at("params");
    if (params.size() != model.params().size()) {
      throw VersionError("checkpoint has " + std::to_string(params.size()) +
                         " tensors, model expects " + std::to_string(model.params().size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      nn::Param& p = model.params()[i];
      const auto& jp = params[i];
      if (jp.at("name").get<std::string>() != p.name ||
          jp.at("rows").get<Eigen::Index>() != p.value.rows() ||
          jp.at("cols").get<Eigen::Index>() != p.value.cols()) {
        throw VersionError("checkpoint tensor " + std::to_string(i) + " does not match '" +
                           p.name + "'");
      }
      const auto values = jp.at("values").get<std::vector<double>>();
      if (values.size() != static_cast<std::size_t>(p.size())) {
        throw VersionError("tensor '" + p.name + "' has the wrong number of values");
      }
      std::copy(values.begin(), values.end(), p.value.data());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw VersionError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const HumModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << checkpoint_json(model).dump() << '\n';
  if (!out) throw IoError("short write to '" + path + "'");
}

HumModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw VersionError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_checkpoint(j);
}

}  // namespace mtu::hum
