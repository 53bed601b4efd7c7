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

#ifndef MTUPLIFT_DDM_WEIGHT_MODEL_HPP_
#define MTUPLIFT_DDM_WEIGHT_MODEL_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ddm/request.hpp"
#include "json.hpp"
#include "nn/tape.hpp"

namespace mtu::ddm {

struct WeightModelConfig {
  int num_responses = 2;
  std::vector<int> group_vocab;  // one entry per feature group
  int embedding_dim = 16;
  int num_experts = 3;
  int expert_hidden = 32;
  int tower_hidden = 16;
  double embedding_init_sd = 0.1;

  int batch_size = 256;
  double learning_rate = 1e-3;
  double lr_factor = 0.6;
  int lr_patience = 2;
  int max_epochs = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const WeightModelConfig& c);
WeightModelConfig weight_config_from_json(const nlohmann::json& j, WeightModelConfig base = {});

// Multi-gate mixture of experts over pooled request embeddings, one sigmoid
// tower per response.
class WeightModel {
 public:
  explicit WeightModel(WeightModelConfig config);

  const WeightModelConfig& config() const { return config_; }
  int num_responses() const { return config_.num_responses; }
  std::size_t num_groups() const { return config_.group_vocab.size(); }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Average pooling of every group's item embeddings, concatenated:
  // (B x groups * d_s).
  nn::Var pool(nn::Tape& tape, std::span<const RequestContext* const> requests) const;
  // Tower outputs in (0, 1), (B x R).
  nn::Var forward(nn::Tape& tape, nn::Var pooled) const;

 private:
  struct Dense {
    std::size_t weights = 0;
    std::size_t bias = 0;
  };
  Dense add_dense(const std::string& name, int out, int in, std::mt19937_64& rng);
  nn::Var apply(nn::Tape& tape, nn::Var x, const Dense& d, nn::Activation act) const;

  WeightModelConfig config_;
  nn::ParamStore params_;
  std::vector<std::size_t> group_tables_;
  std::vector<Dense> experts_;
  std::vector<Dense> gates_;
  std::vector<Dense> tower_hidden_;
  std::vector<Dense> tower_output_;
};

// e* for one request, as a plain vector.
std::vector<double> pool_request(const WeightModel& model, const RequestContext& request);
// Tower outputs o for one request.
std::vector<double> weight_forward(const WeightModel& model, const RequestContext& request);
std::vector<std::vector<double>> weight_forward_batch(const WeightModel& model,
                                                      std::span<const RequestContext> requests);

// Requests paired with proportion labels; requests without exposures are
// dropped and counted.
struct LabeledRequests {
  std::vector<const RequestContext*> requests;
  std::vector<std::vector<double>> labels;
  std::size_t skipped = 0;
};
LabeledRequests label_requests(std::span<const RequestContext> requests, int num_responses);

// MSE between tower outputs and labels over a batch (mean over B x R).
nn::Var weight_loss(nn::Tape& tape, const WeightModel& model,
                    std::span<const RequestContext* const> requests,
                    const std::vector<std::vector<double>>& labels);

struct WeightTrainResult {
  WeightModel model;
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  std::size_t skipped = 0;
};

// Adam + plateau schedule on the proportion-label MSE; the validation split
// drives the schedule and best-epoch selection.
WeightTrainResult train_weight_model(std::span<const RequestContext> requests,
                                     const WeightModelConfig& config);

inline constexpr int kWeightModelVersion = 1;
void save_weight_model(const WeightModel& model, const std::string& path);
WeightModel load_weight_model(const std::string& path);

}  // namespace mtu::ddm

#endif  // MTUPLIFT_DDM_WEIGHT_MODEL_HPP_
