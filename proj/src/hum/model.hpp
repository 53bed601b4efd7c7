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

#ifndef MTUPLIFT_HUM_MODEL_HPP_
#define MTUPLIFT_HUM_MODEL_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dataio/dataset.hpp"
#include "nn/tape.hpp"
#include "nn/tensor.hpp"

namespace mtu::hum {

struct HumConfig {
  // Architecture.
  int embedding_dim = 32;
  int num_experts = 4;
  int expert_hidden = 64;
  int expert_output = 32;
  int tower_hidden = 64;
  // Standard deviation of the normal init of embedding tables.
  double embedding_init_sd = 0.1;
  double lambda_kl = 1.0;
  // Treat the branch-mean gate distribution as a constant in the KL term.
  bool kl_stop_gradient = false;

  // Optimization.
  int batch_size = 4096;
  double learning_rate = 1e-3;
  double lr_factor = 0.6;
  int lr_patience = 2;
  int max_epochs = 20;
  // Stop once validation loss has not improved for this many epochs; 0 = off.
  int early_stop_patience = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const HumConfig& c);
HumConfig hum_config_from_json(const nlohmann::json& j, HumConfig base = {});

enum class Path { kTreated, kControl };

// Minibatch in feature-major layout: ids[f][b] is feature f of sample b.
struct Batch {
  std::vector<std::vector<std::int32_t>> ids;
  std::vector<int> treatments;
  std::vector<double> labels;

  std::size_t size() const { return treatments.size(); }
};

Batch make_batch(const data::Dataset& ds, std::span<const std::size_t> rows, int response);

// Tape handles for one pass of a batch through one branch.
struct BranchPass {
  nn::Var attention;  // B x f_x
  nn::Var gate;       // B x M
  nn::Var prediction; // B x 1
};

// All parameters of the hybrid uplift model for one response: shared feature
// and treatment embedding tables plus, for each treatment branch, target
// attention, an expert gate, M experts and separate treated/control towers.
class HumModel {
 public:
  HumModel(data::DatasetSchema schema, int response, HumConfig config);

  const data::DatasetSchema& schema() const { return schema_; }
  const HumConfig& config() const { return config_; }
  HumConfig& mutable_config() { return config_; }
  int response() const { return response_; }
  int num_treatments() const { return schema_.num_treatments; }
  int num_features() const { return schema_.num_features(); }

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  // Per-feature embeddings for a batch, one (B x d) node per feature.
  std::vector<nn::Var> embed_features(nn::Tape& tape, const Batch& batch,
                                      std::span<const std::size_t> rows) const;
  nn::Var embed_treatment(nn::Tape& tape, int treatment, std::size_t batch) const;

  // Target attention of branch k over the feature embeddings, driven by the
  // treatment embedding e_t. Returns the selected (B x d) embedding and
  // writes the attention weights. k must be in [1, K].
  nn::Var feature_select(nn::Tape& tape, std::span<const nn::Var> features, nn::Var e_t,
                         int branch, nn::Var* attention) const;
  static nn::Var fuse(nn::Tape& tape, nn::Var selected, nn::Var e_t);
  // Gate over the branch experts, mixture, then the path's tower.
  BranchPass branch_forward(nn::Tape& tape, nn::Var fused, int branch, Path path) const;

  // Full pass for branch k with treatment embedding `treatment` (k or 0).
  BranchPass forward(nn::Tape& tape, std::span<const nn::Var> features, int branch,
                     int treatment) const;

 private:
  // Positions inside params_, so copies of the model stay self-consistent.
  struct Dense {
    std::size_t weights = 0;
    std::size_t bias = 0;
  };
  struct Branch {
    Dense attention;
    Dense gate;
    std::vector<Dense> expert_hidden;
    std::vector<Dense> expert_output;
    Dense treated_hidden, treated_output;
    Dense control_hidden, control_output;
  };

  void build();
  Dense add_dense(const std::string& name, int out, int in, std::mt19937_64& rng);
  nn::Var apply(nn::Tape& tape, nn::Var x, const Dense& d, nn::Activation act) const;
  const Branch& branch(int k) const;

  data::DatasetSchema schema_;
  int response_;
  HumConfig config_;
  nn::ParamStore params_;
  std::vector<std::size_t> feature_tables_;
  std::size_t treatment_table_ = 0;
  std::vector<Branch> branches_;  // branches_[k - 1]
};

// Joint objective over a batch: masked squared error on the tower matching
// each instance's treatment, plus for control instances the sum over every
// branch's control tower and lambda * KL(z^{0,k} || mean_k z^{0,k}). Divided
// by the batch size.
nn::Var hum_loss(nn::Tape& tape, const HumModel& model, const Batch& batch);

}  // namespace mtu::hum

#endif  // MTUPLIFT_HUM_MODEL_HPP_
