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

#ifndef MTUPLIFT_HUM_TRAIN_HPP_
#define MTUPLIFT_HUM_TRAIN_HPP_

#include <functional>
#include <string>
#include <vector>

#include "hum/model.hpp"

namespace mtu::hum {

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  HumModel model;
  std::vector<EpochStats> history;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Minibatch Adam on hum_loss with a plateau schedule on validation loss.
// Returns the parameters of the best validation epoch. Deterministic for a
// given config.seed. Throws NumericalError if the loss becomes non-finite.
TrainResult train(const data::Dataset& train_set, const data::Dataset& validation_set,
                  int response, const HumConfig& config, const EpochCallback& on_epoch = {});

// Mean hum_loss over a dataset, evaluated in chunks without gradients.
double evaluate_loss(const HumModel& model, const data::Dataset& ds, std::size_t chunk = 4096);

// Counterfactual outputs for one user and one response model.
struct UpliftEstimates {
  std::vector<double> treated;   // y^k, k = 1..K (index k - 1)
  std::vector<double> control;   // y^{0,k}
  double control_star = 0.0;     // mean of control
  std::vector<std::vector<double>> control_gates;  // z^{0,k}
};

// Runs every branch with each treatment embedding and with the control
// embedding. Independent of the user's observed treatment.
UpliftEstimates infer_all_treatments(const HumModel& model, std::span<const std::int32_t> x);
std::vector<UpliftEstimates> infer_batch(const HumModel& model, const data::Dataset& ds,
                                         std::span<const std::size_t> rows,
                                         std::size_t chunk = 4096);

// Self-describing JSON checkpoint.
inline constexpr int kCheckpointVersion = 1;
void save_checkpoint(const HumModel& model, const std::string& path);
HumModel load_checkpoint(const std::string& path);
nlohmann::json checkpoint_json(const HumModel& model);
HumModel model_from_checkpoint(const nlohmann::json& j);
// Throws VersionError when `schema` is structurally different from the one
// the model was trained on.
void check_compatible(const HumModel& model, const data::DatasetSchema& schema);

}  // namespace mtu::hum

#endif  // MTUPLIFT_HUM_TRAIN_HPP_
