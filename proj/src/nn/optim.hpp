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

#ifndef MTUPLIFT_NN_OPTIM_HPP_
#define MTUPLIFT_NN_OPTIM_HPP_

#include <cstdint>
#include <limits>
#include <vector>

#include "nn/tensor.hpp"

namespace mtu::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;
  double learning_rate = 0.0;
};

// Adam over every parameter of a store, reading Param::grad.
class Adam {
 public:
  Adam(ParamStore& params, const AdamConfig& config);

  // Applies one update. Throws NumericalError naming the first parameter
  // whose gradient is not finite; parameters are left untouched in that case.
  void step();

  double learning_rate() const { return state_.learning_rate; }
  void set_learning_rate(double lr);
  const AdamState& state() const { return state_; }

 private:
  ParamStore* params_;
  AdamConfig config_;
  AdamState state_;
};

// Multiplies the learning rate by `factor` once validation loss has failed
// to improve for `patience` consecutive epochs.
class PlateauSchedule {
 public:
  PlateauSchedule(double initial_lr, int patience = 2, double factor = 0.6);

  // Feeds one epoch's validation loss; returns the learning rate to use next.
  double update(double val_loss);

  double learning_rate() const { return lr_; }
  double best() const { return best_; }
  int epochs_without_improvement() const { return bad_epochs_; }
  int reductions() const { return reductions_; }

 private:
  double lr_;
  int patience_;
  double factor_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
  int reductions_ = 0;
};

}  // namespace mtu::nn

#endif  // MTUPLIFT_NN_OPTIM_HPP_
