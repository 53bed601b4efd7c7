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

#include "nn/optim.hpp"

#include <cmath>
#include <string>

#include "common/errors.hpp"

namespace mtu::nn {

Adam::Adam(ParamStore& params, const AdamConfig& config) : params_(&params), config_(config) {
  set_learning_rate(config.learning_rate);
  state_.first_moment.reserve(params.size());
  state_.second_moment.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& v = params[i].value;
    state_.first_moment.push_back(Matrix::Zero(v.rows(), v.cols()));
    state_.second_moment.push_back(Matrix::Zero(v.rows(), v.cols()));
  }
}

void Adam::set_learning_rate(double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw UsageError("learning rate must be positive, got " + std::to_string(lr));
  }
  state_.learning_rate = lr;
}

void Adam::step() {
  ParamStore& params = *params_;
  if (params.size() != state_.first_moment.size()) {
    throw StateError("parameter store changed after optimizer construction");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].grad.allFinite()) {
      throw NumericalError("non-finite gradient for parameter '" + params[i].name + "'");
    }
  }
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params[i];
    Matrix& m = state_.first_moment[i];
    Matrix& v = state_.second_moment[i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * p.grad;
    v = config_.beta2 * v + (1.0 - config_.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= state_.learning_rate * (m.array() / c1) /
                       ((v.array() / c2).sqrt() + config_.epsilon);
  }
}

PlateauSchedule::PlateauSchedule(double initial_lr, int patience, double factor)
    : lr_(initial_lr), patience_(patience), factor_(factor) {
  if (patience < 1) throw UsageError("plateau patience must be >= 1");
  if (!(factor > 0.0 && factor < 1.0)) throw UsageError("plateau factor must be in (0, 1)");
  if (!(initial_lr > 0.0)) throw UsageError("learning rate must be positive");
}

double PlateauSchedule::update(double val_loss) {
  if (val_loss < best_) {
    best_ = val_loss;
    bad_epochs_ = 0;
    return lr_;
  }
  if (++bad_epochs_ >= patience_) {
    lr_ *= factor_;
    bad_epochs_ = 0;
    ++reductions_;
  }
  return lr_;
}

}  // namespace mtu::nn
