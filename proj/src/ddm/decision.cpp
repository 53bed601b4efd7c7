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

#include "ddm/decision.hpp"

#include <cmath>

#include "common/errors.hpp"

namespace mtu::ddm {

double relative_uplift(double treated, double control_star, const std::string& user_id) {
  if (!(std::abs(control_star) >= kDenominatorFloor)) {
    throw DenominatorError(user_id, control_star);
  }
  return treated / control_star - 1.0;
}

std::vector<double> value_weights(std::span<const double> tower_outputs) {
  if (tower_outputs.empty()) throw DimensionError("value weights need at least one response");
  double sum = 0.0;
  for (double o : tower_outputs) {
    if (!(o >= 0.0)) throw NumericalError("value-weight tower output must be nonnegative");
    sum += o;
  }
  const auto n = static_cast<double>(tower_outputs.size());
  std::vector<double> w(tower_outputs.size());
  for (std::size_t r = 0; r < w.size(); ++r) {
    w[r] = sum < 1e-12 ? 1.0 / n : tower_outputs[r] / sum;
  }
  return w;
}

Decision decide(std::span<const double> weights, const UpliftMatrix& delta, double sigma,
                DecisionMode mode) {
  if (static_cast<int>(weights.size()) != delta.num_responses) {
    throw DimensionError(std::to_string(weights.size()) + " weights for " +
                         std::to_string(delta.num_responses) + " responses");
  }
  if (delta.values.size() !=
      static_cast<std::size_t>(delta.num_responses) * static_cast<std::size_t>(delta.num_treatments)) {
    throw DimensionError("uplift matrix has the wrong number of entries");
  }
  Decision d;
  d.phi.assign(static_cast<std::size_t>(delta.num_treatments), 0.0);
  d.enabled.assign(static_cast<std::size_t>(delta.num_treatments), false);
  for (int k = 1; k <= delta.num_treatments; ++k) {
    double phi = 0.0;
    for (int r = 0; r < delta.num_responses; ++r) {
      phi += weights[static_cast<std::size_t>(r)] * delta.at(r, k);
    }
    d.phi[static_cast<std::size_t>(k - 1)] = phi;
    d.enabled[static_cast<std::size_t>(k - 1)] = phi > sigma;
  }
  if (mode == DecisionMode::kTopOne) {
    int best = -1;
    for (int k = 0; k < delta.num_treatments; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (d.enabled[ku] && (best < 0 || d.phi[ku] > d.phi[static_cast<std::size_t>(best)])) best = k;
    }
    for (int k = 0; k < delta.num_treatments; ++k) d.enabled[static_cast<std::size_t>(k)] = k == best;
  }
  return d;
}

std::optional<std::vector<double>> proportion_label(
    const std::vector<std::vector<double>>& exposures, int num_responses) {
  if (num_responses < 1) throw DimensionError("proportion label needs R >= 1");
  if (exposures.empty()) return std::nullopt;
  std::vector<double> counts(static_cast<std::size_t>(num_responses), 0.0);
  for (const auto& item : exposures) {
    if (static_cast<int>(item.size()) != num_responses) {
      throw DimensionError("exposure has " + std::to_string(item.size()) + " percentiles, expected " +
                           std::to_string(num_responses));
    }
    std::size_t best = 0;
    for (std::size_t r = 0; r < item.size(); ++r) {
      if (!(item[r] >= 0.0 && item[r] <= 1.0)) throw DataError("ranking percentile outside [0, 1]");
      if (item[r] > item[best]) best = r;
    }
    counts[best] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(exposures.size());
  return counts;
}

}  // namespace mtu::ddm
