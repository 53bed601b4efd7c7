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

#ifndef MTUPLIFT_DDM_DECISION_HPP_
#define MTUPLIFT_DDM_DECISION_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddm/aggregate.hpp"

namespace mtu::ddm {

// Control estimates whose magnitude is below this are rejected.
inline constexpr double kDenominatorFloor = 1e-6;

// delta = treated / control_star - 1. Throws DenominatorError (carrying
// `user_id`) when |control_star| < kDenominatorFloor.
double relative_uplift(double treated, double control_star, const std::string& user_id = "");

// w_r = o_r / sum(o); uniform 1/R when the sum is below 1e-12.
std::vector<double> value_weights(std::span<const double> tower_outputs);

// Row-major R x K matrix of relative uplifts, delta(r, k - 1).
struct UpliftMatrix {
  int num_responses = 0;
  int num_treatments = 0;
  std::vector<double> values;

  double at(int r, int k) const {
    return values[static_cast<std::size_t>(r * num_treatments + (k - 1))];
  }
  double& at(int r, int k) { return values[static_cast<std::size_t>(r * num_treatments + (k - 1))]; }
};

enum class DecisionMode {
  kAllPassing,  // every treatment with phi^k > sigma
  kTopOne,      // only the passing treatment with the largest phi (lowest k on ties)
};

struct Decision {
  std::vector<double> phi;    // phi^k, index k - 1
  std::vector<bool> enabled;  // index k - 1
};

// phi^k = sum_r w_r delta_r^k; treatment k is enabled iff phi^k > sigma.
Decision decide(std::span<const double> weights, const UpliftMatrix& delta, double sigma,
                DecisionMode mode = DecisionMode::kAllPassing);

// Proportion label from an exposure log. Each exposed item (one row of R
// ranking percentiles) counts for the response with the highest percentile,
// ties to the lowest index. Returns nullopt for an empty log.
std::optional<std::vector<double>> proportion_label(
    const std::vector<std::vector<double>>& exposures, int num_responses);

}  // namespace mtu::ddm

#endif  // MTUPLIFT_DDM_DECISION_HPP_
