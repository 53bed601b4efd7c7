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

#ifndef MTUPLIFT_HARNESS_COMMANDS_HPP_
#define MTUPLIFT_HARNESS_COMMANDS_HPP_

#include <string>
#include <vector>

#include "common/errors.hpp"
#include "dataio/synthetic.hpp"
#include "harness/config.hpp"
#include "json.hpp"

namespace mtu::harness {

struct CommandResult {
  nlohmann::json summary;
  std::size_t skipped = 0;
  ErrorCategory skip_category = ErrorCategory::kData;
};

// Each command writes its resolved config to <out>/<command>.config.json.
CommandResult cmd_gen_data(const RunConfig& config);
CommandResult cmd_train(const RunConfig& config);
CommandResult cmd_evaluate(const RunConfig& config);
CommandResult cmd_score(const RunConfig& config);
CommandResult cmd_weights_train(const RunConfig& config);
CommandResult cmd_simulate(const RunConfig& config);

CommandResult run_command(const std::string& name, const RunConfig& config);
const std::vector<std::string>& command_names();

// Enabled-set policies scored against ground truth.
struct PolicyOutcome {
  std::string name;
  double total = 0.0;
  std::vector<double> response_totals;  // unweighted true response sums
  std::vector<std::size_t> enabled_counts;  // per treatment
};

// Weighted true outcome of one user under an enabled set: sum over r of
// preference_r * (mu_r + sum of tau_r^k over enabled k).
double realized_outcome(const data::SyntheticTruth& truth, std::size_t i,
                        const std::vector<bool>& enabled);

}  // namespace mtu::harness

#endif  // MTUPLIFT_HARNESS_COMMANDS_HPP_
