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

#ifndef MTUPLIFT_HARNESS_CONFIG_HPP_
#define MTUPLIFT_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dataio/synthetic.hpp"
#include "ddm/decision.hpp"
#include "ddm/request.hpp"
#include "ddm/weight_model.hpp"
#include "hum/model.hpp"
#include "json.hpp"

namespace mtu::harness {

inline constexpr int kDeskBatchSize = 1024;

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = ".";

  // Inputs; empty means the conventional file inside `out`.
  std::string data_csv;
  std::string schema_path;
  std::string requests_path;
  std::string users_csv;

  data::SyntheticConfig generator;
  ddm::RequestSimConfig requests;
  std::vector<double> split = {0.8, 0.1, 0.1};
  hum::HumConfig hum;
  ddm::WeightModelConfig weights;
  std::vector<int> responses;  // 1-based; empty trains every response

  double sigma = 0.0;
  ddm::DecisionMode decision_mode = ddm::DecisionMode::kAllPassing;

  void set_seed(std::uint64_t s);
  void validate() const;

  std::string path(const std::string& name) const;
  std::string data_file() const;
  std::string schema_file() const;
  std::string requests_file() const;
  std::string users_file() const;
  std::string truth_effects_file() const { return path("truth.csv"); }
  std::string truth_baseline_file() const { return path("baseline.csv"); }
  std::string truth_preferences_file() const { return path("preferences.csv"); }
  std::string checkpoint_file(int response) const;  // 1-based
  std::string weights_file() const { return path("weights.json"); }
  std::string store_file() const { return path("scores.csv"); }
};

nlohmann::json to_json(const RunConfig& c);
// Overlays `j` onto `base`. A top-level "seed" is propagated to every
// component before component sections are read.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

// defaults <- config file (or <out>/config.json when no file is given and one
// exists) <- overrides <- out <- seed.
RunConfig resolve_config(const std::optional<nlohmann::json>& file,
                         const std::optional<std::string>& out,
                         const std::optional<std::uint64_t>& seed,
                         const std::optional<nlohmann::json>& overrides = std::nullopt);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

}  // namespace mtu::harness

#endif  // MTUPLIFT_HARNESS_CONFIG_HPP_
