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

#include "harness/config.hpp"

#include <filesystem>
#include <fstream>

#include "common/errors.hpp"

namespace mtu::harness {

namespace fs = std::filesystem;

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  generator.seed = s;
  requests.seed = s;
  hum.seed = s;
  weights.seed = s;
}

void RunConfig::validate() const {
  if (split.size() != 3) throw UsageError("split needs three ratios");
  double total = 0.0;
  for (double r : split) {
    if (!(r >= 0.0)) throw UsageError("split ratios must be >= 0");
    total += r;
  }
  if (!(total > 0.0)) throw UsageError("split ratios must not all be zero");
  if (generator.n < 1) throw UsageError("generator n must be >= 1");
  if (generator.num_treatments < 1 || generator.num_responses < 1) {
    throw UsageError("generator needs K >= 1 and R >= 1");
  }
  if (!(generator.noise_sd >= 0.0)) throw UsageError("noise_sd must be >= 0");
  if (requests.item_pool < 1 || requests.recent_length < 1 || requests.candidate_length < 1 ||
      requests.exposures < 0) {
    throw UsageError("request simulator sizes must be positive");
  }
  for (int r : responses) {
    if (r < 1) throw UsageError("response indices are 1-based");
  }
  hum.validate();
}

std::string RunConfig::path(const std::string& name) const { return (fs::path(out) / name).string(); }
std::string RunConfig::data_file() const { return data_csv.empty() ? path("data.csv") : data_csv; }
std::string RunConfig::schema_file() const {
  return schema_path.empty() ? path("schema.json") : schema_path;
}
std::string RunConfig::requests_file() const {
  return requests_path.empty() ? path("requests.jsonl") : requests_path;
}
std::string RunConfig::users_file() const { return users_csv.empty() ? data_file() : users_csv; }
std::string RunConfig::checkpoint_file(int response) const {
  return path("hum_r" + std::to_string(response) + ".json");
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json weights = ddm::to_json(c.weights);
  weights.erase("num_responses");
  weights.erase("group_vocab");
  if (!c.weights.group_vocab.empty()) weights["group_vocab"] = c.weights.group_vocab;
  return {
      {"seed", c.seed},
      {"out", c.out},
      {"data_csv", c.data_csv},
      {"schema_path", c.schema_path},
      {"requests_path", c.requests_path},
      {"users_csv", c.users_csv},
      {"generator",
       {{"n", c.generator.n},
        {"num_treatments", c.generator.num_treatments},
        {"num_responses", c.generator.num_responses},
        {"seed", c.generator.seed},
        {"noise_sd", c.generator.noise_sd},
        {"num_bins", c.generator.num_bins}}},
      {"requests",
       {{"item_pool", c.requests.item_pool},
        {"recent_length", c.requests.recent_length},
        {"candidate_length", c.requests.candidate_length},
        {"exposures", c.requests.exposures},
        {"seed", c.requests.seed}}},
      {"split", c.split},
      {"hum", hum::to_json(c.hum)},
      {"weights", std::move(weights)},
      {"responses", c.responses},
      {"sigma", c.sigma},
      {"decision_mode", c.decision_mode == ddm::DecisionMode::kTopOne ? "top1" : "all"},
  };
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const char* const kKeys[] = {
      "seed",      "out",   "data_csv", "schema_path", "requests_path", "users_csv", "generator",
      "requests",  "split", "hum",      "weights",     "responses",     "sigma",     "decision_mode"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  try {
    if (j.contains("seed")) c.set_seed(j["seed"].get<std::uint64_t>());
    c.out = j.value("out", c.out);
    c.data_csv = j.value("data_csv", c.data_csv);
    c.schema_path = j.value("schema_path", c.schema_path);
    c.requests_path = j.value("requests_path", c.requests_path);
    c.users_csv = j.value("users_csv", c.users_csv);
    if (j.contains("generator")) {
      const auto& g = j["generator"];
      c.generator.n = g.value("n", c.generator.n);
      c.generator.num_treatments = g.value("num_treatments", c.generator.num_treatments);
      c.generator.num_responses = g.value("num_responses", c.generator.num_responses);
      c.generator.seed = g.value("seed", c.generator.seed);
      c.generator.noise_sd = g.value("noise_sd", c.generator.noise_sd);
      c.generator.num_bins = g.value("num_bins", c.generator.num_bins);
    }
    if (j.contains("requests")) {
      const auto& r = j["requests"];
      c.requests.item_pool = r.value("item_pool", c.requests.item_pool);
      c.requests.recent_length = r.value("recent_length", c.requests.recent_length);
      c.requests.candidate_length = r.value("candidate_length", c.requests.candidate_length);
      c.requests.exposures = r.value("exposures", c.requests.exposures);
      c.requests.seed = r.value("seed", c.requests.seed);
    }
    c.split = j.value("split", c.split);
    if (j.contains("hum")) c.hum = hum::hum_config_from_json(j["hum"], c.hum);
    if (j.contains("weights")) c.weights = ddm::weight_config_from_json(j["weights"], c.weights);
    c.responses = j.value("responses", c.responses);
    c.sigma = j.value("sigma", c.sigma);
    if (j.contains("decision_mode")) {
      const auto mode = j["decision_mode"].get<std::string>();
      if (mode == "all") {
        c.decision_mode = ddm::DecisionMode::kAllPassing;
      } else if (mode == "top1") {
        c.decision_mode = ddm::DecisionMode::kTopOne;
      } else {
        throw UsageError("decision_mode must be 'all' or 'top1'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  return c;
}

RunConfig resolve_config(const std::optional<nlohmann::json>& file,
                         const std::optional<std::string>& out,
                         const std::optional<std::uint64_t>& seed,
                         const std::optional<nlohmann::json>& overrides) {
  RunConfig c;
  if (file) {
    c = run_config_from_json(*file, c);
  } else {
    const std::string workspace = (fs::path(out.value_or(c.out)) / "config.json").string();
    if (fs::exists(workspace)) c = run_config_from_json(read_json_file(workspace), c);
  }
  if (overrides) c = run_config_from_json(*overrides, c);
  if (out) c.out = *out;
  if (seed) c.set_seed(*seed);
  c.validate();
  return c;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace '" + path + "'");
}

}  // namespace mtu::harness
