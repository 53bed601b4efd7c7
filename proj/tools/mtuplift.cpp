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

// mtuplift command-line front end. Talks to the engine only through the C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mtuplift/mtuplift.h"

namespace {

enum ExitCode { kSuccess = 0, kUsage = 1, kData = 2, kNumerical = 3 };

int exit_code(mtu_status status) {
  switch (status) {
    case MTU_OK: return kSuccess;
    case MTU_ERR_USAGE: return kUsage;
    case MTU_ERR_NUMERICAL: return kNumerical;
    default: return kData;
  }
}

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-treatment uplift modelling and decision harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Seed for every random component");
  app.add_flag("--quiet", quiet, "Do not print the command summary");

  double sigma = 0.0;
  bool top_one = false;
  const char* descriptions[][2] = {
      {"gen-data", "Generate a synthetic RCT, its ground truth and request logs"},
      {"train", "Train one uplift model per response"},
      {"evaluate", "Write QINI and AUUC reports on the test split"},
      {"score", "Refresh the per-user score store"},
      {"weights-train", "Train the value-weight model on request logs"},
      {"simulate", "Replay requests through the decision rule and score policies"},
  };
  for (const auto& d : descriptions) app.add_subcommand(d[0], d[1])->fallthrough();
  CLI::App* simulate = app.get_subcommand("simulate");
  auto* sigma_opt = simulate->add_option("--sigma", sigma, "Decision threshold");
  simulate->add_flag("--top1", top_one, "Enable at most one treatment per user");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kSuccess : kUsage;
  }

  std::string config_text;
  if (!config_path.empty()) {
    const auto text = slurp(config_path);
    if (!text) {
      std::cerr << "error: cannot read " << config_path << "\n";
      return kUsage;
    }
    config_text = *text;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  std::string overrides;
  if (command == "simulate") {
    char sigma_text[64];
    std::snprintf(sigma_text, sizeof sigma_text, "%.17g", sigma);
    std::string fields;
    if (sigma_opt->count() > 0) fields += std::string("\"sigma\": ") + sigma_text;
    if (top_one) fields += std::string(fields.empty() ? "" : ", ") + "\"decision_mode\": \"top1\"";
    if (!fields.empty()) overrides = "{" + fields + "}";
  }

  char* summary = nullptr;
  const mtu_status status =
      mtu_run_command(command.c_str(), config_text.empty() ? nullptr : config_text.c_str(),
                      overrides.empty() ? nullptr : overrides.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(),
                      app.count("--seed") > 0 ? &seed : nullptr, &summary);
  if (summary != nullptr) {
    if (!quiet) std::cout << summary << "\n";
    mtu_free_string(summary);
  }
  if (status != MTU_OK) {
    std::cerr << "error: " << mtu_status_name(status) << ": " << mtu_last_error() << "\n";
  }
  return exit_code(status);
}
