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

#include "harness/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "common/log.hpp"
#include "common/text.hpp"
#include "dataio/dataset.hpp"
#include "ddm/score_store.hpp"
#include "hum/train.hpp"
#include "metrics/uplift.hpp"

namespace mtu::harness {

namespace fs = std::filesystem;

namespace {

void prepare(const RunConfig& config, const std::string& command) {
  std::error_code ec;
  fs::create_directories(config.out, ec);
  if (ec) throw IoError("cannot create output directory '" + config.out + "'");
  write_json_file(to_json(config), config.path(command + ".config.json"));
}

std::vector<int> selected_responses(const RunConfig& config, int num_responses) {
  std::vector<int> out = config.responses;
  if (out.empty()) {
    out.resize(static_cast<std::size_t>(num_responses));
    std::iota(out.begin(), out.end(), 1);
  }
  for (int r : out) {
    if (r < 1 || r > num_responses) {
      throw UsageError("response " + std::to_string(r) + " outside [1, " +
                       std::to_string(num_responses) + "]");
    }
  }
  return out;
}

std::vector<hum::HumModel> load_models(const RunConfig& config, const std::vector<int>& responses) {
  std::vector<hum::HumModel> models;
  for (int r : responses) {
    models.push_back(hum::load_checkpoint(config.checkpoint_file(r)));
    if (models.back().response() != r - 1) {
      throw VersionError("checkpoint '" + config.checkpoint_file(r) + "' holds response " +
                         std::to_string(models.back().response() + 1));
    }
    if (models.size() > 1 &&
        models.back().schema().structural_hash() != models.front().schema().structural_hash()) {
      throw VersionError("checkpoints were trained on different schemas");
    }
  }
  return models;
}

bool truth_present(const RunConfig& config) {
  return fs::exists(config.truth_effects_file()) && fs::exists(config.truth_baseline_file()) &&
         fs::exists(config.truth_preferences_file());
}

data::SyntheticTruth load_truth(const RunConfig& config) {
  return data::read_truth(config.truth_effects_file(), config.truth_baseline_file(),
                          config.truth_preferences_file());
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

double realized_outcome(const data::SyntheticTruth& truth, std::size_t i,
                        const std::vector<bool>& enabled) {
  double total = 0.0;
  for (int r = 0; r < truth.num_responses; ++r) {
    double y = truth.mu(i, r);
    for (int k = 1; k <= truth.num_treatments; ++k) {
      if (enabled[static_cast<std::size_t>(k - 1)]) y += truth.tau(i, r, k);
    }
    total += truth.preference(i, r) * y;
  }
  return total;
}

CommandResult cmd_gen_data(const RunConfig& config) {
  prepare(config, "gen-data");
  const data::SyntheticRct rct = data::generate_synthetic_rct(config.generator);
  data::write_csv(rct.table, config.data_file());
  data::save_schema(rct.table.schema, config.schema_file());
  data::write_truth(rct.truth, config.truth_effects_file(), config.truth_baseline_file(),
                    config.truth_preferences_file());
  const auto requests = ddm::generate_requests(rct.table, rct.truth, config.requests);
  ddm::write_requests(requests, config.requests_file());

  // Workspace defaults picked up by later commands run without --config.
  RunConfig workspace = config;
  if (workspace.hum.batch_size == hum::HumConfig{}.batch_size) {
    workspace.hum.batch_size = kDeskBatchSize;
  }
  write_json_file(to_json(workspace), config.path("config.json"));

  CommandResult result;
  result.summary = {
      {"rows", rct.table.size()},
      {"truth_rows", rct.truth.effects.size()},
      {"requests", requests.size()},
      {"treatment_counts", [&] {
         std::vector<std::size_t> counts(static_cast<std::size_t>(config.generator.num_treatments) + 1);
         for (int t : rct.table.treatments) ++counts[static_cast<std::size_t>(t)];
         return counts;
       }()},
  };
  write_json_file(result.summary, config.path("gen_data_report.json"));
  return result;
}

CommandResult cmd_train(const RunConfig& config) {
  prepare(config, "train");
  const data::DatasetSchema schema = data::load_schema(config.schema_file());
  const data::RawTable raw = data::read_csv(config.data_file(), schema);
  const data::Split sp = data::split(raw.size(), config.split, config.hum.seed);
  if (sp.train.empty()) throw DataError("training split is empty");
  const data::RawTable train_raw = raw.subset(sp.train);
  const data::DatasetSchema fitted = data::fit_discretizers(train_raw);
  data::save_schema(fitted, config.path("schema.fitted.json"));
  const data::Dataset train_set = data::discretize(train_raw, fitted);
  const data::Dataset val_set = data::discretize(raw.subset(sp.validation), fitted);

  CommandResult result;
  result.summary = {{"train_rows", sp.train.size()},
                    {"validation_rows", sp.validation.size()},
                    {"test_rows", sp.test.size()},
                    {"models", nlohmann::json::array()}};
  for (int r : selected_responses(config, static_cast<int>(schema.responses.size()))) {
    const std::string name = schema.responses[static_cast<std::size_t>(r - 1)];
    log::info("training response " + name);
    const hum::TrainResult trained =
        hum::train(train_set, val_set, r - 1, config.hum, [&](const hum::EpochStats& s) {
          log::info(name + " epoch " + std::to_string(s.epoch) + " train " +
                    format_double(s.train_loss) + " val " + format_double(s.validation_loss) +
                    " lr " + format_double(s.learning_rate));
        });
    hum::save_checkpoint(trained.model, config.checkpoint_file(r));
    nlohmann::json history = nlohmann::json::array();
    for (const auto& s : trained.history) {
      history.push_back({{"epoch", s.epoch},
                         {"train_loss", s.train_loss},
                         {"validation_loss", s.validation_loss},
                         {"learning_rate", s.learning_rate}});
    }
    result.summary["models"].push_back({{"response", name},
                                        {"checkpoint", config.checkpoint_file(r)},
                                        {"best_epoch", trained.best_epoch},
                                        {"history", std::move(history)}});
  }
  write_json_file(result.summary, config.path("train_report.json"));
  return result;
}

CommandResult cmd_evaluate(const RunConfig& config) {
  prepare(config, "evaluate");
  const data::DatasetSchema base = data::load_schema(config.schema_file());
  const auto responses = selected_responses(config, static_cast<int>(base.responses.size()));
  const auto models = load_models(config, responses);
  const data::DatasetSchema& schema = models.front().schema();
  const data::RawTable raw = data::read_csv(config.data_file(), schema);
  const data::Split sp = data::split(raw.size(), config.split, models.front().config().seed);
  if (sp.test.empty()) throw DataError("test split is empty");
  const data::Dataset test = data::discretize(raw.subset(sp.test), schema);
  const auto rows = iota_rows(test.size());

  std::optional<data::SyntheticTruth> truth;
  std::unordered_map<std::string, std::size_t> truth_index;
  if (truth_present(config)) {
    truth = load_truth(config);
    truth_index = truth->index();
  }
  const metrics::LabelMode mode = schema.response_kind == data::ResponseKind::kBinary
                                      ? metrics::LabelMode::kBinary
                                      : metrics::LabelMode::kContinuous;
  const int K = schema.num_treatments;
  fs::create_directories(config.path("curves"));

  CommandResult result;
  nlohmann::json entries = nlohmann::json::array();
  nlohmann::json gaps = nlohmann::json::object();
  for (std::size_t m = 0; m < models.size(); ++m) {
    const hum::HumModel& model = models[m];
    const int r = responses[m];
    const std::string& name = schema.responses[static_cast<std::size_t>(r - 1)];
    const auto est = hum::infer_batch(model, test, rows);

    double gap = 0.0;
    std::size_t pairs = 0;
    for (const auto& e : est) {
      for (int a = 0; a < K; ++a) {
        for (int b = a + 1; b < K; ++b) {
          gap += std::abs(e.control[static_cast<std::size_t>(a)] - e.control[static_cast<std::size_t>(b)]);
          ++pairs;
        }
      }
    }
    gaps[name] = pairs > 0 ? gap / static_cast<double>(pairs) : 0.0;

    for (int k = 1; k <= K; ++k) {
      std::vector<double> scores, oracle, y;
      std::vector<int> treated;
      bool oracle_ok = truth.has_value();
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& inst = test.instances[i];
        if (inst.t != 0 && inst.t != k) continue;
        const auto& e = est[i];
        scores.push_back(e.treated[static_cast<std::size_t>(k - 1)] - e.control_star);
        treated.push_back(inst.t == k ? 1 : 0);
        y.push_back(inst.y[static_cast<std::size_t>(r - 1)]);
        if (oracle_ok) {
          const auto it = truth_index.find(inst.user_id);
          if (it == truth_index.end()) {
            oracle_ok = false;
          } else {
            oracle.push_back(truth->tau(it->second, r - 1, k));
          }
        }
      }
      const auto q = metrics::qini(scores, treated, y, mode);
      const auto a = metrics::auuc(scores, treated, y, mode);
      const std::string tag = "t" + std::to_string(k) + "_r" + std::to_string(r);
      metrics::export_curve(q.curve, config.path("curves/qini_" + tag + ".csv"));
      metrics::export_curve(a.curve, config.path("curves/auuc_" + tag + ".csv"));
      nlohmann::json entry = metrics::to_json(
          metrics::MetricEntry{k, name, q.coefficient, a.coefficient, q.n_treated, q.n_control});
      if (oracle_ok) {
        const double oq = metrics::qini(oracle, treated, y, mode).coefficient;
        entry["oracle_qini"] = oq;
        entry["qini_ratio"] = oq != 0.0 ? q.coefficient / oq : 0.0;
      }
      entries.push_back(std::move(entry));
    }
  }
  result.summary = {{"test_rows", test.size()},
                    {"label_mode", mode == metrics::LabelMode::kBinary ? "binary" : "continuous"},
                    {"entries", std::move(entries)},
                    {"control_gap", std::move(gaps)}};
  write_json_file(result.summary, config.path("report.json"));
  return result;
}

CommandResult cmd_score(const RunConfig& config) {
  prepare(config, "score");
  const data::DatasetSchema base = data::load_schema(config.schema_file());
  const int R = static_cast<int>(base.responses.size());
  std::vector<int> all(static_cast<std::size_t>(R));
  std::iota(all.begin(), all.end(), 1);
  const auto models = load_models(config, all);
  const data::DatasetSchema& schema = models.front().schema();
  const int K = schema.num_treatments;
  const data::Dataset users = data::discretize(data::read_csv(config.users_file(), schema), schema);
  const auto rows = iota_rows(users.size());

  std::vector<std::vector<hum::UpliftEstimates>> est;
  for (const auto& model : models) est.push_back(hum::infer_batch(model, users, rows));

  CommandResult result;
  std::vector<ddm::ScoreRecord> records;
  records.reserve(users.size() * static_cast<std::size_t>(R * K));
  std::vector<ddm::ScoreRecord> user_records;
  for (std::size_t i = 0; i < users.size(); ++i) {
    const std::string& uid = users.instances[i].user_id;
    user_records.clear();
    try {
      for (int r = 0; r < R; ++r) {
        const auto& e = est[static_cast<std::size_t>(r)][i];
        const double star = ddm::aggregate_control(e.control);
        for (int k = 1; k <= K; ++k) {
          const double treated = e.treated[static_cast<std::size_t>(k - 1)];
          if (!std::isfinite(treated) || !std::isfinite(star)) {
            throw NumericalError("non-finite estimate for user '" + uid + "'");
          }
          user_records.push_back(
              {uid, r + 1, k, treated, star, ddm::relative_uplift(treated, star, uid)});
        }
      }
    } catch (const Error& err) {
      log::warning("skipping user '" + uid + "': " + err.what());
      if (result.skipped == 0) result.skip_category = err.category();
      ++result.skipped;
      continue;
    }
    records.insert(records.end(), user_records.begin(), user_records.end());
  }
  ddm::write_score_store(records, config.store_file());
  result.summary = {{"users", users.size()},
                    {"scored", users.size() - result.skipped},
                    {"skipped", result.skipped},
                    {"records", records.size()},
                    {"store", config.store_file()}};
  write_json_file(result.summary, config.path("score_report.json"));
  return result;
}

CommandResult cmd_weights_train(const RunConfig& config) {
  prepare(config, "weights-train");
  const data::DatasetSchema schema = data::load_schema(config.schema_file());
  const auto requests = ddm::read_requests(config.requests_file());
  if (requests.empty()) throw DataError("no requests in '" + config.requests_file() + "'");

  ddm::WeightModelConfig wc = config.weights;
  wc.num_responses = static_cast<int>(schema.responses.size());
  if (wc.group_vocab.empty()) {
    wc.group_vocab.assign(requests.front().groups.size(), 1);
    for (const auto& req : requests) {
      if (req.groups.size() != wc.group_vocab.size()) {
        throw DataError("request '" + req.user_id + "' has a different number of groups");
      }
      for (std::size_t g = 0; g < req.groups.size(); ++g) {
        for (std::int32_t id : req.groups[g]) {
          wc.group_vocab[g] = std::max(wc.group_vocab[g], static_cast<int>(id) + 1);
        }
      }
    }
  }
  const ddm::WeightTrainResult trained = ddm::train_weight_model(requests, wc);
  ddm::save_weight_model(trained.model, config.weights_file());

  CommandResult result;
  result.summary = {{"requests", requests.size()},
                    {"skipped_without_exposures", trained.skipped},
                    {"train_loss", trained.train_loss},
                    {"validation_loss", trained.validation_loss},
                    {"model", config.weights_file()}};
  write_json_file(result.summary, config.path("weights_report.json"));
  return result;
}

CommandResult cmd_simulate(const RunConfig& config) {
  prepare(config, "simulate");
  const ddm::ScoreStore store = ddm::read_score_store(config.store_file());
  const ddm::WeightModel model = ddm::load_weight_model(config.weights_file());
  const auto requests = ddm::read_requests(config.requests_file());
  const data::SyntheticTruth truth = load_truth(config);
  const auto index = truth.index();
  const int R = truth.num_responses;
  const int K = truth.num_treatments;
  if (store.num_responses != R || store.num_treatments != K || model.num_responses() != R) {
    throw DataError("score store, weight model and ground truth disagree on R or K");
  }

  std::vector<ddm::RequestContext> found;
  std::vector<std::size_t> truth_rows;
  CommandResult result;
  for (const auto& req : requests) {
    const auto it = index.find(req.user_id);
    if (store.find(req.user_id) == nullptr || it == index.end()) {
      ++result.skipped;
      continue;
    }
    found.push_back(req);
    truth_rows.push_back(it->second);
  }
  if (result.skipped > 0) {
    log::warning(std::to_string(result.skipped) + " requests without scores skipped");
  }
  const auto outputs = ddm::weight_forward_batch(model, found);

  std::vector<std::string> names = {"hmum"};
  std::vector<std::vector<bool>> static_sets;
  for (int k = 1; k <= K; ++k) {
    names.push_back("all_on_t" + std::to_string(k));
    std::vector<bool> s(static_cast<std::size_t>(K), false);
    s[static_cast<std::size_t>(k - 1)] = true;
    static_sets.push_back(std::move(s));
  }
  if (K > 1) {
    names.push_back("all_on");
    static_sets.emplace_back(static_cast<std::size_t>(K), true);
  }
  names.push_back("all_off");
  static_sets.emplace_back(static_cast<std::size_t>(K), false);
  names.push_back("random");

  std::vector<PolicyOutcome> policies(names.size());
  for (std::size_t p = 0; p < names.size(); ++p) {
    policies[p].name = names[p];
    policies[p].response_totals.assign(static_cast<std::size_t>(R), 0.0);
    policies[p].enabled_counts.assign(static_cast<std::size_t>(K), 0);
  }

  std::mt19937_64 rng(config.seed ^ 0x2545f4914f6cdd1dULL);
  std::bernoulli_distribution coin(0.5);
  std::vector<ddm::DecisionRecord> decisions;
  std::ostringstream per_user;
  per_user << "user_id";
  for (const auto& n : names) per_user << ',' << n;
  per_user << '\n';

  for (std::size_t u = 0; u < found.size(); ++u) {
    const std::string& uid = found[u].user_id;
    const std::size_t i = truth_rows[u];
    const auto w = ddm::value_weights(outputs[u]);
    const ddm::Decision d = ddm::decide(w, store.find(uid)->delta, config.sigma, config.decision_mode);
    for (int k = 1; k <= K; ++k) {
      const auto kk = static_cast<std::size_t>(k - 1);
      decisions.push_back({uid, k, d.phi[kk], d.enabled[kk]});
    }
    std::vector<std::vector<bool>> sets = {d.enabled};
    sets.insert(sets.end(), static_sets.begin(), static_sets.end());
    std::vector<bool> random_set(static_cast<std::size_t>(K));
    for (std::size_t k = 0; k < random_set.size(); ++k) random_set[k] = coin(rng);
    sets.push_back(std::move(random_set));

    per_user << uid;
    for (std::size_t p = 0; p < sets.size(); ++p) {
      const double value = realized_outcome(truth, i, sets[p]);
      policies[p].total += value;
      for (int r = 0; r < R; ++r) {
        double y = truth.mu(i, r);
        for (int k = 1; k <= K; ++k) {
          if (sets[p][static_cast<std::size_t>(k - 1)]) y += truth.tau(i, r, k);
        }
        policies[p].response_totals[static_cast<std::size_t>(r)] += y;
      }
      for (std::size_t k = 0; k < sets[p].size(); ++k) {
        if (sets[p][k]) ++policies[p].enabled_counts[k];
      }
      per_user << ',' << format_double(value);
    }
    per_user << '\n';
  }
  ddm::write_decisions(decisions, config.path("decisions.csv"));
  {
    std::ofstream out(config.path("policy_outcomes.csv"), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write policy outcomes");
    out << per_user.str();
  }

  const double n = static_cast<double>(std::max<std::size_t>(found.size(), 1));
  const PolicyOutcome& off = policies[names.size() - 2];
  nlohmann::json report_policies = nlohmann::json::array();
  bool hmum_best = true;
  for (const auto& p : policies) {
    std::vector<double> means, deltas, rates;
    for (int r = 0; r < R; ++r) {
      const auto rr = static_cast<std::size_t>(r);
      means.push_back(p.response_totals[rr] / n);
      deltas.push_back((p.response_totals[rr] - off.response_totals[rr]) / n);
    }
    for (std::size_t c : p.enabled_counts) rates.push_back(static_cast<double>(c) / n);
    if (p.total > policies.front().total) hmum_best = false;
    report_policies.push_back({{"name", p.name},
                               {"total", p.total},
                               {"mean", p.total / n},
                               {"response_means", means},
                               {"response_deltas", deltas},
                               {"enabled_rate", rates}});
  }
  result.summary = {{"users", found.size()},
                    {"missing", result.skipped},
                    {"sigma", config.sigma},
                    {"decision_mode", config.decision_mode == ddm::DecisionMode::kTopOne ? "top1" : "all"},
                    {"policies", std::move(report_policies)},
                    {"hmum_best", hmum_best}};
  write_json_file(result.summary, config.path("policy_report.json"));
  // Missing users are reported, not fatal.
  result.skipped = 0;
  return result;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"gen-data", "train",         "evaluate",
                                                 "score",    "weights-train", "simulate"};
  return names;
}

CommandResult run_command(const std::string& name, const RunConfig& config) {
  if (name == "gen-data") return cmd_gen_data(config);
  if (name == "train") return cmd_train(config);
  if (name == "evaluate") return cmd_evaluate(config);
  if (name == "score") return cmd_score(config);
  if (name == "weights-train") return cmd_weights_train(config);
  if (name == "simulate") return cmd_simulate(config);
  throw UsageError("unknown command '" + name + "'");
}

}  // namespace mtu::harness
