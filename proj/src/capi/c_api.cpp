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

#include "mtuplift/mtuplift.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "common/errors.hpp"
#include "ddm/decision.hpp"
#include "ddm/score_store.hpp"
#include "ddm/weight_model.hpp"
#include "harness/commands.hpp"
#include "harness/config.hpp"
#include "hum/train.hpp"
#include "metrics/uplift.hpp"

struct mtu_hum_model {
  mtu::hum::HumModel model;
};

struct mtu_weight_model {
  mtu::ddm::WeightModel model;
};

struct mtu_score_store {
  mtu::ddm::ScoreStore store;
};

namespace {

thread_local std::string last_error;

mtu_status status_of(mtu::ErrorCategory c) {
  switch (c) {
    case mtu::ErrorCategory::kUsage: return MTU_ERR_USAGE;
    case mtu::ErrorCategory::kData: return MTU_ERR_DATA;
    case mtu::ErrorCategory::kNumerical: return MTU_ERR_NUMERICAL;
    case mtu::ErrorCategory::kIo: return MTU_ERR_IO;
    case mtu::ErrorCategory::kVersion: return MTU_ERR_VERSION;
    case mtu::ErrorCategory::kState: return MTU_ERR_STATE;
  }
  return MTU_ERR_INTERNAL;
}

template <typename F>
mtu_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const mtu::Error& e) {
    last_error = e.what();
    return status_of(e.category());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MTU_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MTU_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return MTU_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw mtu::UsageError(what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::optional<nlohmann::json> parse_config(const char* text, const char* what) {
  if (text == nullptr) return std::nullopt;
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw mtu::UsageError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

mtu::harness::RunConfig resolve(const char* config_json, const char* overrides_json,
                                const char* out_dir, const uint64_t* seed) {
  const auto file = parse_config(config_json, "config");
  const auto overrides = parse_config(overrides_json, "overrides");
  std::optional<std::string> out;
  if (out_dir != nullptr) out = std::string(out_dir);
  std::optional<std::uint64_t> s;
  if (seed != nullptr) s = *seed;
  return mtu::harness::resolve_config(file, out, s, overrides);
}

}  // namespace

extern "C" {

const char* mtu_last_error(void) { return last_error.c_str(); }

const char* mtu_status_name(mtu_status status) {
  switch (status) {
    case MTU_OK: return "ok";
    case MTU_ERR_USAGE: return "usage error";
    case MTU_ERR_DATA: return "data error";
    case MTU_ERR_NUMERICAL: return "numerical error";
    case MTU_ERR_IO: return "io error";
    case MTU_ERR_VERSION: return "version error";
    case MTU_ERR_STATE: return "state error";
    case MTU_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mtu_version(void) { return "0.1.0"; }

void mtu_free_string(char* s) { std::free(s); }

mtu_status mtu_run_command(const char* command, const char* config_json,
                           const char* overrides_json, const char* out_dir, const uint64_t* seed,
                           char** summary_json) {
  if (summary_json != nullptr) *summary_json = nullptr;
  return guarded([&] {
    require(command != nullptr, "command is NULL");
    const auto config = resolve(config_json, overrides_json, out_dir, seed);
    const auto result = mtu::harness::run_command(command, config);
    if (summary_json != nullptr) *summary_json = dup_string(result.summary.dump(2));
    if (result.skipped > 0) {
      last_error = std::to_string(result.skipped) + " records skipped";
      return status_of(result.skip_category);
    }
    return MTU_OK;
  });
}

mtu_status mtu_resolve_config(const char* config_json, const char* overrides_json,
                              const char* out_dir, const uint64_t* seed, char** resolved_json) {
  return guarded([&] {
    require(resolved_json != nullptr, "resolved_json is NULL");
    *resolved_json = dup_string(mtu::harness::to_json(resolve(config_json, overrides_json, out_dir, seed)).dump(2));
    return MTU_OK;
  });
}

mtu_status mtu_hum_load(const char* path, mtu_hum_model** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "NULL argument");
    *out = new mtu_hum_model{mtu::hum::load_checkpoint(path)};
    return MTU_OK;
  });
}

void mtu_hum_free(mtu_hum_model* model) { delete model; }

mtu_status mtu_hum_dims(const mtu_hum_model* model, size_t* num_features, int* num_treatments,
                        int* response) {
  return guarded([&] {
    require(model != nullptr, "model is NULL");
    if (num_features != nullptr) *num_features = model->model.schema().features.size();
    if (num_treatments != nullptr) *num_treatments = model->model.num_treatments();
    if (response != nullptr) *response = model->model.response();
    return MTU_OK;
  });
}

mtu_status mtu_hum_infer(const mtu_hum_model* model, const int32_t* ids, size_t num_ids,
                         double* treated, double* control, double* control_star) {
  return guarded([&] {
    require(model != nullptr && ids != nullptr, "NULL argument");
    if (num_ids != model->model.schema().features.size()) {
      throw mtu::DimensionError("expected " +
                                std::to_string(model->model.schema().features.size()) +
                                " feature ids, got " + std::to_string(num_ids));
    }
    const auto e = mtu::hum::infer_all_treatments(model->model, {ids, num_ids});
    for (std::size_t k = 0; k < e.treated.size(); ++k) {
      if (treated != nullptr) treated[k] = e.treated[k];
      if (control != nullptr) control[k] = e.control[k];
    }
    if (control_star != nullptr) *control_star = e.control_star;
    return MTU_OK;
  });
}

mtu_status mtu_weights_load(const char* path, mtu_weight_model** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "NULL argument");
    *out = new mtu_weight_model{mtu::ddm::load_weight_model(path)};
    return MTU_OK;
  });
}

void mtu_weights_free(mtu_weight_model* model) { delete model; }

mtu_status mtu_weights_num_responses(const mtu_weight_model* model, int* num_responses) {
  return guarded([&] {
    require(model != nullptr && num_responses != nullptr, "NULL argument");
    *num_responses = model->model.num_responses();
    return MTU_OK;
  });
}

mtu_status mtu_weights_forward(const mtu_weight_model* model, const char* request_json,
                               double* out, size_t num_responses) {
  return guarded([&] {
    require(model != nullptr && request_json != nullptr && out != nullptr, "NULL argument");
    if (num_responses != static_cast<size_t>(model->model.num_responses())) {
      throw mtu::DimensionError("output buffer does not match the number of responses");
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(request_json);
    } catch (const nlohmann::json::exception& e) {
      throw mtu::ParseError(std::string("request is not valid JSON: ") + e.what());
    }
    const auto o = mtu::ddm::weight_forward(model->model, mtu::ddm::request_from_json(j));
    std::copy(o.begin(), o.end(), out);
    return MTU_OK;
  });
}

mtu_status mtu_store_open(const char* path, mtu_score_store** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "NULL argument");
    *out = new mtu_score_store{mtu::ddm::read_score_store(path)};
    return MTU_OK;
  });
}

void mtu_store_free(mtu_score_store* store) { delete store; }

mtu_status mtu_store_dims(const mtu_score_store* store, size_t* num_users, int* num_responses,
                          int* num_treatments) {
  return guarded([&] {
    require(store != nullptr, "store is NULL");
    if (num_users != nullptr) *num_users = store->store.users.size();
    if (num_responses != nullptr) *num_responses = store->store.num_responses;
    if (num_treatments != nullptr) *num_treatments = store->store.num_treatments;
    return MTU_OK;
  });
}

mtu_status mtu_store_lookup(const mtu_score_store* store, const char* user_id, double* delta,
                            size_t size) {
  return guarded([&] {
    require(store != nullptr && user_id != nullptr && delta != nullptr, "NULL argument");
    const auto* scores = store->store.find(user_id);
    if (scores == nullptr) throw mtu::DataError(std::string("user '") + user_id + "' not in store");
    if (size != scores->delta.values.size()) {
      throw mtu::DimensionError("delta buffer must hold R x K values");
    }
    std::copy(scores->delta.values.begin(), scores->delta.values.end(), delta);
    return MTU_OK;
  });
}

namespace {

mtu_status metric(bool is_qini, const double* scores, const int* treated, const double* y,
                  size_t n, int continuous, double* coefficient) {
  return guarded([&] {
    require(scores != nullptr && treated != nullptr && y != nullptr && coefficient != nullptr,
            "NULL argument");
    const auto mode =
        continuous != 0 ? mtu::metrics::LabelMode::kContinuous : mtu::metrics::LabelMode::kBinary;
    const std::span<const double> s(scores, n);
    const std::span<const int> t(treated, n);
    const std::span<const double> l(y, n);
    *coefficient = is_qini ? mtu::metrics::qini(s, t, l, mode).coefficient
                           : mtu::metrics::auuc(s, t, l, mode).coefficient;
    return MTU_OK;
  });
}

}  // namespace

mtu_status mtu_qini(const double* scores, const int* treated, const double* y, size_t n,
                    int continuous, double* coefficient) {
  return metric(true, scores, treated, y, n, continuous, coefficient);
}

mtu_status mtu_auuc(const double* scores, const int* treated, const double* y, size_t n,
                    int continuous, double* coefficient) {
  return metric(false, scores, treated, y, n, continuous, coefficient);
}

mtu_status mtu_aggregate_control(const double* estimates, size_t n, double* out) {
  return guarded([&] {
    require(out != nullptr && (estimates != nullptr || n == 0), "NULL argument");
    *out = mtu::ddm::aggregate_control({estimates, n});
    return MTU_OK;
  });
}

mtu_status mtu_relative_uplift(double treated, double control_star, double* delta) {
  return guarded([&] {
    require(delta != nullptr, "NULL argument");
    *delta = mtu::ddm::relative_uplift(treated, control_star);
    return MTU_OK;
  });
}

mtu_status mtu_value_weights(const double* outputs, size_t num_responses, double* weights) {
  return guarded([&] {
    require(outputs != nullptr && weights != nullptr, "NULL argument");
    const auto w = mtu::ddm::value_weights({outputs, num_responses});
    std::copy(w.begin(), w.end(), weights);
    return MTU_OK;
  });
}

mtu_status mtu_decide(const double* weights, size_t num_responses, const double* delta,
                      size_t num_treatments, double sigma, int top_one, double* phi,
                      int* enabled) {
  return guarded([&] {
    require(weights != nullptr && delta != nullptr, "NULL argument");
    mtu::ddm::UpliftMatrix m{static_cast<int>(num_responses), static_cast<int>(num_treatments),
                             std::vector<double>(delta, delta + num_responses * num_treatments)};
    const auto d = mtu::ddm::decide(
        {weights, num_responses}, m, sigma,
        top_one != 0 ? mtu::ddm::DecisionMode::kTopOne : mtu::ddm::DecisionMode::kAllPassing);
    for (std::size_t k = 0; k < num_treatments; ++k) {
      if (phi != nullptr) phi[k] = d.phi[k];
      if (enabled != nullptr) enabled[k] = d.enabled[k] ? 1 : 0;
    }
    return MTU_OK;
  });
}

}  // extern "C"
