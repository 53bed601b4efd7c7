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

#ifndef MTUPLIFT_MTUPLIFT_H_
#define MTUPLIFT_MTUPLIFT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MTU_API __declspec(dllexport)
#else
#define MTU_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mtu_status {
  MTU_OK = 0,
  MTU_ERR_USAGE = 1,
  MTU_ERR_DATA = 2,
  MTU_ERR_NUMERICAL = 3,
  MTU_ERR_IO = 4,
  MTU_ERR_VERSION = 5,
  MTU_ERR_STATE = 6,
  MTU_ERR_INTERNAL = 7
} mtu_status;

/* Message of the last failing call on this thread; never NULL. */
MTU_API const char* mtu_last_error(void);
MTU_API const char* mtu_status_name(mtu_status status);
MTU_API const char* mtu_version(void);
MTU_API void mtu_free_string(char* s);

/* Runs one of gen-data, train, evaluate, score, weights-train, simulate.
 * config_json, overrides_json, out_dir and seed may be NULL; overrides_json is
 * a JSON object applied on top of config_json. On return *summary_json (if
 * summary_json is not NULL) holds the command's JSON summary, to be freed with
 * mtu_free_string. A command that completes but skips records returns the
 * category of the first skip. */
MTU_API mtu_status mtu_run_command(const char* command, const char* config_json,
                                   const char* overrides_json, const char* out_dir,
                                   const uint64_t* seed, char** summary_json);

/* Resolved configuration as JSON, defaults included. */
MTU_API mtu_status mtu_resolve_config(const char* config_json, const char* overrides_json,
                                      const char* out_dir, const uint64_t* seed,
                                      char** resolved_json);

/* HUM checkpoints. Handles are immutable after load and safe to share across
 * threads. */
typedef struct mtu_hum_model mtu_hum_model;
MTU_API mtu_status mtu_hum_load(const char* path, mtu_hum_model** out);
MTU_API void mtu_hum_free(mtu_hum_model* model);
MTU_API mtu_status mtu_hum_dims(const mtu_hum_model* model, size_t* num_features,
                                int* num_treatments, int* response);
/* ids holds one discretized id per feature. treated and control receive K
 * values each. */
MTU_API mtu_status mtu_hum_infer(const mtu_hum_model* model, const int32_t* ids,
                                 size_t num_ids, double* treated, double* control,
                                 double* control_star);

/* Value-weight model. */
typedef struct mtu_weight_model mtu_weight_model;
MTU_API mtu_status mtu_weights_load(const char* path, mtu_weight_model** out);
MTU_API void mtu_weights_free(mtu_weight_model* model);
MTU_API mtu_status mtu_weights_num_responses(const mtu_weight_model* model, int* num_responses);
/* request_json is one request object; out receives R tower outputs. */
MTU_API mtu_status mtu_weights_forward(const mtu_weight_model* model, const char* request_json,
                                       double* out, size_t num_responses);

/* Score store, read-only. */
typedef struct mtu_score_store mtu_score_store;
MTU_API mtu_status mtu_store_open(const char* path, mtu_score_store** out);
MTU_API void mtu_store_free(mtu_score_store* store);
MTU_API mtu_status mtu_store_dims(const mtu_score_store* store, size_t* num_users,
                                  int* num_responses, int* num_treatments);
/* delta receives R x K values, row-major by response. */
MTU_API mtu_status mtu_store_lookup(const mtu_score_store* store, const char* user_id,
                                    double* delta, size_t size);

/* Metrics. treated holds 0/1 flags; continuous != 0 min-max adapts y. */
MTU_API mtu_status mtu_qini(const double* scores, const int* treated, const double* y, size_t n,
                            int continuous, double* coefficient);
MTU_API mtu_status mtu_auuc(const double* scores, const int* treated, const double* y, size_t n,
                            int continuous, double* coefficient);

/* Decision rule. */
MTU_API mtu_status mtu_aggregate_control(const double* estimates, size_t n, double* out);
MTU_API mtu_status mtu_relative_uplift(double treated, double control_star, double* delta);
MTU_API mtu_status mtu_value_weights(const double* outputs, size_t num_responses, double* weights);
/* delta is R x K row-major; phi and enabled receive K values. */
MTU_API mtu_status mtu_decide(const double* weights, size_t num_responses, const double* delta,
                              size_t num_treatments, double sigma, int top_one, double* phi,
                              int* enabled);

#ifdef __cplusplus
}
#endif

#endif /* MTUPLIFT_MTUPLIFT_H_ */
