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

#ifndef MTUPLIFT_DDM_REQUEST_HPP_
#define MTUPLIFT_DDM_REQUEST_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dataio/synthetic.hpp"
#include "json.hpp"

namespace mtu::ddm {

// Online features of one user request. groups[j] holds the L^j item ids of
// feature group j (user context, recent interactions, request candidates);
// exposures holds, per exposed item, its ranking percentile for every
// response.
struct RequestContext {
  std::string user_id;
  std::vector<std::vector<std::int32_t>> groups;
  std::vector<std::vector<double>> exposures;
};

nlohmann::json to_json(const RequestContext& req);
RequestContext request_from_json(const nlohmann::json& j);

// JSON-lines, one request per line.
void write_requests(const std::vector<RequestContext>& requests, const std::string& path);
std::vector<RequestContext> read_requests(const std::string& path);

// Synthetic request world. Items live in a pool; each item has one raw score
// per response, ranked into percentiles over the pool, and its type is the
// response with the highest percentile. A user's interactions, candidates
// and exposures are drawn by first picking a type from the user's latent
// preference, then a uniform item of that type. The user context group holds
// two categorical user features (stand-ins for demographic features).
struct RequestSimConfig {
  int item_pool = 200;
  int recent_length = 10;
  int candidate_length = 20;
  int exposures = 10;
  std::uint64_t seed = 1;
};

// Vocabulary sizes of the groups produced by generate_requests.
std::vector<int> synthetic_group_vocab(const RequestSimConfig& config);

std::vector<RequestContext> generate_requests(const data::RawTable& users,
                                              const data::SyntheticTruth& truth,
                                              const RequestSimConfig& config);

}  // namespace mtu::ddm

#endif  // MTUPLIFT_DDM_REQUEST_HPP_
