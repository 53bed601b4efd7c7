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

#ifndef MTUPLIFT_DATAIO_SYNTHETIC_HPP_
#define MTUPLIFT_DATAIO_SYNTHETIC_HPP_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dataio/dataset.hpp"

namespace mtu::data {

struct SyntheticConfig {
  std::size_t n = 100000;
  int num_treatments = 2;
  int num_responses = 2;
  std::uint64_t seed = 1;
  double noise_sd = 0.5;
  int num_bins = 100;
};

// Ground truth of a generated RCT. Never given to models; only oracles and
// the policy simulator read it. Responses r and treatments k are 0-based and
// 1-based respectively, matching Instance::t.
struct SyntheticTruth {
  int num_treatments = 0;
  int num_responses = 0;
  std::vector<std::string> user_ids;
  std::vector<double> baseline;     // n x R, mu_r(x)
  std::vector<double> effects;      // n x R x K, tau_r^k(x)
  std::vector<double> preferences;  // n x R, latent response preference, sums to 1

  std::size_t size() const { return user_ids.size(); }
  double mu(std::size_t i, int r) const {
    return baseline[i * static_cast<std::size_t>(num_responses) + static_cast<std::size_t>(r)];
  }
  double tau(std::size_t i, int r, int k) const {
    const auto R = static_cast<std::size_t>(num_responses);
    const auto K = static_cast<std::size_t>(num_treatments);
    return effects[(i * R + static_cast<std::size_t>(r)) * K + static_cast<std::size_t>(k - 1)];
  }
  double preference(std::size_t i, int r) const {
    return preferences[i * static_cast<std::size_t>(num_responses) + static_cast<std::size_t>(r)];
  }
  // user id -> row.
  std::unordered_map<std::string, std::size_t> index() const;
};

struct SyntheticRct {
  RawTable table;
  SyntheticTruth truth;
};

// Five categorical features c0..c4 (cardinality 20) and five continuous
// features u0..u4 ~ U(0, 1); treatment uniform over {0..K}.
//   mu_r    = 3 + sum_j a_rj u_j + b_r c1 / 19 + c_r u0 u1   (coefficients per seed)
//   tau_r^k = (-1)^(r + k - 1) s(x) (0.3 + 0.7 logistic(8 (u_j - 0.5))),
//             s(x) = +1 if c0 < 10 else -1, j = (r + 2 (k - 1) + 1) mod 5
// so treatment 1 raises response 0 and lowers response 1 for half of the
// users, treatment 2 the reverse.
SyntheticRct generate_synthetic_rct(const SyntheticConfig& config);

DatasetSchema synthetic_schema(int num_treatments, int num_responses, int num_bins = 100);

// Sidecars: `user_id,r,k,tau`, `user_id,r,mu`, `user_id,r,weight`
// (r and k 1-based in files).
void write_truth(const SyntheticTruth& truth, const std::string& effects_path,
                 const std::string& baseline_path, const std::string& preferences_path);
SyntheticTruth read_truth(const std::string& effects_path, const std::string& baseline_path,
                          const std::string& preferences_path);

}  // namespace mtu::data

#endif  // MTUPLIFT_DATAIO_SYNTHETIC_HPP_
