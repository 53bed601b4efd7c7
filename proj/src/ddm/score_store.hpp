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

#ifndef MTUPLIFT_DDM_SCORE_STORE_HPP_
#define MTUPLIFT_DDM_SCORE_STORE_HPP_

#include <map>
#include <string>
#include <vector>

#include "ddm/decision.hpp"

namespace mtu::ddm {

// One (user, response, treatment) row. r and k are 1-based on disk.
struct ScoreRecord {
  std::string user_id;
  int r = 1;
  int k = 1;
  double y_hat_treated = 0.0;
  double y_hat_control_star = 0.0;
  double delta = 0.0;
};

struct UserScores {
  UpliftMatrix treated;
  std::vector<double> control_star;  // per response
  UpliftMatrix delta;
};

struct ScoreStore {
  int num_responses = 0;
  int num_treatments = 0;
  std::map<std::string, UserScores> users;

  const UserScores* find(const std::string& user_id) const;
  std::size_t num_records() const;
};

inline constexpr const char* kScoreStoreHeader =
    "user_id,r,k,y_hat_treated,y_hat_control_star,delta";

// Writes to a sibling temp file then renames over `path`, so readers see
// either the old or the new store.
void write_score_store(const std::vector<ScoreRecord>& records, const std::string& path);

std::vector<ScoreRecord> read_score_records(const std::string& path);
// Groups records per user; every user must carry the full R x K grid.
ScoreStore build_score_store(const std::vector<ScoreRecord>& records);
ScoreStore read_score_store(const std::string& path);

struct DecisionRecord {
  std::string user_id;
  int k = 1;
  double phi = 0.0;
  bool enabled = false;
};
void write_decisions(const std::vector<DecisionRecord>& records, const std::string& path);

}  // namespace mtu::ddm

#endif  // MTUPLIFT_DDM_SCORE_STORE_HPP_
