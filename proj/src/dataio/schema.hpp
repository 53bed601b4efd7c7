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

#ifndef MTUPLIFT_DATAIO_SCHEMA_HPP_
#define MTUPLIFT_DATAIO_SCHEMA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace mtu::data {

enum class FeatureKind { kCategorical, kContinuous };
enum class ResponseKind { kContinuous, kBinary };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kCategorical;
  // Categorical: number of distinct ids, values must lie in [0, cardinality).
  int cardinality = 0;
  // Continuous: requested bin count and, once fitted, strictly increasing
  // boundaries (bins = boundaries.size() + 1).
  int num_bins = 100;
  std::vector<double> boundaries;
  bool is_fitted = false;

  // Number of embedding rows this feature needs.
  int vocab_size() const;
};

struct DatasetSchema {
  std::vector<FeatureSpec> features;
  std::string user_id_column = "user_id";
  std::string treatment_column = "treatment";
  // K: treatments are 1..K, 0 is control.
  int num_treatments = 1;
  std::vector<std::string> responses;
  ResponseKind response_kind = ResponseKind::kContinuous;

  int num_features() const { return static_cast<int>(features.size()); }
  int num_responses() const { return static_cast<int>(responses.size()); }
  // True when every continuous feature carries boundaries.
  bool fitted() const;
  int response_index(const std::string& name) const;

  // Throws DataError on an inconsistent schema.
  void validate() const;

  // Hash of the structural part (names, kinds, cardinalities, K, responses);
  // fitted boundaries are excluded so raw and fitted schemas agree.
  std::string structural_hash() const;
};

nlohmann::json to_json(const DatasetSchema& schema);
DatasetSchema schema_from_json(const nlohmann::json& j);
DatasetSchema load_schema(const std::string& path);
void save_schema(const DatasetSchema& schema, const std::string& path);

// Public uplift benchmark layout: continuous f0..f11, a binary treatment
// indicator and the binary `visit` label. The file has no user id column.
DatasetSchema criteo_schema(int num_bins = 100);

}  // namespace mtu::data

#endif  // MTUPLIFT_DATAIO_SCHEMA_HPP_
