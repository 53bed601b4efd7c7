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

#ifndef MTUPLIFT_DATAIO_DATASET_HPP_
#define MTUPLIFT_DATAIO_DATASET_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dataio/schema.hpp"
#include "nn/tensor.hpp"

namespace mtu::data {

// One RCT record after discretization: every feature is an embedding id.
struct Instance {
  std::string user_id;
  std::vector<std::int32_t> x;
  int t = 0;
  std::vector<double> y;
};

struct Dataset {
  DatasetSchema schema;
  std::vector<Instance> instances;

  std::size_t size() const { return instances.size(); }
  // counts[k] = number of instances with treatment k, k in [0, K].
  std::vector<std::size_t> treatment_counts() const;
};

// Undiscretized rows as read from CSV. Feature values are stored row-major;
// categorical columns hold their integer ids as doubles.
struct RawTable {
  DatasetSchema schema;
  std::vector<std::string> user_ids;
  std::vector<double> features;
  std::vector<int> treatments;
  std::vector<double> responses;

  std::size_t size() const { return user_ids.size(); }
  double feature(std::size_t row, std::size_t f) const {
    return features[row * schema.features.size() + f];
  }
  double response(std::size_t row, std::size_t r) const {
    return responses[row * schema.responses.size() + r];
  }
  std::vector<double> column(std::size_t f) const;
  RawTable subset(std::span<const std::size_t> rows) const;
};

// Reads `user_id,<features...>,treatment,<responses...>` by header name; extra
// columns are ignored. When the schema's user id column is absent from the
// header, the 0-based row number is used as the id.
RawTable read_csv(const std::string& path, const DatasetSchema& schema);
RawTable parse_csv(std::string_view text, const DatasetSchema& schema,
                   const std::string& source = "<memory>");
void write_csv(const RawTable& table, const std::string& path);
std::string to_csv(const RawTable& table);

// Equal-frequency boundaries for `num_bins` bins. A constant column yields no
// boundaries (one bin) and a warning.
std::vector<double> discretize_fit(std::span<const double> column, int num_bins);
std::int32_t bin_of(std::span<const double> boundaries, double value);

// Fits every continuous feature of `train` and returns the fitted schema.
DatasetSchema fit_discretizers(const RawTable& train);
Dataset discretize(const RawTable& table, const DatasetSchema& fitted);
Dataset load_csv(const std::string& path, const DatasetSchema& fitted);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

// Seeded shuffle then cut by `ratios` (train, validation, test).
Split split(std::size_t n, const std::vector<double>& ratios, std::uint64_t seed);

// Rows of `table` selected by `ids`; `feature` labels index errors.
nn::Matrix embed_lookup(const nn::Param& table, std::span<const std::int32_t> ids,
                        std::string_view feature);

}  // namespace mtu::data

#endif  // MTUPLIFT_DATAIO_DATASET_HPP_
