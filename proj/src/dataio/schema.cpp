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

#include "dataio/schema.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "common/errors.hpp"

namespace mtu::data {
namespace {

const char* kind_name(FeatureKind k) {
  return k == FeatureKind::kCategorical ? "categorical" : "continuous";
}

}  // namespace

int FeatureSpec::vocab_size() const {
  if (kind == FeatureKind::kCategorical) return cardinality;
  return static_cast<int>(boundaries.size()) + 1;
}

bool DatasetSchema::fitted() const {
  for (const auto& f : features) {
    if (f.kind == FeatureKind::kContinuous && !f.is_fitted) return false;
  }
  return true;
}

int DatasetSchema::response_index(const std::string& name) const {
  for (std::size_t r = 0; r < responses.size(); ++r) {
    if (responses[r] == name) return static_cast<int>(r);
  }
  throw DataError("unknown response '" + name + "'");
}

void DatasetSchema::validate() const {
  if (num_treatments < 1) throw DataError("schema needs at least one treatment");
  if (responses.empty()) throw DataError("schema needs at least one response");
  if (features.empty()) throw DataError("schema needs at least one feature");
  std::set<std::string> names{user_id_column, treatment_column};
  for (const auto& r : responses) {
    if (!names.insert(r).second) throw DataError("duplicate column '" + r + "'");
  }
  for (const auto& f : features) {
    if (!names.insert(f.name).second) throw DataError("duplicate column '" + f.name + "'");
    if (f.kind == FeatureKind::kCategorical && f.cardinality < 1) {
      throw DataError("categorical feature '" + f.name + "' needs cardinality >= 1");
    }
    if (f.kind == FeatureKind::kContinuous) {
      if (f.num_bins < 2) throw DataError("feature '" + f.name + "' needs num_bins >= 2");
      for (std::size_t i = 1; i < f.boundaries.size(); ++i) {
        if (!(f.boundaries[i] > f.boundaries[i - 1])) {
          throw DataError("bin boundaries of '" + f.name + "' are not strictly increasing");
        }
      }
    }
  }
}

std::string DatasetSchema::structural_hash() const {
  nlohmann::json j = to_json(*this);
  for (auto& f : j["features"]) f.erase("boundaries");
  const std::string text = j.dump();
  // FNV-1a, 64 bit.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json to_json(const DatasetSchema& s) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : s.features) {
    nlohmann::json jf{{"name", f.name}, {"kind", kind_name(f.kind)}};
    if (f.kind == FeatureKind::kCategorical) {
      jf["cardinality"] = f.cardinality;
    } else {
      jf["num_bins"] = f.num_bins;
      if (f.is_fitted) jf["boundaries"] = f.boundaries;
    }
    features.push_back(std::move(jf));
  }
  return {
      {"user_id_column", s.user_id_column},
      {"treatment_column", s.treatment_column},
      {"num_treatments", s.num_treatments},
      {"responses", s.responses},
      {"response_kind", s.response_kind == ResponseKind::kBinary ? "binary" : "continuous"},
      {"features", std::move(features)},
  };
}

DatasetSchema schema_from_json(const nlohmann::json& j) {
  DatasetSchema s;
  try {
    s.user_id_column = j.value("user_id_column", std::string("user_id"));
    s.treatment_column = j.value("treatment_column", std::string("treatment"));
    s.num_treatments = j.at("num_treatments").get<int>();
    s.responses = j.at("responses").get<std::vector<std::string>>();
    const std::string kind = j.value("response_kind", std::string("continuous"));
    if (kind == "binary") {
      s.response_kind = ResponseKind::kBinary;
    } else if (kind == "continuous") {
      s.response_kind = ResponseKind::kContinuous;
    } else {
      throw DataError("unknown response_kind '" + kind + "'");
    }
    for (const auto& jf : j.at("features")) {
      FeatureSpec f;
      f.name = jf.at("name").get<std::string>();
      const std::string fk = jf.at("kind").get<std::string>();
      if (fk == "categorical") {
        f.kind = FeatureKind::kCategorical;
        f.cardinality = jf.at("cardinality").get<int>();
      } else if (fk == "continuous") {
        f.kind = FeatureKind::kContinuous;
        f.num_bins = jf.value("num_bins", 100);
        if (jf.contains("boundaries")) {
          f.boundaries = jf["boundaries"].get<std::vector<double>>();
          f.is_fitted = true;
        }
      } else {
        throw DataError("unknown feature kind '" + fk + "' for '" + f.name + "'");
      }
      s.features.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed schema: ") + e.what());
  }
  s.validate();
  return s;
}

DatasetSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("schema '" + path + "' is not valid JSON: " + e.what());
  }
  return schema_from_json(j);
}

void save_schema(const DatasetSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schema '" + path + "'");
  out << to_json(schema).dump(2) << '\n';
}

DatasetSchema criteo_schema(int num_bins) {
  DatasetSchema s;
  for (int i = 0; i < 12; ++i) {
    FeatureSpec f;
    f.name = "f" + std::to_string(i);
    f.kind = FeatureKind::kContinuous;
    f.num_bins = num_bins;
    s.features.push_back(std::move(f));
  }
  s.num_treatments = 1;
  s.responses = {"visit"};
  s.response_kind = ResponseKind::kBinary;
  s.validate();
  return s;
}

}  // namespace mtu::data
