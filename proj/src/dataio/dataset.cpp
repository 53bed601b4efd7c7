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

#include "dataio/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "common/errors.hpp"
#include "common/log.hpp"
#include "common/text.hpp"

namespace mtu::data {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

std::vector<std::size_t> Dataset::treatment_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(schema.num_treatments) + 1, 0);
  for (const auto& inst : instances) ++counts[static_cast<std::size_t>(inst.t)];
  return counts;
}

std::vector<double> RawTable::column(std::size_t f) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = feature(i, f);
  return out;
}

RawTable RawTable::subset(std::span<const std::size_t> rows) const {
  RawTable out;
  out.schema = schema;
  const std::size_t nf = schema.features.size();
  const std::size_t nr = schema.responses.size();
  out.user_ids.reserve(rows.size());
  out.features.reserve(rows.size() * nf);
  out.treatments.reserve(rows.size());
  out.responses.reserve(rows.size() * nr);
  for (std::size_t row : rows) {
    if (row >= size()) throw IndexError("row " + std::to_string(row) + " out of range");
    out.user_ids.push_back(user_ids[row]);
    out.features.insert(out.features.end(), features.begin() + static_cast<long>(row * nf),
                        features.begin() + static_cast<long>((row + 1) * nf));
    out.treatments.push_back(treatments[row]);
    out.responses.insert(out.responses.end(), responses.begin() + static_cast<long>(row * nr),
                         responses.begin() + static_cast<long>((row + 1) * nr));
  }
  return out;
}

RawTable parse_csv(std::string_view text, const DatasetSchema& schema,
                   const std::string& source) {
  schema.validate();
  RawTable table;
  table.schema = schema;

  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      line = strip_cr(text.substr(pos, end - pos));
      pos = end + 1;
      ++line_no;
      if (!line.empty()) return true;
    }
    return false;
  };

  std::string_view header_line;
  if (!next_line(header_line)) throw ParseError(source + ": missing header row");
  std::unordered_map<std::string, std::size_t> header;
  const auto header_fields = split_fields(header_line);
  for (std::size_t i = 0; i < header_fields.size(); ++i) header.emplace(trim(header_fields[i]), i);

  auto column_of = [&](const std::string& name) {
    auto it = header.find(name);
    if (it == header.end()) throw ParseError(source + ": missing column '" + name + "'");
    return it->second;
  };
  const bool has_uid = header.count(schema.user_id_column) > 0;
  const std::size_t uid_col = has_uid ? header[schema.user_id_column] : 0;
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema.features) feature_cols.push_back(column_of(f.name));
  const std::size_t t_col = column_of(schema.treatment_column);
  std::vector<std::size_t> response_cols;
  for (const auto& r : schema.responses) response_cols.push_back(column_of(r));

  std::string_view line;
  std::size_t row = 0;
  while (next_line(line)) {
    const auto cells = split_fields(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (cells.size() != header_fields.size()) {
      throw ParseError(where + ": expected " + std::to_string(header_fields.size()) +
                       " cells, found " + std::to_string(cells.size()));
    }
    auto number = [&](std::size_t col, const std::string& name) {
      auto v = parse_double(cells[col]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(where + ": non-numeric value '" + std::string(cells[col]) +
                         "' in column '" + name + "'");
      }
      return *v;
    };
    table.user_ids.push_back(has_uid ? trim(cells[uid_col]) : std::to_string(row));
    for (std::size_t f = 0; f < schema.features.size(); ++f) {
      const auto& spec = schema.features[f];
      const double v = number(feature_cols[f], spec.name);
      if (spec.kind == FeatureKind::kCategorical &&
          (v != std::floor(v) || v < 0 || v >= spec.cardinality)) {
        throw ParseError(where + ": categorical value " + format_double(v) + " of '" +
                         spec.name + "' outside [0, " + std::to_string(spec.cardinality) + ")");
      }
      table.features.push_back(v);
    }
    const double t = number(t_col, schema.treatment_column);
    if (t != std::floor(t) || t < 0 || t > schema.num_treatments) {
      throw ParseError(where + ": treatment " + format_double(t) + " outside [0, " +
                       std::to_string(schema.num_treatments) + "]");
    }
    table.treatments.push_back(static_cast<int>(t));
    for (std::size_t r = 0; r < schema.responses.size(); ++r) {
      table.responses.push_back(number(response_cols[r], schema.responses[r]));
    }
    ++row;
  }
  return table;
}

RawTable read_csv(const std::string& path, const DatasetSchema& schema) {
  RawTable table = parse_csv(read_file(path), schema, path);
  std::vector<std::size_t> counts(static_cast<std::size_t>(schema.num_treatments) + 1, 0);
  for (int t : table.treatments) ++counts[static_cast<std::size_t>(t)];
  std::string msg = "loaded " + std::to_string(table.size()) + " rows from " + path + " (";
  for (std::size_t k = 0; k < counts.size(); ++k) {
    msg += (k ? ", t" : "t") + std::to_string(k) + "=" + std::to_string(counts[k]);
  }
  log::info(msg + ")");
  return table;
}

std::string to_csv(const RawTable& table) {
  const auto& s = table.schema;
  std::string out = s.user_id_column;
  for (const auto& f : s.features) out += "," + f.name;
  out += "," + s.treatment_column;
  for (const auto& r : s.responses) out += "," + r;
  out += '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.user_ids[i];
    for (std::size_t f = 0; f < s.features.size(); ++f) {
      out += ',';
      const double v = table.feature(i, f);
      if (s.features[f].kind == FeatureKind::kCategorical) {
        out += std::to_string(static_cast<long long>(v));
      } else {
        out += format_double(v);
      }
    }
    out += ',' + std::to_string(table.treatments[i]);
    for (std::size_t r = 0; r < s.responses.size(); ++r) {
      out += ',' + format_double(table.response(i, r));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const RawTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << to_csv(table);
  if (!out) throw IoError("short write to '" + path + "'");
}

std::vector<double> discretize_fit(std::span<const double> column, int num_bins) {
  if (num_bins < 2) throw UsageError("num_bins must be >= 2");
  if (column.empty()) throw DataError("cannot fit bins on an empty column");
  std::vector<double> sorted(column.begin(), column.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw DataError("cannot fit bins on non-finite values");
  }
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> boundaries;
  for (int i = 1; i < num_bins; ++i) {
    const std::size_t p = static_cast<std::size_t>(i) * n / static_cast<std::size_t>(num_bins);
    if (p == 0 || p >= n) continue;
    const double b = 0.5 * (sorted[p - 1] + sorted[p]);
    const double floor = boundaries.empty() ? sorted.front() : boundaries.back();
    if (b > floor) boundaries.push_back(b);
  }
  if (boundaries.empty()) log::warning("constant column: discretized into a single bin");
  return boundaries;
}

std::int32_t bin_of(std::span<const double> boundaries, double value) {
  return static_cast<std::int32_t>(
      std::upper_bound(boundaries.begin(), boundaries.end(), value) - boundaries.begin());
}

DatasetSchema fit_discretizers(const RawTable& train) {
  DatasetSchema fitted = train.schema;
  for (std::size_t f = 0; f < fitted.features.size(); ++f) {
    auto& spec = fitted.features[f];
    if (spec.kind != FeatureKind::kContinuous) continue;
    const auto col = train.column(f);
    spec.boundaries = discretize_fit(col, spec.num_bins);
    spec.is_fitted = true;
  }
  return fitted;
}

Dataset discretize(const RawTable& table, const DatasetSchema& fitted) {
  if (!fitted.fitted()) throw StateError("schema has continuous features without fitted bins");
  if (fitted.structural_hash() != table.schema.structural_hash()) {
    throw VersionError("table schema does not match the fitted schema");
  }
  Dataset ds;
  ds.schema = fitted;
  ds.instances.reserve(table.size());
  const std::size_t nf = fitted.features.size();
  const std::size_t nr = fitted.responses.size();
  for (std::size_t i = 0; i < table.size(); ++i) {
    Instance inst;
    inst.user_id = table.user_ids[i];
    inst.x.resize(nf);
    for (std::size_t f = 0; f < nf; ++f) {
      const auto& spec = fitted.features[f];
      const double v = table.feature(i, f);
      if (spec.kind == FeatureKind::kCategorical) {
        if (v < 0 || v >= spec.cardinality) {
          throw IndexError("value " + format_double(v) + " of feature '" + spec.name +
                           "' outside its cardinality");
        }
        inst.x[f] = static_cast<std::int32_t>(v);
      } else {
        inst.x[f] = bin_of(spec.boundaries, v);
      }
    }
    inst.t = table.treatments[i];
    inst.y.assign(table.responses.begin() + static_cast<long>(i * nr),
                  table.responses.begin() + static_cast<long>((i + 1) * nr));
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

Dataset load_csv(const std::string& path, const DatasetSchema& fitted) {
  return discretize(read_csv(path, fitted), fitted);
}

Split split(std::size_t n, const std::vector<double>& ratios, std::uint64_t seed) {
  if (n == 0) throw DataError("cannot split an empty dataset");
  if (ratios.size() != 3) throw UsageError("split needs three ratios");
  double total = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw UsageError("split ratios must be positive");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("split ratios must sum to 1");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(n * ratios[0])));
  const auto n_val =
      std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(n * ratios[1])));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  s.validation.assign(order.begin() + static_cast<long>(n_train),
                      order.begin() + static_cast<long>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<long>(n_train + n_val), order.end());
  return s;
}

nn::Matrix embed_lookup(const nn::Param& table, std::span<const std::int32_t> ids,
                        std::string_view feature) {
  nn::Matrix out(static_cast<Eigen::Index>(ids.size()), table.value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.value.rows()) {
      throw IndexError("id " + std::to_string(ids[i]) + " out of range [0, " +
                       std::to_string(table.value.rows()) + ") for feature '" +
                       std::string(feature) + "'");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value.row(ids[i]);
  }
  return out;
}

}  // namespace mtu::data
