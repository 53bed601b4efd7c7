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

#include "dataio/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "common/errors.hpp"
#include "common/text.hpp"

namespace mtu::data {
namespace {

constexpr int kCategorical = 5;
constexpr int kContinuous = 5;
constexpr int kCardinality = 20;

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string user_name(std::size_t i, std::size_t n) {
  const int width = static_cast<int>(std::to_string(n > 0 ? n - 1 : 0).size());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "u%0*zu", width, i);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rows of a small truth CSV with a fixed header, as string fields.
std::vector<std::vector<std::string>> read_rows(const std::string& path,
                                                const std::string& header) {
  const std::string text = slurp(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw ParseError(path + ": expected header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  const std::size_t width = split_fields(header).size();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": wrong number of cells");
    }
    std::vector<std::string> row;
    for (auto f : fields) row.emplace_back(f);
    rows.push_back(std::move(row));
  }
  return rows;
}

double number_at(const std::vector<std::string>& row, std::size_t col, const std::string& where) {
  auto v = parse_double(row[col]);
  if (!v) throw ParseError(where + ": non-numeric cell '" + row[col] + "'");
  return *v;
}

}  // namespace

std::unordered_map<std::string, std::size_t> SyntheticTruth::index() const {
  std::unordered_map<std::string, std::size_t> out;
  out.reserve(user_ids.size());
  for (std::size_t i = 0; i < user_ids.size(); ++i) out.emplace(user_ids[i], i);
  return out;
}

DatasetSchema synthetic_schema(int num_treatments, int num_responses, int num_bins) {
  DatasetSchema s;
  s.num_treatments = num_treatments;
  for (int r = 0; r < num_responses; ++r) s.responses.push_back("y" + std::to_string(r + 1));
  for (int j = 0; j < kCategorical; ++j) {
    FeatureSpec f;
    f.name = "c" + std::to_string(j);
    f.kind = FeatureKind::kCategorical;
    f.cardinality = kCardinality;
    s.features.push_back(f);
  }
  for (int j = 0; j < kContinuous; ++j) {
    FeatureSpec f;
    f.name = "u" + std::to_string(j);
    f.kind = FeatureKind::kContinuous;
    f.num_bins = num_bins;
    s.features.push_back(f);
  }
  return s;
}

SyntheticRct generate_synthetic_rct(const SyntheticConfig& config) {
  if (config.n < 1) throw UsageError("synthetic RCT needs n >= 1");
  if (config.num_treatments < 1) throw UsageError("synthetic RCT needs K >= 1");
  if (config.num_responses < 1) throw UsageError("synthetic RCT needs R >= 1");
  if (config.noise_sd < 0.0) throw UsageError("noise_sd must be >= 0");

  const int K = config.num_treatments;
  const int R = config.num_responses;
  const std::size_t n = config.n;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> category(0, kCardinality - 1);
  std::uniform_int_distribution<int> arm(0, K);
  std::normal_distribution<double> noise(0.0, 1.0);

  // Baseline coefficients, fixed per seed.
  std::vector<double> lin(static_cast<std::size_t>(R * kContinuous));
  std::vector<double> cat_coef(static_cast<std::size_t>(R));
  std::vector<double> inter(static_cast<std::size_t>(R));
  for (auto& a : lin) a = -0.3 + 0.6 * unit(rng);
  for (auto& b : cat_coef) b = -0.3 + 0.6 * unit(rng);
  for (auto& c : inter) c = -0.5 + unit(rng);

  SyntheticRct out;
  RawTable& table = out.table;
  table.schema = synthetic_schema(K, R, config.num_bins);
  SyntheticTruth& truth = out.truth;
  truth.num_treatments = K;
  truth.num_responses = R;

  const std::size_t nf = kCategorical + kContinuous;
  table.user_ids.reserve(n);
  table.features.reserve(n * nf);
  table.treatments.reserve(n);
  table.responses.reserve(n * static_cast<std::size_t>(R));
  truth.user_ids.reserve(n);
  truth.baseline.reserve(n * static_cast<std::size_t>(R));
  truth.effects.reserve(n * static_cast<std::size_t>(R * K));
  truth.preferences.reserve(n * static_cast<std::size_t>(R));

  int cats[kCategorical];
  double u[kContinuous];
  for (std::size_t i = 0; i < n; ++i) {
    for (int& c : cats) c = category(rng);
    for (double& v : u) v = unit(rng);
    const int t = arm(rng);
    const double sign = cats[0] < kCardinality / 2 ? 1.0 : -1.0;

    const std::string uid = user_name(i, n);
    table.user_ids.push_back(uid);
    truth.user_ids.push_back(uid);
    for (int c : cats) table.features.push_back(c);
    for (double v : u) table.features.push_back(v);
    table.treatments.push_back(t);

    double pref_max = -1e300;
    std::vector<double> pref(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
      pref[static_cast<std::size_t>(r)] = 5.0 * (u[(4 * r) % kContinuous] - 0.5);
      pref_max = std::max(pref_max, pref[static_cast<std::size_t>(r)]);
    }
    double pref_sum = 0.0;
    for (auto& p : pref) pref_sum += (p = std::exp(p - pref_max));

    for (int r = 0; r < R; ++r) {
      const auto ru = static_cast<std::size_t>(r);
      double mu = 3.0 + cat_coef[ru] * cats[1] / (kCardinality - 1.0) + inter[ru] * u[0] * u[1];
      for (int j = 0; j < kContinuous; ++j) {
        mu += lin[ru * kContinuous + static_cast<std::size_t>(j)] * u[j];
      }
      truth.baseline.push_back(mu);
      truth.preferences.push_back(pref[ru] / pref_sum);
      double observed = mu;
      for (int k = 1; k <= K; ++k) {
        const int j = (r + 2 * (k - 1) + 1) % kContinuous;
        const double magnitude = 0.3 + 0.7 * logistic(8.0 * (u[j] - 0.5));
        const double direction = ((r + k - 1) % 2 == 0) ? 1.0 : -1.0;
        const double tau = direction * sign * magnitude;
        truth.effects.push_back(tau);
        if (k == t) observed += tau;
      }
      table.responses.push_back(observed + config.noise_sd * noise(rng));
    }
  }
  return out;
}

void write_truth(const SyntheticTruth& truth, const std::string& effects_path,
                 const std::string& baseline_path, const std::string& preferences_path) {
  std::ofstream fe(effects_path, std::ios::binary);
  std::ofstream fb(baseline_path, std::ios::binary);
  std::ofstream fp(preferences_path, std::ios::binary);
  if (!fe || !fb || !fp) throw IoError("cannot write truth sidecars");
  fe << "user_id,r,k,tau\n";
  fb << "user_id,r,mu\n";
  fp << "user_id,r,weight\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (int r = 0; r < truth.num_responses; ++r) {
      const std::string prefix = truth.user_ids[i] + "," + std::to_string(r + 1) + ",";
      fb << prefix << format_double(truth.mu(i, r)) << '\n';
      fp << prefix << format_double(truth.preference(i, r)) << '\n';
      for (int k = 1; k <= truth.num_treatments; ++k) {
        fe << prefix << k << ',' << format_double(truth.tau(i, r, k)) << '\n';
      }
    }
  }
  if (!fe || !fb || !fp) throw IoError("short write of truth sidecars");
}

SyntheticTruth read_truth(const std::string& effects_path, const std::string& baseline_path,
                          const std::string& preferences_path) {
  const auto base_rows = read_rows(baseline_path, "user_id,r,mu");
  SyntheticTruth truth;
  std::unordered_map<std::string, std::size_t> idx;
  int R = 0;
  for (const auto& row : base_rows) {
    R = std::max(R, static_cast<int>(number_at(row, 1, baseline_path)));
    if (idx.emplace(row[0], truth.user_ids.size()).second) truth.user_ids.push_back(row[0]);
  }
  const auto eff_rows = read_rows(effects_path, "user_id,r,k,tau");
  int K = 0;
  for (const auto& row : eff_rows) K = std::max(K, static_cast<int>(number_at(row, 2, effects_path)));
  if (R < 1 || K < 1) throw DataError("truth sidecars are empty");
  truth.num_responses = R;
  truth.num_treatments = K;
  const std::size_t n = truth.user_ids.size();
  truth.baseline.assign(n * static_cast<std::size_t>(R), 0.0);
  truth.preferences.assign(n * static_cast<std::size_t>(R), 0.0);
  truth.effects.assign(n * static_cast<std::size_t>(R * K), 0.0);

  auto locate = [&](const std::vector<std::string>& row, const std::string& path) {
    auto it = idx.find(row[0]);
    if (it == idx.end()) throw DataError(path + ": unknown user '" + row[0] + "'");
    const int r = static_cast<int>(number_at(row, 1, path)) - 1;
    if (r < 0 || r >= R) throw DataError(path + ": response index out of range");
    return std::make_pair(it->second, static_cast<std::size_t>(r));
  };
  for (const auto& row : base_rows) {
    auto [i, r] = locate(row, baseline_path);
    truth.baseline[i * static_cast<std::size_t>(R) + r] = number_at(row, 2, baseline_path);
  }
  for (const auto& row : read_rows(preferences_path, "user_id,r,weight")) {
    auto [i, r] = locate(row, preferences_path);
    truth.preferences[i * static_cast<std::size_t>(R) + r] = number_at(row, 2, preferences_path);
  }
  for (const auto& row : eff_rows) {
    auto [i, r] = locate(row, effects_path);
    const int k = static_cast<int>(number_at(row, 2, effects_path));
    if (k < 1 || k > K) throw DataError(effects_path + ": treatment index out of range");
    truth.effects[(i * static_cast<std::size_t>(R) + r) * static_cast<std::size_t>(K) +
                  static_cast<std::size_t>(k - 1)] = number_at(row, 3, effects_path);
  }
  return truth;
}

}  // namespace mtu::data
