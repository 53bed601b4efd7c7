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

#ifndef MTUPLIFT_METRICS_UPLIFT_HPP_
#define MTUPLIFT_METRICS_UPLIFT_HPP_

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace mtu::metrics {

// Binary labels are used as given and must be 0/1. Continuous labels are
// min-max normalized over the evaluation set first.
enum class LabelMode { kBinary, kContinuous };

// Cumulative uplift curve, evaluated at the end of every group of tied
// scores (plus the origin), with the population on the x axis as a fraction.
struct UpliftCurve {
  std::vector<double> fraction;
  std::vector<double> value;
  double area_model = 0.0;
  double area_random = 0.0;
  double area_perfect = 0.0;

  std::size_t size() const { return fraction.size(); }
};

struct UpliftResult {
  UpliftCurve curve;
  // (area_model - area_random) / (area_perfect - area_random).
  double coefficient = 0.0;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
};

// Qini curve: Q(n) = Y_T(n) - Y_C(n) N_T(n) / N_C(n); Q(n) = Y_T(n) while no
// control instance has been seen.
UpliftResult qini(std::span<const double> scores, std::span<const int> treated,
                  std::span<const double> y, LabelMode mode = LabelMode::kBinary);

// Uplift curve: u(n) = (Y_T(n)/N_T(n) - Y_C(n)/N_C(n)) n, an empty group's mean
// counted as 0.
UpliftResult auuc(std::span<const double> scores, std::span<const int> treated,
                  std::span<const double> y, LabelMode mode = LabelMode::kBinary);

// Min-max normalization onto [0, 1]. Throws MetricError for a constant label.
std::vector<double> continuous_adapt(std::span<const double> y);

// Ordering used for the perfect curve: treated instances by label
// descending, then control instances by label ascending. Expressed as a
// score, y for treated and -y for control.
std::vector<double> perfect_scores(std::span<const int> treated, std::span<const double> y);

// `# area_model=...`, `# area_random=...`, `# area_perfect=...`, a column
// header, then one `fraction,value` row per point.
void export_curve(const UpliftCurve& curve, const std::string& path);
UpliftCurve read_curve(const std::string& path);
inline constexpr std::size_t kCurveHeaderLines = 4;

struct MetricEntry {
  int treatment = 0;
  std::string response;
  double qini = 0.0;
  double auuc = 0.0;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
};

nlohmann::json to_json(const MetricEntry& e);

}  // namespace mtu::metrics

#endif  // MTUPLIFT_METRICS_UPLIFT_HPP_
