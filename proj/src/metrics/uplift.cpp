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

#include "metrics/uplift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "common/errors.hpp"
#include "common/text.hpp"

namespace mtu::metrics {
namespace {

enum class Kind { kQini, kUplift };

double curve_value(Kind kind, double yt, double yc, double nt, double nc) {
  if (kind == Kind::kQini) return nc > 0 ? yt - yc * nt / nc : yt;
  const double mt = nt > 0 ? yt / nt : 0.0;
  const double mc = nc > 0 ? yc / nc : 0.0;
  return (mt - mc) * (nt + nc);
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) area += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return area;
}

UpliftCurve build_curve(Kind kind, std::span<const double> scores, std::span<const int> treated,
                        std::span<const double> y) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  UpliftCurve c;
  c.fraction.push_back(0.0);
  c.value.push_back(0.0);
  double yt = 0, yc = 0, nt = 0, nc = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t i = order[pos];
    if (treated[i]) {
      yt += y[i];
      nt += 1;
    } else {
      yc += y[i];
      nc += 1;
    }
    const bool group_end = pos + 1 == n || scores[order[pos + 1]] != scores[i];
    if (!group_end) continue;
    c.fraction.push_back(static_cast<double>(pos + 1) / static_cast<double>(n));
    c.value.push_back(curve_value(kind, yt, yc, nt, nc));
  }
  c.area_model = trapezoid(c.fraction, c.value);
  c.area_random = 0.5 * c.value.back();
  return c;
}

std::vector<double> prepare_labels(std::span<const double> y, LabelMode mode) {
  if (mode == LabelMode::kContinuous) return continuous_adapt(y);
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw MetricError("binary metric got a label that is not 0/1");
  }
  return {y.begin(), y.end()};
}

UpliftResult evaluate(Kind kind, std::span<const double> scores, std::span<const int> treated,
                      std::span<const double> y_raw, LabelMode mode) {
  if (scores.size() != treated.size() || scores.size() != y_raw.size()) {
    throw MetricError("scores, treatment flags and labels differ in length");
  }
  UpliftResult r;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw MetricError("non-finite uplift score");
    if (treated[i] != 0 && treated[i] != 1) throw MetricError("treatment flag must be 0 or 1");
    (treated[i] ? r.n_treated : r.n_control) += 1;
  }
  if (r.n_treated == 0 || r.n_control == 0) {
    throw MetricError("uplift metrics need both treated and control instances");
  }
  const std::vector<double> y = prepare_labels(y_raw, mode);
  r.curve = build_curve(kind, scores, treated, y);
  const std::vector<double> best = perfect_scores(treated, y);
  const UpliftCurve perfect = build_curve(kind, best, treated, y);
  r.curve.area_perfect = perfect.area_model;
  const double denom = r.curve.area_perfect - r.curve.area_random;
  if (!(std::abs(denom) > 1e-12 * (1.0 + std::abs(r.curve.area_random)))) {
    throw MetricError("perfect and random curves coincide; coefficient undefined");
  }
  r.coefficient = (r.curve.area_model - r.curve.area_random) / denom;
  return r;
}

}  // namespace

std::vector<double> continuous_adapt(std::span<const double> y) {
  if (y.empty()) throw MetricError("no labels");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = *hi - *lo;
  if (!(range > 0.0) || !std::isfinite(range)) throw MetricError("labels have zero range");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] - *lo) / range;
  return out;
}

std::vector<double> perfect_scores(std::span<const int> treated, std::span<const double> y) {
  std::vector<double> s(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) s[i] = treated[i] ? y[i] : -y[i];
  return s;
}

UpliftResult qini(std::span<const double> scores, std::span<const int> treated,
                  std::span<const double> y, LabelMode mode) {
  return evaluate(Kind::kQini, scores, treated, y, mode);
}

UpliftResult auuc(std::span<const double> scores, std::span<const int> treated,
                  std::span<const double> y, LabelMode mode) {
  return evaluate(Kind::kUplift, scores, treated, y, mode);
}

void export_curve(const UpliftCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write curve '" + path + "'");
  out << "# area_model=" << format_double(curve.area_model) << '\n'
      << "# area_random=" << format_double(curve.area_random) << '\n'
      << "# area_perfect=" << format_double(curve.area_perfect) << '\n'
      << "population_fraction,cumulative_uplift\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << format_double(curve.fraction[i]) << ',' << format_double(curve.value[i]) << '\n';
  }
  if (!out) throw IoError("short write to '" + path + "'");
}

UpliftCurve read_curve(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open curve '" + path + "'");
  UpliftCurve c;
  std::string line;
  auto header_value = [&](const std::string& key) {
    if (!std::getline(in, line) || line.rfind("# " + key + "=", 0) != 0) {
      throw ParseError(path + ": expected '# " + key + "=' header");
    }
    auto v = parse_double(std::string_view(line).substr(key.size() + 3));
    if (!v) throw ParseError(path + ": bad value for " + key);
    return *v;
  };
  c.area_model = header_value("area_model");
  c.area_random = header_value("area_random");
  c.area_perfect = header_value("area_perfect");
  if (!std::getline(in, line) || line != "population_fraction,cumulative_uplift") {
    throw ParseError(path + ": missing column header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_fields(line);
    if (cells.size() != 2) throw ParseError(path + ": expected two columns");
    auto x = parse_double(cells[0]);
    auto v = parse_double(cells[1]);
    if (!x || !v) throw ParseError(path + ": non-numeric point");
    c.fraction.push_back(*x);
    c.value.push_back(*v);
  }
  return c;
}

nlohmann::json to_json(const MetricEntry& e) {
  return {{"treatment", e.treatment}, {"response", e.response}, {"qini", e.qini},
          {"auuc", e.auuc},           {"n_treated", e.n_treated}, {"n_control", e.n_control}};
}

}  // namespace mtu::metrics
