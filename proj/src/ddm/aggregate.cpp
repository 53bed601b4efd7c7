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

#include "ddm/aggregate.hpp"

#include <algorithm>

#include "common/errors.hpp"

namespace mtu::ddm {

double aggregate_control(std::span<const double> control_estimates) {
  if (control_estimates.empty()) throw DataError("no control estimates to aggregate");
  double sum = 0.0;
  for (double v : control_estimates) sum += v;
  const double mean = sum / static_cast<double>(control_estimates.size());
  // Rounding can push the mean of near-equal values just outside the range.
  const auto [lo, hi] = std::minmax_element(control_estimates.begin(), control_estimates.end());
  return std::clamp(mean, *lo, *hi);
}

}  // namespace mtu::ddm
