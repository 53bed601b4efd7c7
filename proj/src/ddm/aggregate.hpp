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

#ifndef MTUPLIFT_DDM_AGGREGATE_HPP_
#define MTUPLIFT_DDM_AGGREGATE_HPP_

#include <span>

namespace mtu::ddm {

// Adjusted control estimate: arithmetic mean of the per-branch control
// estimates, so min <= result <= max. Throws DataError on an empty set.
double aggregate_control(std::span<const double> control_estimates);

}  // namespace mtu::ddm

#endif  // MTUPLIFT_DDM_AGGREGATE_HPP_
