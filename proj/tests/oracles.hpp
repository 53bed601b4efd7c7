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

// Independent oracles shared by the unit tests and the acceptance suite.

#ifndef MTUPLIFT_TESTS_ORACLES_HPP_
#define MTUPLIFT_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dataio/dataset.hpp"
#include "dataio/synthetic.hpp"
#include "nn/tape.hpp"

namespace mtu::testing {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
  std::size_t tensors = 0;
  // Entries whose stencil moves some recorded value onto or off exactly zero,
  // i.e. crosses a ReLU kink, and the worst error over the other entries.
  std::size_t kinked = 0;
  double max_rel_error_smooth = 0.0;
  std::string worst_smooth;
};

// Exact-zero pattern of every value recorded on `tape`.
inline std::vector<bool> zero_pattern(const nn::Tape& tape) {
  std::vector<bool> mask;
  for (std::uint32_t i = 0; i < tape.size(); ++i) {
    const nn::Matrix& v = tape.value(nn::Var{i});
    for (Eigen::Index j = 0; j < v.size(); ++j) mask.push_back(v.data()[j] == 0.0);
  }
  return mask;
}

// Central differences on sampled entries of every tensor in `params`.
// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheckReport grad_check(nn::ParamStore& params,
                                  const std::function<nn::Var(nn::Tape&)>& build,
                                  std::mt19937_64& rng, std::size_t per_tensor = 12,
                                  double step = 1e-4, double floor = 1e-6) {
  nn::Tape tape;
  const nn::Gradients grads = tape.backward(build(tape));
  const std::vector<bool> center = zero_pattern(tape);
  std::vector<bool> pattern;
  auto eval = [&] {
    nn::Tape t;
    const double loss = t.scalar(build(t));
    pattern = zero_pattern(t);
    return loss;
  };
  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    nn::Param& param = params[p];
    const nn::Matrix* g = grads.find(param);
    const auto size = static_cast<std::size_t>(param.size());
    std::vector<std::size_t> picks;
    if (size <= per_tensor) {
      for (std::size_t i = 0; i < size; ++i) picks.push_back(i);
    } else {
      // Half from entries carrying gradient, half uniform.
      std::vector<std::size_t> live;
      if (g != nullptr) {
        for (std::size_t i = 0; i < size; ++i) {
          if (g->data()[i] != 0.0) live.push_back(i);
        }
      }
      std::uniform_int_distribution<std::size_t> any(0, size - 1);
      for (std::size_t i = 0; i < per_tensor / 2 && !live.empty(); ++i) {
        picks.push_back(live[std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng)]);
      }
      while (picks.size() < per_tensor) picks.push_back(any(rng));
    }
    ++report.tensors;
    for (std::size_t idx : picks) {
      double& v = param.value.data()[idx];
      const double saved = v;
      v = saved + step;
      const double up = eval();
      const bool kink_up = pattern != center;
      v = saved - step;
      const double down = eval();
      const bool kinked = kink_up || pattern != center;
      v = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = g != nullptr ? g->data()[idx] : 0.0;
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), floor});
      const std::string label = param.name + "[" + std::to_string(idx) + "] analytic " +
                                std::to_string(analytic) + " numeric " + std::to_string(numeric);
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = label;
      }
      if (kinked) {
        ++report.kinked;
      } else if (rel > report.max_rel_error_smooth) {
        report.max_rel_error_smooth = rel;
        report.worst_smooth = label;
      }
    }
  }
  return report;
}

// Uplift coefficient by direct enumeration: every distinct score threshold
// is a cut, and each cut recounts the population above it from scratch.
// Perfect ordering: treated with positive label by label descending, then
// every zero-label instance, then controls with positive label by label
// ascending.
inline double brute_coefficient(bool qini, const std::vector<double>& scores,
                                const std::vector<int>& treated, const std::vector<double>& raw,
                                bool continuous) {
  const std::size_t n = scores.size();
  std::vector<double> y = raw;
  if (continuous) {
    double lo = raw[0], hi = raw[0];
    for (double v : raw) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (double& v : y) v = (v - lo) / (hi - lo);
  }
  auto area = [&](const std::vector<double>& key, double* final_value) {
    std::set<double, std::greater<>> cuts(key.begin(), key.end());
    double prev_x = 0.0, prev_v = 0.0, total = 0.0;
    for (double c : cuts) {
      double yt = 0, yc = 0, nt = 0, nc = 0, m = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (key[i] < c) continue;
        m += 1;
        if (treated[i] == 1) {
          yt += y[i];
          nt += 1;
        } else {
          yc += y[i];
          nc += 1;
        }
      }
      double v;
      if (qini) {
        v = nc == 0 ? yt : yt - yc * nt / nc;
      } else {
        v = ((nt == 0 ? 0.0 : yt / nt) - (nc == 0 ? 0.0 : yc / nc)) * m;
      }
      const double x = m / static_cast<double>(n);
      total += (x - prev_x) * (v + prev_v) / 2.0;
      prev_x = x;
      prev_v = v;
    }
    *final_value = prev_v;
    return total;
  };
  std::vector<double> perfect(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] == 0.0) {
      perfect[i] = 0.0;
    } else if (treated[i] == 1) {
      perfect[i] = 1.0 + y[i];
    } else {
      perfect[i] = -1.0 - y[i];
    }
  }
  double end_model = 0.0, end_perfect = 0.0;
  const double model = area(scores, &end_model);
  const double best = area(perfect, &end_perfect);
  const double random = end_model / 2.0;
  return (model - random) / (best - random);
}

// Small discretized synthetic dataset plus its truth.
struct SyntheticFixture {
  data::DatasetSchema schema;
  data::Dataset dataset;
  data::SyntheticTruth truth;
  data::RawTable raw;
};

inline SyntheticFixture synthetic_fixture(std::size_t n, std::uint64_t seed, double noise_sd = 0.5,
                                          int num_bins = 10) {
  data::SyntheticConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.noise_sd = noise_sd;
  cfg.num_bins = num_bins;
  data::SyntheticRct rct = data::generate_synthetic_rct(cfg);
  SyntheticFixture f;
  f.schema = data::fit_discretizers(rct.table);
  f.dataset = data::discretize(rct.table, f.schema);
  f.truth = std::move(rct.truth);
  f.raw = std::move(rct.table);
  return f;
}

}  // namespace mtu::testing

#endif  // MTUPLIFT_TESTS_ORACLES_HPP_
