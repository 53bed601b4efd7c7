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

#include "nn/tensor.hpp"

#include <cmath>

#include "common/errors.hpp"

namespace mtu::nn {

ParamStore::ParamStore(const ParamStore& other) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Param>(*p));
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Param& ParamStore::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (find(name) != nullptr) throw StateError("duplicate parameter '" + name + "'");
  if (rows <= 0 || cols <= 0) {
    throw DimensionError("parameter '" + name + "' needs positive shape");
  }
  params_.push_back(std::make_unique<Param>(name, rows, cols));
  return *params_.back();
}

Param* ParamStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Param& ParamStore::at(const std::string& name) {
  Param* p = find(name);
  if (p == nullptr) throw StateError("unknown parameter '" + name + "'");
  return *p;
}

const Param& ParamStore::at(const std::string& name) const {
  const Param* p = find(name);
  if (p == nullptr) throw StateError("unknown parameter '" + name + "'");
  return *p;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->size());
  return n;
}

void ParamStore::init_dense(Param& p, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng);
}

void ParamStore::init_normal(Param& p, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng);
}

}  // namespace mtu::nn
