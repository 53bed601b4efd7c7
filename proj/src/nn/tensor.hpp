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

#ifndef MTUPLIFT_NN_TENSOR_HPP_
#define MTUPLIFT_NN_TENSOR_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace mtu::nn {

// Row-major so that one row is one sample in a batch.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// A trainable tensor. Vectors (biases) are stored as 1 x n matrices.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param(std::string param_name, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(param_name)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)) {}

  Eigen::Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(); }
};

// Owns parameters with stable addresses; insertion order is the
// serialization and optimizer order.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Param& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Param& operator[](std::size_t i) { return *params_[i]; }
  const Param& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  std::size_t num_scalars() const;

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static void init_dense(Param& p, std::size_t fan_in, std::mt19937_64& rng);
  static void init_normal(Param& p, double stddev, std::mt19937_64& rng);

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

}  // namespace mtu::nn

#endif  // MTUPLIFT_NN_TENSOR_HPP_
