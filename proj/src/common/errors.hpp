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

#ifndef MTUPLIFT_COMMON_ERRORS_HPP_
#define MTUPLIFT_COMMON_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mtu {

// Every failure raised by the core derives from Error. The C API maps the
// category onto its status codes, and the CLI maps those onto exit codes.
enum class ErrorCategory {
  kUsage,
  kData,
  kNumerical,
  kIo,
  kVersion,
  kState,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

// Shape or length mismatch between operands.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorCategory::kUsage, "dimension error: " + what) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what)
      : Error(ErrorCategory::kData, "index error: " + what) {}
};

// Operation invoked in the wrong lifecycle state (e.g. backward with no
// recorded forward pass).
class StateError : public Error {
 public:
  explicit StateError(const std::string& what)
      : Error(ErrorCategory::kState, "state error: " + what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorCategory::kNumerical, "numerical error: " + what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what)
      : Error(ErrorCategory::kData, "parse error: " + what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorCategory::kData, "data error: " + what) {}
};

class MetricError : public Error {
 public:
  explicit MetricError(const std::string& what)
      : Error(ErrorCategory::kData, "metric error: " + what) {}
};

// Relative uplift requested with a control estimate too close to zero.
class DenominatorError : public Error {
 public:
  DenominatorError(const std::string& user_id, double denominator)
      : Error(ErrorCategory::kNumerical,
              "denominator error: control estimate " +
                  std::to_string(denominator) + " for user '" + user_id +
                  "' is below the floor"),
        user_id_(user_id) {}
  const std::string& user_id() const noexcept { return user_id_; }

 private:
  std::string user_id_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what)
      : Error(ErrorCategory::kIo, "io error: " + what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what)
      : Error(ErrorCategory::kVersion, "version error: " + what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what)
      : Error(ErrorCategory::kUsage, "usage error: " + what) {}
};

}  // namespace mtu

#endif  // MTUPLIFT_COMMON_ERRORS_HPP_
