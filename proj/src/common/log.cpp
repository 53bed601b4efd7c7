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

#include "common/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace mtu::log {
namespace {

Level level_from_env() {
  const char* env = std::getenv("MTUPLIFT_LOG");
  if (env == nullptr) return Level::kInfo;
  const std::string v(env);
  if (v == "debug") return Level::kDebug;
  if (v == "warning") return Level::kWarning;
  if (v == "error") return Level::kError;
  if (v == "silent") return Level::kSilent;
  return Level::kInfo;
}

std::atomic<int>& threshold() {
  static std::atomic<int> value{static_cast<int>(level_from_env())};
  return value;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

const char* tag(Level level) {
  switch (level) {
    case Level::kDebug: return "D";
    case Level::kInfo: return "I";
    case Level::kWarning: return "W";
    case Level::kError: return "E";
    default: return "?";
  }
}

}  // namespace

void set_level(Level level) { threshold().store(static_cast<int>(level)); }

Level get_level() { return static_cast<Level>(threshold().load()); }

void write(Level level, std::string_view message) {
  if (static_cast<int>(level) < threshold().load()) return;
  std::lock_guard<std::mutex> lock(sink_mutex());
  std::clog << "[mtuplift " << tag(level) << "] " << message << '\n';
}

}  // namespace mtu::log
