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

#ifndef MTUPLIFT_COMMON_LOG_HPP_
#define MTUPLIFT_COMMON_LOG_HPP_

#include <string_view>

namespace mtu::log {

enum class Level { kDebug = 0, kInfo = 1, kWarning = 2, kError = 3, kSilent = 4 };

// Process-wide threshold; messages below it are dropped. Defaults to kInfo,
// or to the value of MTUPLIFT_LOG (debug|info|warning|error|silent).
void set_level(Level level);
Level get_level();

void write(Level level, std::string_view message);

inline void debug(std::string_view m) { write(Level::kDebug, m); }
inline void info(std::string_view m) { write(Level::kInfo, m); }
inline void warning(std::string_view m) { write(Level::kWarning, m); }
inline void error(std::string_view m) { write(Level::kError, m); }

}  // namespace mtu::log

#endif  // MTUPLIFT_COMMON_LOG_HPP_
