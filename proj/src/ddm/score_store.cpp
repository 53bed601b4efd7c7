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

#include "ddm/score_store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "common/errors.hpp"
#include "common/text.hpp"

namespace mtu::ddm {

const UserScores* ScoreStore::find(const std::string& user_id) const {
  const auto it = users.find(user_id);
  return it == users.end() ? nullptr : &it->second;
}

std::size_t ScoreStore::num_records() const {
  return users.size() * static_cast<std::size_t>(num_responses * num_treatments);
}

namespace {

void replace_file(const std::string& tmp, const std::string& path) {
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot replace '" + path + "'");
  }
}

std::string temp_name(const std::string& path) { return path + ".tmp"; }

}  // namespace

void write_score_store(const std::vector<ScoreRecord>& records, const std::string& path) {
  const std::string tmp = temp_name(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << kScoreStoreHeader << '\n';
    for (const ScoreRecord& s : records) {
      out << s.user_id << ',' << s.r << ',' << s.k << ',' << format_double(s.y_hat_treated) << ','
          << format_double(s.y_hat_control_star) << ',' << format_double(s.delta) << '\n';
    }
    out.flush();
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  replace_file(tmp, path);
}

std::vector<ScoreRecord> read_score_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open score store '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kScoreStoreHeader) {
    throw ParseError(path + ":1: unexpected score store header");
  }
  std::vector<ScoreRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    const auto where = path + ":" + std::to_string(lineno) + ": ";
    if (f.size() != 6) throw ParseError(where + "expected 6 fields");
    ScoreRecord s;
    s.user_id = std::string(f[0]);
    const auto r = parse_double(f[1]);
    const auto k = parse_double(f[2]);
    const auto yt = parse_double(f[3]);
    const auto yc = parse_double(f[4]);
    const auto d = parse_double(f[5]);
    if (!r || !k || !yt || !yc || !d) throw ParseError(where + "non-numeric field");
    s.r = static_cast<int>(*r);
    s.k = static_cast<int>(*k);
    if (s.r != *r || s.k != *k || s.r < 1 || s.k < 1) {
      throw ParseError(where + "r and k must be positive integers");
    }
    s.y_hat_treated = *yt;
    s.y_hat_control_star = *yc;
    s.delta = *d;
    out.push_back(std::move(s));
  }
  return out;
}

ScoreStore build_score_store(const std::vector<ScoreRecord>& records) {
  ScoreStore store;
  for (const ScoreRecord& s : records) {
    store.num_responses = std::max(store.num_responses, s.r);
    store.num_treatments = std::max(store.num_treatments, s.k);
  }
  const int R = store.num_responses;
  const int K = store.num_treatments;
  const auto cells = static_cast<std::size_t>(R * K);
  std::map<std::string, std::set<int>> seen;
  for (const ScoreRecord& s : records) {
    auto [it, fresh] = store.users.try_emplace(s.user_id);
    UserScores& u = it->second;
    if (fresh) {
      u.treated = {R, K, std::vector<double>(cells, 0.0)};
      u.delta = {R, K, std::vector<double>(cells, 0.0)};
      u.control_star.assign(static_cast<std::size_t>(R), 0.0);
    }
    const int cell = (s.r - 1) * K + (s.k - 1);
    if (!seen[s.user_id].insert(cell).second) {
      throw DataError("duplicate score for user '" + s.user_id + "' r=" + std::to_string(s.r) +
                      " k=" + std::to_string(s.k));
    }
    u.treated.at(s.r - 1, s.k) = s.y_hat_treated;
    u.delta.at(s.r - 1, s.k) = s.delta;
    u.control_star[static_cast<std::size_t>(s.r - 1)] = s.y_hat_control_star;
  }
  for (const auto& [user, cellset] : seen) {
    if (cellset.size() != cells) {
      throw DataError("user '" + user + "' has " + std::to_string(cellset.size()) +
                      " scores, expected " + std::to_string(cells));
    }
  }
  return store;
}

ScoreStore read_score_store(const std::string& path) {
  return build_score_store(read_score_records(path));
}

void write_decisions(const std::vector<DecisionRecord>& records, const std::string& path) {
  const std::string tmp = temp_name(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << "user_id,k,phi,enabled\n";
    for (const DecisionRecord& d : records) {
      out << d.user_id << ',' << d.k << ',' << format_double(d.phi) << ',' << (d.enabled ? 1 : 0)
          << '\n';
    }
    out.flush();
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  replace_file(tmp, path);
}

}  // namespace mtu::ddm
