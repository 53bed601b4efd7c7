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

#include "ddm/request.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "common/errors.hpp"

namespace mtu::ddm {
namespace {

constexpr int kContextVocab = 40;

}  // namespace

nlohmann::json to_json(const RequestContext& req) {
  return {{"user_id", req.user_id}, {"groups", req.groups}, {"exposures", req.exposures}};
}

RequestContext request_from_json(const nlohmann::json& j) {
  RequestContext r;
  try {
    r.user_id = j.at("user_id").get<std::string>();
    r.groups = j.at("groups").get<std::vector<std::vector<std::int32_t>>>();
    r.exposures = j.value("exposures", std::vector<std::vector<double>>{});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed request: ") + e.what());
  }
  return r;
}

void write_requests(const std::vector<RequestContext>& requests, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write requests '" + path + "'");
  for (const auto& r : requests) out << to_json(r).dump() << '\n';
  if (!out) throw IoError("short write to '" + path + "'");
}

std::vector<RequestContext> read_requests(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open requests '" + path + "'");
  std::vector<RequestContext> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      out.push_back(request_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<int> synthetic_group_vocab(const RequestSimConfig& config) {
  return {kContextVocab, config.item_pool, config.item_pool};
}

std::vector<RequestContext> generate_requests(const data::RawTable& users,
                                              const data::SyntheticTruth& truth,
                                              const RequestSimConfig& config) {
  if (config.item_pool < 2 || config.recent_length < 1 || config.candidate_length < 1 ||
      config.exposures < 0) {
    throw UsageError("invalid request simulator config");
  }
  if (users.schema.features.size() < 3) throw DataError("request simulator needs >= 3 user features");
  const int R = truth.num_responses;
  const auto index = truth.index();
  std::mt19937_64 rng(config.seed ^ 0x5bd1e995ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Item pool: raw scores, percentile ranks within the pool, type = argmax.
  const auto P = static_cast<std::size_t>(config.item_pool);
  std::vector<std::vector<double>> percentile(P, std::vector<double>(static_cast<std::size_t>(R)));
  for (int r = 0; r < R; ++r) {
    std::vector<double> raw(P);
    for (auto& v : raw) v = unit(rng);
    std::vector<std::size_t> order(P);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
    for (std::size_t rank = 0; rank < P; ++rank) {
      percentile[order[rank]][static_cast<std::size_t>(r)] =
          static_cast<double>(rank) / static_cast<double>(P - 1);
    }
  }
  std::vector<std::vector<std::int32_t>> by_type(static_cast<std::size_t>(R));
  for (std::size_t i = 0; i < P; ++i) {
    const auto& p = percentile[i];
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    by_type[best].push_back(static_cast<std::int32_t>(i));
  }

  std::vector<RequestContext> out;
  out.reserve(users.size());
  for (std::size_t u = 0; u < users.size(); ++u) {
    auto it = index.find(users.user_ids[u]);
    if (it == index.end()) throw DataError("no truth for user '" + users.user_ids[u] + "'");
    std::vector<double> pref(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) pref[static_cast<std::size_t>(r)] = truth.preference(it->second, r);
    std::discrete_distribution<int> pick_type(pref.begin(), pref.end());
    auto draw_item = [&]() {
      const auto& pool = by_type[static_cast<std::size_t>(pick_type(rng))];
      if (pool.empty()) {
        return static_cast<std::int32_t>(std::uniform_int_distribution<int>(0, config.item_pool - 1)(rng));
      }
      return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    };

    RequestContext req;
    req.user_id = users.user_ids[u];
    const auto c1 = static_cast<std::int32_t>(users.feature(u, 1));
    const auto c2 = static_cast<std::int32_t>(users.feature(u, 2));
    req.groups.push_back({c1 % (kContextVocab / 2), kContextVocab / 2 + c2 % (kContextVocab / 2)});
    std::vector<std::int32_t> recent(static_cast<std::size_t>(config.recent_length));
    for (auto& id : recent) id = draw_item();
    std::vector<std::int32_t> candidates(static_cast<std::size_t>(config.candidate_length));
    for (auto& id : candidates) id = draw_item();
    req.groups.push_back(std::move(recent));
    req.groups.push_back(std::move(candidates));
    for (int v = 0; v < config.exposures; ++v) {
      req.exposures.push_back(percentile[static_cast<std::size_t>(draw_item())]);
    }
    out.push_back(std::move(req));
  }
  return out;
}

}  // namespace mtu::ddm
