// Copyright 2026-present the annforge project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "reference_search.hpp"

#include <algorithm>
#include <queue>
#include <utility>

#include "annforge/dataset.hpp"
#include "annforge/errors.hpp"

namespace annforge::testing {

namespace {

using Scored = std::pair<float, int32_t>;  // (distance, id)

float dist_to(const HnswIndex& index, std::span<const float> query, int32_t id) {
  return compare_distance(query.data(), index.base.row(static_cast<size_t>(id)),
                          index.base.dim, index.base.metric);
}

}  // namespace

std::vector<int32_t> plain_search(const HnswIndex& index, std::span<const float> query,
                                  uint32_t k, uint32_t ef) {
  if (!index.frozen || index.count() == 0) {
    throw StateError("plain_search: need a frozen non-empty index");
  }
  if (ef < k) throw ArgumentError("plain_search: ef must be >= k");

  // Phase 1: greedy hops from the primary entry point down to layer 1. Each
  // scan moves to the strictly closer neighbor with the smallest
  // (distance, id), stopping at a local minimum.
  int32_t cur = static_cast<int32_t>(index.entry_points.front());
  float cur_dist = dist_to(index, query, cur);
  for (uint32_t level = index.node_level[static_cast<uint32_t>(cur)]; level >= 1;
       --level) {
    for (;;) {
      int32_t best_id = -1;
      float best_dist = cur_dist;
      for (int32_t v : index.neighbors(static_cast<uint32_t>(cur), level)) {
        if (v == kEmptySlot) break;
        const float d = dist_to(index, query, v);
        if (d < cur_dist &&
            (best_id < 0 || d < best_dist || (d == best_dist && v < best_id))) {
          best_id = v;
          best_dist = d;
        }
      }
      if (best_id < 0) break;
      cur = best_id;
      cur_dist = best_dist;
    }
  }

  // Phase 2: classic best-first beam over layer 0 with an ef-sized result
  // heap; stops when the nearest open candidate cannot improve the results.
  std::vector<char> seen(index.count(), 0);
  std::priority_queue<Scored, std::vector<Scored>, std::greater<>> open;
  std::priority_queue<Scored> results;
  seen[static_cast<size_t>(cur)] = 1;
  open.emplace(cur_dist, cur);
  results.emplace(cur_dist, cur);

  while (!open.empty()) {
    const auto [d, node] = open.top();
    if (results.size() >= ef && d > results.top().first) break;
    open.pop();
    for (int32_t v : index.neighbors(static_cast<uint32_t>(node), 0)) {
      if (v == kEmptySlot) break;
      if (seen[static_cast<size_t>(v)]) continue;
      seen[static_cast<size_t>(v)] = 1;
      const float dv = dist_to(index, query, v);
      if (results.size() < ef || dv < results.top().first) {
        open.emplace(dv, v);
        results.emplace(dv, v);
        if (results.size() > ef) results.pop();
      }
    }
  }

  std::vector<Scored> pool;
  pool.reserve(results.size());
  while (!results.empty()) {
    pool.push_back(results.top());
    results.pop();
  }
  std::sort(pool.begin(), pool.end());
  std::vector<int32_t> ids;
  for (const auto& [d, id] : pool) {
    if (ids.size() == k) break;
    ids.push_back(id);
  }
  return ids;
}

}  // namespace annforge::testing
