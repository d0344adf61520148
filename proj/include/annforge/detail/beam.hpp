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

#pragma once

#include <algorithm>
#include <queue>
#include <span>
#include <vector>

#include "annforge/detail/prefetch.hpp"
#include "annforge/detail/visited.hpp"
#include "annforge/graph.hpp"
#include "annforge/search.hpp"

namespace annforge::detail {

struct BeamMinOrder {
  bool operator()(const ScoredId& a, const ScoredId& b) const { return b < a; }
};
struct BeamMaxOrder {
  bool operator()(const ScoredId& a, const ScoredId& b) const { return a < b; }
};

// Layer-0 best-first expansion shared by the full-precision and quantized
// pipelines. ScoreFn: id -> comparison-space distance. PrefetchRowFn: id ->
// advisory prefetch of that row's payload. GateFn: node -> whether prefetch
// is worthwhile when expanding it. Prefetching is bounded per expansion by
// width upfront rows plus lookahead-offset rows during the scan, capped at
// budget total, and must never change the pool.
template <typename ScoreFn, typename PrefetchRowFn, typename GateFn>
std::vector<ScoredId> beam_layer0(const HnswIndex& index,
                                  std::span<const uint32_t> entries,
                                  uint32_t ef_effective, const SearchParams& params,
                                  size_t width, size_t lookahead, size_t budget,
                                  ScoreFn&& score, PrefetchRowFn&& prefetch_row,
                                  GateFn&& gate, SearchStats& stats) {
  std::priority_queue<ScoredId, std::vector<ScoredId>, BeamMinOrder> candidates;
  std::priority_queue<ScoredId, std::vector<ScoredId>, BeamMaxOrder> results;
  thread_local VisitedTable visited;
  visited.prepare(index.count());

  for (uint32_t e : entries) {
    if (visited.test_and_set(static_cast<int32_t>(e))) continue;
    const float d = score(static_cast<int32_t>(e));
    ++stats.distance_computations;
    candidates.push({static_cast<int32_t>(e), d});
    results.push({static_cast<int32_t>(e), d});
    if (results.size() > ef_effective) results.pop();
  }

  // Cumulative budget of fruitless expansions, never reset: once the search
  // has wasted ef/divisor pops without touching the pool it is past the knee
  // of the convergence curve and further marginal inserts are not worth it.
  const uint64_t no_improve_limit =
      std::max<uint64_t>(1, ef_effective / params.no_improvement_limit_divisor);
  uint64_t no_improve = 0;

  while (!candidates.empty()) {
    const ScoredId cur = candidates.top();
    if (results.size() >= ef_effective && cur.distance > results.top().distance) {
      break;  // nothing left that can improve the pool
    }
    candidates.pop();
    ++stats.hops;

    const auto slots = index.neighbors(static_cast<uint32_t>(cur.id), 0);
    const bool want_prefetch = params.prefetch_enabled && kPrefetchSupported &&
                               gate(static_cast<uint32_t>(cur.id));
    size_t issued = 0;
    if (want_prefetch) {
      prefetch_bytes(slots.data(), slots.size() * sizeof(int32_t), 3);
      ++stats.prefetch_requests;
      for (size_t j = 0; j < slots.size() && issued < width; ++j) {
        if (slots[j] == kEmptySlot) break;
        if (visited.test(slots[j])) continue;
        prefetch_row(slots[j]);
        ++stats.prefetch_requests;
        ++issued;
      }
    }

    bool improved = false;
    for (size_t j = 0; j < slots.size(); ++j) {
      const int32_t v = slots[j];
      if (v == kEmptySlot) break;
      if (want_prefetch && issued < budget && j + lookahead < slots.size()) {
        const int32_t ahead = slots[j + lookahead];
        if (ahead != kEmptySlot && !visited.test(ahead)) {
          prefetch_row(ahead);
          ++stats.prefetch_requests;
          ++issued;
        }
      }
      if (visited.test_and_set(v)) continue;
      const float d = score(v);
      ++stats.distance_computations;
      if (results.size() < ef_effective || d < results.top().distance) {
        candidates.push({v, d});
        results.push({v, d});
        if (results.size() > ef_effective) results.pop();
        improved = true;
      }
    }

    if (params.early_termination) {
      if (!improved) ++no_improve;
      if (no_improve >= no_improve_limit) {
        stats.terminated_early = true;
        break;
      }
    }
  }

  std::vector<ScoredId> pool(results.size());
  for (size_t i = pool.size(); i-- > 0;) {
    pool[i] = results.top();
    results.pop();
  }
  return pool;
}

}  // namespace annforge::detail
