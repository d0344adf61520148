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

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "annforge/graph.hpp"

namespace annforge {

// Query-time knobs. Every optimization is independently toggleable; with
// target_recall unset, early_termination off, prefetch off and tier
// thresholds out of reach the engine degrades to the classic single-entry
// beam search.
struct SearchParams {
  uint32_t k = 10;
  uint32_t ef = 64;
  // When set and above critical_threshold, ef is scaled up before the search.
  std::optional<double> target_recall;
  double critical_threshold = 0.95;
  double ef_scale = 14.5;
  // Entry tier 2 activates when effective ef exceeds .first, tier 3 when it
  // exceeds .second.
  std::pair<uint32_t, uint32_t> tier_thresholds{64, 128};
  // Adaptive prefetch width is clamped into this inclusive range.
  std::pair<uint32_t, uint32_t> prefetch_depth{24, 48};
  uint32_t batch_factor = 2;
  uint32_t no_improvement_limit_divisor = 4;
  bool early_termination = true;
  bool prefetch_enabled = true;

  void validate() const;

  // All optimizations off: single entry, fixed ef, run-to-completion beam.
  static SearchParams baseline(uint32_t k, uint32_t ef);
};

// Per-call instrumentation; never shared between searches.
struct SearchStats {
  uint64_t distance_computations = 0;
  uint64_t hops = 0;
  uint64_t prefetch_requests = 0;
  uint32_t entries_used = 0;
  bool terminated_early = false;
  bool k_clamped = false;
};

struct SearchResult {
  // Ascending by true metric distance (L2 / 1 - cos), ties by smaller id.
  std::vector<ScoredId> neighbors;
  SearchStats stats;
};

// ef_search scaled by 1 + (target_recall - critical_threshold) * ef_scale
// when the target exceeds the critical threshold; floor rounding.
uint32_t dynamic_ef(uint32_t ef_search, std::optional<double> target_recall,
                    double critical_threshold, double ef_scale);

// Entry points activated by budget: always the primary, plus the second /
// third when ef_effective exceeds the respective threshold. At most three.
std::vector<uint32_t> select_entry_tier(const HnswIndex& index, uint32_t ef_effective,
                                        std::pair<uint32_t, uint32_t> tier_thresholds);

// Greedy walk from start through [from_level, to_level], moving to the
// strictly closer neighbor until a local minimum per layer.
uint32_t greedy_descend(const HnswIndex& index, std::span<const float> query,
                        uint32_t start, uint32_t from_level, uint32_t to_level,
                        SearchStats* stats = nullptr);

// Advisory: request cache residence for up to depth neighbor vector rows of
// node at the given level. Returns the number of rows actually requested
// (zero on platforms without a prefetch intrinsic). Never affects results.
size_t prefetch_neighbors(const HnswIndex& index, uint32_t node, size_t depth,
                          int locality_hint, uint32_t level = 0);

// Best-first expansion over layer 0 seeded with all entries; pool sorted
// ascending by (distance, id) in comparison space.
std::vector<ScoredId> layer0_beam_search(const HnswIndex& index,
                                         std::span<const float> query,
                                         std::span<const uint32_t> entries,
                                         uint32_t ef_effective,
                                         const SearchParams& params,
                                         SearchStats& stats);

// Full pipeline: dynamic ef, tiered entries, per-entry descent, layer-0 beam.
// Returned distances are in the true metric (L2^2 / 1 - cos).
SearchResult search_knn(const HnswIndex& index, std::span<const float> query,
                        const SearchParams& params);

}  // namespace annforge
