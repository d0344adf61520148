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

#include "annforge/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "annforge/detail/beam.hpp"
#include "annforge/errors.hpp"

namespace annforge {

void SearchParams::validate() const {
  if (k == 0) throw ArgumentError("SearchParams: k must be positive");
  if (ef < k) throw ArgumentError("SearchParams: ef must be >= k");
  if (target_recall && !(*target_recall > 0.0 && *target_recall < 1.0)) {
    throw ArgumentError("SearchParams: target_recall must be in (0,1)");
  }
  if (ef_scale < 0.0) throw ArgumentError("SearchParams: ef_scale must be >= 0");
  if (tier_thresholds.first >= tier_thresholds.second) {
    throw ArgumentError("SearchParams: tier_thresholds must be strictly increasing");
  }
  if (prefetch_depth.first == 0 || prefetch_depth.first > prefetch_depth.second) {
    throw ArgumentError("SearchParams: prefetch_depth range must satisfy 1 <= lo <= hi");
  }
  if (batch_factor == 0) throw ArgumentError("SearchParams: batch_factor must be positive");
  if (no_improvement_limit_divisor == 0) {
    throw ArgumentError("SearchParams: no_improvement_limit_divisor must be positive");
  }
}

SearchParams SearchParams::baseline(uint32_t k, uint32_t ef) {
  SearchParams p;
  p.k = k;
  p.ef = ef;
  p.target_recall.reset();
  // Unreachable thresholds keep the entry tier at the single primary entry.
  p.tier_thresholds = {std::numeric_limits<uint32_t>::max() - 1,
                       std::numeric_limits<uint32_t>::max()};
  p.early_termination = false;
  p.prefetch_enabled = false;
  return p;
}

uint32_t dynamic_ef(uint32_t ef_search, std::optional<double> target_recall,
                    double critical_threshold, double ef_scale) {
  if (ef_search == 0) throw ArgumentError("dynamic_ef: ef_search must be >= 1");
  if (!target_recall || *target_recall <= critical_threshold) return ef_search;
  const double recall_excess = *target_recall - critical_threshold;
  const double scaled = std::floor(ef_search * (1.0 + recall_excess * ef_scale));
  return static_cast<uint32_t>(std::max(1.0, scaled));
}

std::vector<uint32_t> select_entry_tier(const HnswIndex& index, uint32_t ef_effective,
                                        std::pair<uint32_t, uint32_t> tier_thresholds) {
  if (!index.frozen) throw StateError("select_entry_tier: index must be frozen");
  if (index.entry_points.empty()) {
    throw StateError("select_entry_tier: index has no entry points");
  }
  std::vector<uint32_t> entries = {index.entry_points[0]};
  if (ef_effective > tier_thresholds.first && index.entry_points.size() >= 2) {
    entries.push_back(index.entry_points[1]);
  }
  if (ef_effective > tier_thresholds.second && index.entry_points.size() >= 3) {
    entries.push_back(index.entry_points[2]);
  }
  return entries;
}

uint32_t greedy_descend(const HnswIndex& index, std::span<const float> query,
                        uint32_t start, uint32_t from_level, uint32_t to_level,
                        SearchStats* stats) {
  if (start >= index.count()) throw ArgumentError("greedy_descend: start id out of range");
  if (index.node_level.at(start) < from_level) {
    throw ArgumentError("greedy_descend: start node absent at from_level");
  }
  if (from_level < to_level) {
    throw ArgumentError("greedy_descend: from_level must be >= to_level");
  }
  if (query.size() != index.base.dim) {
    throw ArgumentError("greedy_descend: query dim mismatch");
  }

  uint32_t cur = start;
  float cur_dist = compare_distance(query.data(), index.base.row(cur), index.base.dim,
                                    index.base.metric);
  if (stats) ++stats->distance_computations;
  for (uint32_t level = from_level;; --level) {
    for (;;) {
      // One hop per scan: the strictly closer neighbor minimizing
      // (distance, id); stop at a local minimum.
      ScoredId best{-1, cur_dist};
      for (int32_t v : index.neighbors(cur, level)) {
        if (v == kEmptySlot) break;
        const float d = compare_distance(query.data(), index.base.row(static_cast<size_t>(v)),
                                         index.base.dim, index.base.metric);
        if (stats) ++stats->distance_computations;
        if (d < cur_dist && (best.id < 0 || ScoredId{v, d} < best)) best = {v, d};
      }
      if (best.id < 0) break;
      cur = static_cast<uint32_t>(best.id);
      cur_dist = best.distance;
      if (stats) ++stats->hops;
    }
    if (level == to_level) break;
  }
  return cur;
}

size_t prefetch_neighbors(const HnswIndex& index, uint32_t node, size_t depth,
                          int locality_hint, uint32_t level) {
  if (!detail::kPrefetchSupported || depth == 0) return 0;
  if (node >= index.count() || index.node_level[node] < level) return 0;
  const auto slots = index.neighbors(node, level);
  detail::prefetch_bytes(slots.data(), slots.size() * sizeof(int32_t), locality_hint);
  const size_t row_bytes = index.base.dim * sizeof(float);
  size_t issued = 0;
  for (int32_t v : slots) {
    if (v == kEmptySlot || issued >= depth) break;
    detail::prefetch_bytes(index.base.row(static_cast<size_t>(v)), row_bytes,
                           locality_hint);
    ++issued;
  }
  return issued;
}

std::vector<ScoredId> layer0_beam_search(const HnswIndex& index,
                                         std::span<const float> query,
                                         std::span<const uint32_t> entries,
                                         uint32_t ef_effective,
                                         const SearchParams& params,
                                         SearchStats& stats) {
  if (!index.frozen) throw StateError("layer0_beam_search: index must be frozen");
  if (entries.empty()) throw ArgumentError("layer0_beam_search: entries must be non-empty");
  if (query.size() != index.base.dim) {
    throw ArgumentError("layer0_beam_search: query dim mismatch");
  }
  if (ef_effective == 0) throw ArgumentError("layer0_beam_search: ef must be positive");

  const size_t width = std::clamp<size_t>(ef_effective / 4, params.prefetch_depth.first,
                                          params.prefetch_depth.second);
  const size_t budget = width * params.batch_factor;
  const size_t row_bytes = index.base.dim * sizeof(float);
  const float* q = query.data();

  return detail::beam_layer0(
      index, entries, ef_effective, params, width, /*lookahead=*/width, budget,
      [&](int32_t id) {
        return compare_distance(q, index.base.row(static_cast<size_t>(id)),
                                index.base.dim, index.base.metric);
      },
      [&](int32_t id) {
        detail::prefetch_bytes(index.base.row(static_cast<size_t>(id)), row_bytes, 2);
      },
      [](uint32_t) { return true; }, stats);
}

SearchResult search_knn(const HnswIndex& index, std::span<const float> query,
                        const SearchParams& params) {
  params.validate();
  if (!index.frozen) throw StateError("search_knn: index must be frozen");
  if (index.count() == 0) throw StateError("search_knn: index is empty");
  if (query.size() != index.base.dim) {
    throw ArgumentError("search_knn: query dim mismatch");
  }

  SearchResult out;
  uint32_t k = params.k;
  if (k > index.count()) {
    k = static_cast<uint32_t>(index.count());
    out.stats.k_clamped = true;
  }

  const uint32_t ef_eff = std::max(
      dynamic_ef(params.ef, params.target_recall, params.critical_threshold,
                 params.ef_scale),
      k);
  const auto tier = select_entry_tier(index, ef_eff, params.tier_thresholds);
  out.stats.entries_used = static_cast<uint32_t>(tier.size());

  std::vector<uint32_t> seeds;
  seeds.reserve(tier.size());
  for (uint32_t e : tier) {
    const uint32_t top = index.node_level.at(e);
    seeds.push_back(top >= 1 ? greedy_descend(index, query, e, top, 1, &out.stats) : e);
  }

  auto pool = layer0_beam_search(index, query, seeds, ef_eff, params, out.stats);
  if (pool.size() > k) pool.resize(k);
  for (auto& s : pool) {
    s.distance = true_distance_from_compare(s.distance, index.base.metric);
  }
  out.neighbors = std::move(pool);
  return out;
}

}  // namespace annforge
