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
#include <vector>

#include "annforge/dataset.hpp"
#include "annforge/rng.hpp"

namespace annforge {

struct IndexParams {
  uint32_t M = 16;                  // degree cap above layer 0; layer 0 allows 2M
  uint32_t ef_construction = 200;   // beam width during insertion
  double level_multiplier = 1.4426950408889634;  // 1/ln 2: P(level >= l) = 2^-l
  uint32_t entry_point_cap = 9;     // diverse entry points kept at freeze
  uint64_t seed = 0;
  // When set, the construction beam width follows the same budget rule as
  // query-time dynamic ef instead of the fixed ef_construction.
  std::optional<double> target_recall;

  void validate() const;
};

/// A scored node id. Distances are comparison-space values
/// (squared L2, or 1 - dot on unit vectors).
struct ScoredId {
  int32_t id = -1;
  float distance = 0.0f;

  friend bool operator<(const ScoredId& a, const ScoredId& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  }
};

constexpr int32_t kEmptySlot = -1;

/// Multi-layer navigable graph over a vector set.
///
/// Adjacency is stored as fixed-degree slot arrays filled from the front,
/// with -1 marking empty slots: layer 0 is one flat count x 2M array, and
/// each node's upper layers live in a per-node block of node_level x M slots.
struct HnswIndex {
  IndexParams params;
  VectorSet base;                            // owned copy of the vectors
  uint32_t max_level = 0;
  std::vector<uint32_t> node_level;          // top layer of each node
  std::vector<int32_t> layer0;               // count * 2M slots
  std::vector<std::vector<int32_t>> upper;   // per node: node_level * M slots
  std::vector<uint32_t> entry_points;        // primary first; diverse after freeze
  bool frozen = false;
  Rng level_rng{0};

  size_t count() const { return base.count; }
  uint32_t degree_cap(uint32_t level) const {
    return level == 0 ? 2 * params.M : params.M;
  }

  std::span<const int32_t> neighbors(uint32_t node, uint32_t level) const {
    if (level == 0) {
      return {layer0.data() + static_cast<size_t>(node) * 2 * params.M, 2 * params.M};
    }
    return {upper[node].data() + static_cast<size_t>(level - 1) * params.M, params.M};
  }
  std::span<int32_t> neighbors(uint32_t node, uint32_t level) {
    if (level == 0) {
      return {layer0.data() + static_cast<size_t>(node) * 2 * params.M, 2 * params.M};
    }
    return {upper[node].data() + static_cast<size_t>(level - 1) * params.M, params.M};
  }

  /// Number of filled slots (slots are packed from the front).
  uint32_t degree(uint32_t node, uint32_t level) const {
    auto slots = neighbors(node, level);
    uint32_t n = 0;
    while (n < slots.size() && slots[n] != kEmptySlot) ++n;
    return n;
  }
};

/// Layer assignment: floor(-ln(draw) * mL). With mL = 1/ln 2 this yields
/// the exponentially decaying occupancy P(level >= l) = 2^-l.
uint32_t assign_level(double rng_draw, double level_multiplier);

/// Diversity-pruning heuristic. Scans candidates (sorted ascending by
/// distance to the anchor node) and keeps one iff it is closer to the anchor
/// than to every already-kept neighbor; rejected candidates backfill unused
/// capacity in distance order.
std::vector<ScoredId> prune_neighbors(const VectorSet& vectors,
                                      std::span<const ScoredId> candidates,
                                      size_t cap);

/// Empty unfrozen index ready for sequential insertion.
HnswIndex make_index(size_t dim, Metric metric, const IndexParams& params);

/// Inserts one vector. Ids must arrive sequentially (id == current count).
void insert(HnswIndex& index, uint32_t id, std::span<const float> vector);

/// Greedy max-min (farthest point) selection over the top two populated
/// layers; output[0] is the current global entry point.
std::vector<uint32_t> select_entry_points(const HnswIndex& index, size_t cap);

/// Runs entry-point selection and makes the index immutable.
void freeze(HnswIndex& index);

/// Builds by inserting ids 0..count-1 in order, then freezing.
/// Deterministic for a fixed seed.
HnswIndex build(const VectorSet& base, const IndexParams& params);

}  // namespace annforge
