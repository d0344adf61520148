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

#include "annforge/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "annforge/detail/prefetch.hpp"
#include "annforge/detail/visited.hpp"
#include "annforge/search.hpp"

namespace annforge {

namespace {

struct MinOrder {
  bool operator()(const ScoredId& a, const ScoredId& b) const { return b < a; }
};
struct MaxOrder {
  bool operator()(const ScoredId& a, const ScoredId& b) const { return a < b; }
};

float node_distance(const HnswIndex& idx, const float* query, int32_t id) {
  return compare_distance(query, idx.base.row(static_cast<size_t>(id)), idx.base.dim,
                          idx.base.metric);
}

// Greedy walk at one layer: per scan, hop to the strictly closer neighbor
// minimizing (distance, id); stop at a local minimum.
void greedy_step_layer(const HnswIndex& idx, const float* query, uint32_t level,
                       uint32_t& cur, float& cur_dist) {
  for (;;) {
    ScoredId best{-1, cur_dist};
    for (int32_t v : idx.neighbors(cur, level)) {
      if (v == kEmptySlot) break;
      const float d = node_distance(idx, query, v);
      if (d < cur_dist && (best.id < 0 || ScoredId{v, d} < best)) best = {v, d};
    }
    if (best.id < 0) break;
    cur = static_cast<uint32_t>(best.id);
    cur_dist = best.distance;
  }
}

// Beam search over one layer of a partially built graph. Returns up to ef
// candidates sorted ascending by (distance, id).
std::vector<ScoredId> construction_beam(const HnswIndex& idx, const float* query,
                                        ScoredId seed, uint32_t ef, uint32_t level,
                                        detail::VisitedTable& visited) {
  std::priority_queue<ScoredId, std::vector<ScoredId>, MinOrder> candidates;
  std::priority_queue<ScoredId, std::vector<ScoredId>, MaxOrder> results;

  visited.prepare(idx.count());
  visited.test_and_set(seed.id);
  candidates.push(seed);
  results.push(seed);

  const size_t prefetch_depth =
      std::clamp<size_t>(static_cast<size_t>(ef) / 4, 24, 48);

  while (!candidates.empty()) {
    const ScoredId cur = candidates.top();
    if (results.size() >= ef && cur.distance > results.top().distance) break;
    candidates.pop();

    const auto slots = idx.neighbors(static_cast<uint32_t>(cur.id), level);
    prefetch_neighbors(idx, static_cast<uint32_t>(cur.id), prefetch_depth, 3, level);
    for (int32_t v : slots) {
      if (v == kEmptySlot) break;
      if (visited.test_and_set(v)) continue;
      const float d = node_distance(idx, query, v);
      if (results.size() < ef || d < results.top().distance) {
        candidates.push({v, d});
        results.push({v, d});
        if (results.size() > ef) results.pop();
      }
    }
  }

  std::vector<ScoredId> pool;
  pool.resize(results.size());
  for (size_t i = pool.size(); i-- > 0;) {
    pool[i] = results.top();
    results.pop();
  }
  return pool;
}

// Adds a reverse edge from -> to; on overflow the neighbor list is rebuilt
// with the diversity heuristic under the layer's cap.
void add_reverse_edge(HnswIndex& idx, uint32_t from, int32_t to, float dist,
                      uint32_t level) {
  auto slots = idx.neighbors(from, level);
  for (auto& slot : slots) {
    if (slot == kEmptySlot) {
      slot = to;
      return;
    }
  }
  std::vector<ScoredId> cands;
  cands.reserve(slots.size() + 1);
  const float* fv = idx.base.row(from);
  for (int32_t v : slots) {
    cands.push_back({v, node_distance(idx, fv, v)});
  }
  cands.push_back({to, dist});
  std::sort(cands.begin(), cands.end());
  const auto kept = prune_neighbors(idx.base, cands, idx.degree_cap(level));
  size_t i = 0;
  for (; i < kept.size(); ++i) slots[i] = kept[i].id;
  for (; i < slots.size(); ++i) slots[i] = kEmptySlot;
}

void insert_one(HnswIndex& idx, uint32_t id, std::span<const float> vector,
                detail::VisitedTable& visited) {
  if (idx.frozen) throw StateError("insert: index is frozen");
  if (vector.size() != idx.base.dim) {
    throw ArgumentError("insert: vector dim " + std::to_string(vector.size()) +
                        " != index dim " + std::to_string(idx.base.dim));
  }
  if (id < idx.base.count) {
    throw ArgumentError("insert: id " + std::to_string(id) + " already present");
  }
  if (id != idx.base.count) {
    throw ArgumentError("insert: ids must be inserted sequentially (expected " +
                        std::to_string(idx.base.count) + ", got " + std::to_string(id) + ")");
  }

  const uint32_t level =
      assign_level(idx.level_rng.uniform_open01(), idx.params.level_multiplier);

  idx.base.data.insert(idx.base.data.end(), vector.begin(), vector.end());
  idx.base.count += 1;
  if (idx.base.metric == Metric::kAngular) {
    float* r = idx.base.row(id);
    double sq = 0.0;
    for (size_t d = 0; d < idx.base.dim; ++d) sq += static_cast<double>(r[d]) * r[d];
    const double norm = std::sqrt(sq);
    if (norm < 1e-30) throw ArgumentError("insert: zero vector under angular metric");
    if (std::abs(norm - 1.0) > 1e-6) {
      for (size_t d = 0; d < idx.base.dim; ++d) r[d] = static_cast<float>(r[d] / norm);
    }
  }
  idx.node_level.push_back(level);
  idx.layer0.resize(idx.base.count * 2 * idx.params.M, kEmptySlot);
  idx.upper.emplace_back(static_cast<size_t>(level) * idx.params.M, kEmptySlot);

  if (idx.base.count == 1) {
    idx.max_level = level;
    idx.entry_points = {id};
    return;
  }

  const float* query = idx.base.row(id);
  uint32_t cur = idx.entry_points[0];
  float cur_dist = node_distance(idx, query, static_cast<int32_t>(cur));
  for (uint32_t l = idx.max_level; l > level; --l) {
    greedy_step_layer(idx, query, l, cur, cur_dist);
  }

  uint32_t ef = idx.params.ef_construction;
  if (idx.params.target_recall) {
    ef = dynamic_ef(ef, idx.params.target_recall, 0.95, 14.5);
  }

  const uint32_t top = std::min(level, idx.max_level);
  for (uint32_t l = top + 1; l-- > 0;) {
    auto pool = construction_beam(idx, query, {static_cast<int32_t>(cur), cur_dist},
                                  ef, l, visited);
    const auto selected = prune_neighbors(idx.base, pool, idx.params.M);
    auto slots = idx.neighbors(id, l);
    for (size_t i = 0; i < selected.size(); ++i) slots[i] = selected[i].id;
    for (const auto& nb : selected) {
      add_reverse_edge(idx, static_cast<uint32_t>(nb.id), static_cast<int32_t>(id),
                       nb.distance, l);
    }
    cur = static_cast<uint32_t>(pool.front().id);
    cur_dist = pool.front().distance;
  }

  if (level > idx.max_level) {
    idx.max_level = level;
    idx.entry_points = {id};
  }
}

}  // namespace

void IndexParams::validate() const {
  if (M == 0) throw ArgumentError("IndexParams: M must be positive");
  if (ef_construction < M) {
    throw ArgumentError("IndexParams: ef_construction must be >= M");
  }
  if (!(level_multiplier > 0.0)) {
    throw ArgumentError("IndexParams: level_multiplier must be positive");
  }
  if (entry_point_cap == 0) {
    throw ArgumentError("IndexParams: entry_point_cap must be >= 1");
  }
  if (target_recall && !(*target_recall > 0.0 && *target_recall < 1.0)) {
    throw ArgumentError("IndexParams: target_recall must be in (0,1)");
  }
}

uint32_t assign_level(double rng_draw, double level_multiplier) {
  if (!(rng_draw > 0.0 && rng_draw < 1.0)) {
    throw ArgumentError("assign_level: draw must lie in the open interval (0,1)");
  }
  if (!(level_multiplier > 0.0)) {
    throw ArgumentError("assign_level: level multiplier must be positive");
  }
  return static_cast<uint32_t>(std::floor(-std::log(rng_draw) * level_multiplier));
}

std::vector<ScoredId> prune_neighbors(const VectorSet& vectors,
                                      std::span<const ScoredId> candidates,
                                      size_t cap) {
  if (cap == 0) throw ArgumentError("prune_neighbors: cap must be positive");
  std::vector<ScoredId> kept;
  std::vector<ScoredId> rejected;
  kept.reserve(std::min(cap, candidates.size()));
  for (const auto& cand : candidates) {
    if (kept.size() >= cap) break;
    bool diverse = true;
    const float* cv = vectors.row(static_cast<size_t>(cand.id));
    for (const auto& k : kept) {
      const float d = compare_distance(cv, vectors.row(static_cast<size_t>(k.id)),
                                       vectors.dim, vectors.metric);
      if (d <= cand.distance) {  // occluded by a kept neighbor
        diverse = false;
        break;
      }
    }
    if (diverse) {
      kept.push_back(cand);
    } else {
      rejected.push_back(cand);
    }
  }
  for (const auto& r : rejected) {
    if (kept.size() >= cap) break;
    kept.push_back(r);
  }
  return kept;
}

HnswIndex make_index(size_t dim, Metric metric, const IndexParams& params) {
  params.validate();
  if (dim == 0) throw ArgumentError("make_index: dim must be positive");
  HnswIndex idx;
  idx.params = params;
  idx.base.dim = dim;
  idx.base.metric = metric;
  idx.level_rng = Rng(params.seed);
  return idx;
}

void insert(HnswIndex& index, uint32_t id, std::span<const float> vector) {
  detail::VisitedTable visited;
  insert_one(index, id, vector, visited);
}

std::vector<uint32_t> select_entry_points(const HnswIndex& index, size_t cap) {
  if (index.count() == 0) throw StateError("select_entry_points: index is empty");
  if (cap == 0) throw ArgumentError("select_entry_points: cap must be >= 1");

  const uint32_t floor_level = index.max_level >= 1 ? index.max_level - 1 : 0;
  std::vector<uint32_t> pool;
  for (size_t n = 0; n < index.count(); ++n) {
    if (index.node_level[n] >= floor_level) pool.push_back(static_cast<uint32_t>(n));
  }

  const uint32_t start = index.entry_points.at(0);
  std::vector<uint32_t> selected = {start};
  // min distance from each pool node to the selected set
  std::vector<float> min_dist(pool.size());
  const float* sv = index.base.row(start);
  for (size_t i = 0; i < pool.size(); ++i) {
    min_dist[i] = pool[i] == start
                      ? -1.0f
                      : compare_distance(sv, index.base.row(pool[i]), index.base.dim,
                                         index.base.metric);
  }

  while (selected.size() < cap) {
    int best = -1;
    for (size_t i = 0; i < pool.size(); ++i) {
      if (min_dist[i] < 0.0f) continue;  // already selected
      if (best < 0 || min_dist[i] > min_dist[static_cast<size_t>(best)]) {
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;  // pool exhausted
    const uint32_t chosen = pool[static_cast<size_t>(best)];
    selected.push_back(chosen);
    min_dist[static_cast<size_t>(best)] = -1.0f;
    const float* cv = index.base.row(chosen);
    for (size_t i = 0; i < pool.size(); ++i) {
      if (min_dist[i] < 0.0f) continue;
      const float d = compare_distance(cv, index.base.row(pool[i]), index.base.dim,
                                       index.base.metric);
      min_dist[i] = std::min(min_dist[i], d);
    }
  }
  return selected;
}

void freeze(HnswIndex& index) {
  if (index.frozen) return;
  if (index.count() == 0) throw StateError("freeze: index is empty");
  index.entry_points = select_entry_points(index, index.params.entry_point_cap);
  index.frozen = true;
}

HnswIndex build(const VectorSet& base, const IndexParams& params) {
  if (base.count == 0) throw ArgumentError("build: base set is empty");
  HnswIndex idx = make_index(base.dim, base.metric, params);
  idx.base.data.reserve(base.data.size());
  idx.node_level.reserve(base.count);
  idx.upper.reserve(base.count);
  detail::VisitedTable visited;
  for (size_t i = 0; i < base.count; ++i) {
    insert_one(idx, static_cast<uint32_t>(i),
               {base.row(i), base.dim}, visited);
  }
  freeze(idx);
  return idx;
}

}  // namespace annforge
