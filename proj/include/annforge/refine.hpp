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
#include <span>
#include <vector>

#include "annforge/dataset.hpp"
#include "annforge/graph.hpp"
#include "annforge/search.hpp"

namespace annforge {

// Per-dimension affine int8 quantization of a vector set.
struct QuantizedSet {
  size_t count = 0;
  size_t dim = 0;
  Metric metric = Metric::kEuclidean;
  std::vector<double> offset;  // per-dimension minimum
  std::vector<double> scale;   // per-dimension step, always > 0
  std::vector<uint8_t> codes;  // count x dim, row-major

  const uint8_t* row(size_t i) const { return codes.data() + i * dim; }
};

// Degree statistics precomputed per (node, level); pattern_score is the
// slot-occupancy fraction and only ever gates advisory prefetching.
struct EdgeMetadata {
  std::vector<uint32_t> edge_count0;
  std::vector<float> pattern_score0;
  // Indexed [node][level-1] for levels 1..node_level(node).
  std::vector<std::vector<uint32_t>> edge_count_upper;
  std::vector<std::vector<float>> pattern_score_upper;

  uint32_t edge_count(uint32_t node, uint32_t level) const {
    return level == 0 ? edge_count0[node] : edge_count_upper[node][level - 1];
  }
  float pattern_score(uint32_t node, uint32_t level) const {
    return level == 0 ? pattern_score0[node] : pattern_score_upper[node][level - 1];
  }
};

// offset[d] = min over rows, scale[d] = (max-min)/255 floored at 1e-12;
// codes round to the nearest step, clamped to [0,255].
QuantizedSet quantize_sq8(const VectorSet& base);

// Decoded value for one coordinate.
inline double sq8_decode(const QuantizedSet& quant, uint8_t code, size_t d) {
  return static_cast<double>(code) * quant.scale[d] + quant.offset[d];
}

// Full-precision query vs quantized row: squared L2 for euclidean,
// 1 - dot for angular (relies on ingest-time normalization).
float asymmetric_distance(std::span<const float> query, const uint8_t* code_row,
                          const QuantizedSet& quant);

// Reusable per-query scoring state for the quantized hot loop; operator()
// evaluates the asymmetric distance to one stored row.
struct Sq8QueryContext {
  Sq8QueryContext(const QuantizedSet& q, std::span<const float> query);
  float operator()(int32_t id) const;

  const QuantizedSet* quant;
  std::vector<float> shifted;  // euclidean: q - offset; angular: q * scale
  std::vector<float> scale;
  float bias = 0.0f;  // angular: sum q * offset
};

// One pass over all slot arrays of a frozen index.
EdgeMetadata build_edge_metadata(const HnswIndex& index);

// Quantized preliminary search (asymmetric scoring, metadata-gated prefetch
// with lookahead), then an exact full-precision rerank of the whole pool.
SearchResult refine_search(const HnswIndex& index, const QuantizedSet& quant,
                           const EdgeMetadata& metadata, std::span<const float> query,
                           const SearchParams& params);

// Prefetch gate and lookahead distance for the quantized pipeline.
inline constexpr float kPatternScoreGate = 0.25f;
inline constexpr size_t kRefineLookahead = 4;

}  // namespace annforge
