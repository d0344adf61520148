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

#include "annforge/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "annforge/detail/beam.hpp"
#include "annforge/errors.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace annforge {

namespace {

// Code-row scoring kernels. The u8 -> float widening chain costs two extra
// vector ops per lane over a plain float kernel, so a scalar/autovectorized
// form can never keep up with the fp32 path; explicit FMA (intrinsics are not
// subject to -ffp-contract, which only governs source-level contraction)
// restores op-count parity and the four-times-smaller rows do the rest.
#if defined(__AVX512F__)
inline float sq8_l2(const float* sh, const float* sc, const uint8_t* c,
                    size_t dim) {
  __m512 acc = _mm512_setzero_ps();
  size_t d = 0;
  for (; d + 16 <= dim; d += 16) {
    const __m512 f = _mm512_cvtepi32_ps(_mm512_cvtepu8_epi32(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(c + d))));
    const __m512 diff =
        _mm512_fnmadd_ps(_mm512_loadu_ps(sc + d), f, _mm512_loadu_ps(sh + d));
    acc = _mm512_fmadd_ps(diff, diff, acc);
  }
  float total = _mm512_reduce_add_ps(acc);
  for (; d < dim; ++d) {
    const float diff = sh[d] - sc[d] * static_cast<float>(c[d]);
    total += diff * diff;
  }
  return total;
}

inline float sq8_dot(const float* sh, const uint8_t* c, size_t dim) {
  __m512 acc = _mm512_setzero_ps();
  size_t d = 0;
  for (; d + 16 <= dim; d += 16) {
    const __m512 f = _mm512_cvtepi32_ps(_mm512_cvtepu8_epi32(
        _mm_loadu_si128(reinterpret_cast<const __m128i*>(c + d))));
    acc = _mm512_fmadd_ps(_mm512_loadu_ps(sh + d), f, acc);
  }
  float total = _mm512_reduce_add_ps(acc);
  for (; d < dim; ++d) total += sh[d] * static_cast<float>(c[d]);
  return total;
}
#elif defined(__AVX2__) && defined(__FMA__)
inline float reduce8(__m256 acc) {
  __m128 lo = _mm_add_ps(_mm256_castps256_ps128(acc),
                         _mm256_extractf128_ps(acc, 1));
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_movehdup_ps(lo));
  return _mm_cvtss_f32(lo);
}

inline float sq8_l2(const float* sh, const float* sc, const uint8_t* c,
                    size_t dim) {
  __m256 acc = _mm256_setzero_ps();
  size_t d = 0;
  for (; d + 8 <= dim; d += 8) {
    const __m256 f = _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(
        _mm_loadl_epi64(reinterpret_cast<const __m128i*>(c + d))));
    const __m256 diff =
        _mm256_fnmadd_ps(_mm256_loadu_ps(sc + d), f, _mm256_loadu_ps(sh + d));
    acc = _mm256_fmadd_ps(diff, diff, acc);
  }
  float total = reduce8(acc);
  for (; d < dim; ++d) {
    const float diff = sh[d] - sc[d] * static_cast<float>(c[d]);
    total += diff * diff;
  }
  return total;
}

inline float sq8_dot(const float* sh, const uint8_t* c, size_t dim) {
  __m256 acc = _mm256_setzero_ps();
  size_t d = 0;
  for (; d + 8 <= dim; d += 8) {
    const __m256 f = _mm256_cvtepi32_ps(_mm256_cvtepu8_epi32(
        _mm_loadl_epi64(reinterpret_cast<const __m128i*>(c + d))));
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(sh + d), f, acc);
  }
  float total = reduce8(acc);
  for (; d < dim; ++d) total += sh[d] * static_cast<float>(c[d]);
  return total;
}
#else
inline float sq8_l2(const float* sh, const float* sc, const uint8_t* c,
                    size_t dim) {
  float acc = 0.0f;
  for (size_t d = 0; d < dim; ++d) {
    const float diff = sh[d] - sc[d] * static_cast<float>(c[d]);
    acc += diff * diff;
  }
  return acc;
}

inline float sq8_dot(const float* sh, const uint8_t* c, size_t dim) {
  float acc = 0.0f;
  for (size_t d = 0; d < dim; ++d) acc += sh[d] * static_cast<float>(c[d]);
  return acc;
}
#endif

}  // namespace

QuantizedSet quantize_sq8(const VectorSet& base) {
  if (base.count == 0) throw ArgumentError("quantize_sq8: base set is empty");
  QuantizedSet q;
  q.count = base.count;
  q.dim = base.dim;
  q.metric = base.metric;
  q.offset.assign(base.dim, std::numeric_limits<double>::infinity());
  std::vector<double> maxv(base.dim, -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < base.count; ++i) {
    const float* r = base.row(i);
    for (size_t d = 0; d < base.dim; ++d) {
      q.offset[d] = std::min(q.offset[d], static_cast<double>(r[d]));
      maxv[d] = std::max(maxv[d], static_cast<double>(r[d]));
    }
  }
  q.scale.resize(base.dim);
  for (size_t d = 0; d < base.dim; ++d) {
    q.scale[d] = std::max((maxv[d] - q.offset[d]) / 255.0, 1e-12);
  }
  q.codes.resize(base.count * base.dim);
  for (size_t i = 0; i < base.count; ++i) {
    const float* r = base.row(i);
    uint8_t* c = q.codes.data() + i * base.dim;
    for (size_t d = 0; d < base.dim; ++d) {
      const double step = std::round((r[d] - q.offset[d]) / q.scale[d]);
      c[d] = static_cast<uint8_t>(std::clamp(step, 0.0, 255.0));
    }
  }
  return q;
}

float asymmetric_distance(std::span<const float> query, const uint8_t* code_row,
                          const QuantizedSet& quant) {
  if (query.size() != quant.dim) {
    throw ArgumentError("asymmetric_distance: query dim mismatch");
  }
  double acc = 0.0;
  if (quant.metric == Metric::kEuclidean) {
    for (size_t d = 0; d < quant.dim; ++d) {
      const double diff = static_cast<double>(query[d]) - sq8_decode(quant, code_row[d], d);
      acc += diff * diff;
    }
    return static_cast<float>(acc);
  }
  for (size_t d = 0; d < quant.dim; ++d) {
    acc += static_cast<double>(query[d]) * sq8_decode(quant, code_row[d], d);
  }
  return static_cast<float>(1.0 - acc);
}

EdgeMetadata build_edge_metadata(const HnswIndex& index) {
  if (!index.frozen) throw StateError("build_edge_metadata: index must be frozen");
  EdgeMetadata meta;
  const size_t n = index.count();
  meta.edge_count0.resize(n);
  meta.pattern_score0.resize(n);
  meta.edge_count_upper.resize(n);
  meta.pattern_score_upper.resize(n);
  for (size_t node = 0; node < n; ++node) {
    for (uint32_t level = 0; level <= index.node_level[node]; ++level) {
      const auto slots = index.neighbors(static_cast<uint32_t>(node), level);
      uint32_t cnt = 0;
      for (int32_t v : slots) {
        if (v == kEmptySlot) break;
        ++cnt;
      }
      const float score = static_cast<float>(cnt) / static_cast<float>(slots.size());
      if (level == 0) {
        meta.edge_count0[node] = cnt;
        meta.pattern_score0[node] = score;
      } else {
        meta.edge_count_upper[node].push_back(cnt);
        meta.pattern_score_upper[node].push_back(score);
      }
    }
  }
  return meta;
}

namespace {

}  // namespace

// Hot-loop scorer: the asymmetric distance with the query-side transform
// hoisted out of the per-candidate loop and computed in single precision so
// the inner loop stays byte-narrow and vectorizable. Euclidean: sum
// ((q-offset) - scale*code)^2; angular: 1 - sum q*offset - sum
// (q*scale)*code. Tiny rounding differences vs asymmetric_distance are
// irrelevant: the pool is reranked with exact distances afterwards.
Sq8QueryContext::Sq8QueryContext(const QuantizedSet& q, std::span<const float> query)
    : quant(&q), shifted(q.dim), scale(q.dim) {
  if (q.metric == Metric::kEuclidean) {
    for (size_t d = 0; d < q.dim; ++d) {
      shifted[d] = query[d] - static_cast<float>(q.offset[d]);
      scale[d] = static_cast<float>(q.scale[d]);
    }
  } else {
    for (size_t d = 0; d < q.dim; ++d) {
      scale[d] = static_cast<float>(q.scale[d]);
      shifted[d] = query[d] * scale[d];
      bias += query[d] * static_cast<float>(q.offset[d]);
    }
  }
}

float Sq8QueryContext::operator()(int32_t id) const {
  const uint8_t* c = quant->row(static_cast<size_t>(id));
  const size_t dim = quant->dim;
  if (quant->metric == Metric::kEuclidean) {
    return sq8_l2(shifted.data(), scale.data(), c, dim);
  }
  return 1.0f - sq8_dot(shifted.data(), c, dim) - bias;
}

SearchResult refine_search(const HnswIndex& index, const QuantizedSet& quant,
                           const EdgeMetadata& metadata, std::span<const float> query,
                           const SearchParams& params) {
  params.validate();
  if (!index.frozen) throw StateError("refine_search: index must be frozen");
  if (quant.count != index.count() || quant.dim != index.base.dim) {
    throw ArgumentError("refine_search: quantized set does not match the index base");
  }
  if (metadata.edge_count0.size() != index.count()) {
    throw ArgumentError("refine_search: metadata does not match the index");
  }
  if (query.size() != index.base.dim) {
    throw ArgumentError("refine_search: query dim mismatch");
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

  // Upper layers stay full-precision: they are tiny and the descent result
  // seeds the quantized layer-0 beam.
  std::vector<uint32_t> seeds;
  seeds.reserve(tier.size());
  for (uint32_t e : tier) {
    const uint32_t top = index.node_level.at(e);
    seeds.push_back(top >= 1 ? greedy_descend(index, query, e, top, 1, &out.stats) : e);
  }

  const Sq8QueryContext scorer(quant, query);
  const size_t width = std::clamp<size_t>(ef_eff / 4, params.prefetch_depth.first,
                                          params.prefetch_depth.second);
  const size_t budget = width * params.batch_factor;
  auto pool = detail::beam_layer0(
      index, seeds, ef_eff, params, width, kRefineLookahead, budget,
      [&](int32_t id) { return scorer(id); },
      [&](int32_t id) {
        detail::prefetch_bytes(quant.row(static_cast<size_t>(id)), quant.dim, 2);
      },
      [&](uint32_t node) { return metadata.pattern_score0[node] >= kPatternScoreGate; },
      out.stats);

  // Exact rerank of the whole pool.
  for (auto& s : pool) {
    s.distance = compare_distance(query.data(), index.base.row(static_cast<size_t>(s.id)),
                                  index.base.dim, index.base.metric);
    ++out.stats.distance_computations;
  }
  std::sort(pool.begin(), pool.end());
  if (pool.size() > k) pool.resize(k);
  for (auto& s : pool) {
    s.distance = true_distance_from_compare(s.distance, index.base.metric);
  }
  out.neighbors = std::move(pool);
  return out;
}

}  // namespace annforge
