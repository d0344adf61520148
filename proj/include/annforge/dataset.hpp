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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "annforge/errors.hpp"

namespace annforge {

enum class Metric : uint8_t { kEuclidean = 0, kAngular = 1 };

const char* to_string(Metric metric);
Metric metric_from_string(const std::string& name);

/// Immutable dense matrix of base or query vectors.
///
/// Angular sets are stored unit-normalized; all internal angular math
/// then reduces to inner products on unit vectors.
struct VectorSet {
  size_t count = 0;
  size_t dim = 0;
  Metric metric = Metric::kEuclidean;
  std::vector<float> data;  // row-major, count * dim

  const float* row(size_t i) const { return data.data() + i * dim; }
  float* row(size_t i) { return data.data() + i * dim; }

  /// Throws FormatError if sizes disagree or any entry is NaN/inf.
  void validate() const;
};

/// Per-query neighbor lists (ids ascending by distance within a row).
struct NeighborTable {
  size_t rows = 0;
  size_t k = 0;
  std::vector<int32_t> ids;      // rows * k
  std::vector<float> distances;  // empty, or rows * k (true metric values)

  bool has_distances() const { return !distances.empty(); }
  const int32_t* row(size_t q) const { return ids.data() + q * k; }
};

// ---------------------------------------------------------------------------
// File formats: fvecs/ivecs, repeated little-endian [int32 dim][payload].

VectorSet load_fvecs(const std::string& path, Metric metric);
void save_fvecs(const VectorSet& vs, const std::string& path);

NeighborTable load_ivecs(const std::string& path);
void save_ivecs(const NeighborTable& nt, const std::string& path);

/// JSON file tying a base/query/groundtruth triple together.
struct DatasetManifest {
  std::string base;
  std::string query;
  std::string groundtruth;
  Metric metric = Metric::kEuclidean;
  int k = 10;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

// ---------------------------------------------------------------------------

/// Deterministic i.i.d. standard-normal vectors; unit-normalized when angular.
VectorSet generate_synthetic(size_t n, size_t dim, uint64_t seed, Metric metric);

/// True metric distance between two vectors of equal dimension.
float distance(std::span<const float> a, std::span<const float> b, Metric metric);

// Comparison-space kernels used on the hot paths. Squared L2 is monotone in
// true L2; angular data is unit-normalized so 1 - dot is the true distance.
float l2_sqr(const float* a, const float* b, size_t dim);
float dot_product(const float* a, const float* b, size_t dim);

inline float compare_distance(const float* a, const float* b, size_t dim, Metric metric) {
  return metric == Metric::kEuclidean ? l2_sqr(a, b, dim)
                                      : 1.0f - dot_product(a, b, dim);
}

/// Converts a comparison-space value back to the true metric distance.
inline float true_distance_from_compare(float cmp, Metric metric) {
  if (metric == Metric::kEuclidean) {
    return std::sqrt(cmp < 0.0f ? 0.0f : cmp);
  }
  return cmp;
}

/// Exact k-nearest neighbors by exhaustive scan. Ties broken by smaller id;
/// rows sorted ascending by distance. threads = 0 picks a machine default;
/// the result is independent of the worker count.
NeighborTable brute_force_ground_truth(const VectorSet& base, const VectorSet& queries,
                                       size_t k, unsigned threads = 0);

}  // namespace annforge
