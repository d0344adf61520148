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

#include "annforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "annforge/rng.hpp"

namespace annforge {

namespace {

constexpr double kNormTolerance = 1e-6;

// Normalizes angular rows in place. Rows already within tolerance of unit
// norm are left untouched so that normalized data round-trips bit-exactly.
void normalize_angular(VectorSet& vs, const char* origin) {
  for (size_t i = 0; i < vs.count; ++i) {
    float* r = vs.row(i);
    double sq = 0.0;
    for (size_t d = 0; d < vs.dim; ++d) sq += static_cast<double>(r[d]) * r[d];
    const double norm = std::sqrt(sq);
    if (std::abs(norm - 1.0) <= kNormTolerance) continue;
    if (norm < 1e-30) {
      throw FormatError(std::string(origin) + ": record " + std::to_string(i) +
                        " has zero norm and cannot be normalized for the angular metric");
    }
    const double inv = 1.0 / norm;
    for (size_t d = 0; d < vs.dim; ++d) r[d] = static_cast<float>(r[d] * inv);
  }
}

std::ifstream open_binary_for_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_binary_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

// Shared reader for the [int32 dim][dim * 4 bytes] record formats.
// Returns the record count and payload bytes appended to `payload`.
size_t read_vecs_records(const std::string& path, std::vector<char>& payload, size_t& dim_out) {
  std::ifstream in = open_binary_for_read(path);
  const auto file_size = std::filesystem::file_size(path);

  size_t offset = 0;
  size_t records = 0;
  int32_t dim = 0;
  while (true) {
    int32_t rec_dim = 0;
    in.read(reinterpret_cast<char*>(&rec_dim), 4);
    if (in.gcount() == 0 && in.eof()) break;
    if (in.gcount() != 4) {
      throw FormatError(path + ": truncated record header at byte offset " +
                        std::to_string(offset));
    }
    if (rec_dim <= 0) {
      throw FormatError(path + ": record " + std::to_string(records) +
                        " has non-positive dim " + std::to_string(rec_dim));
    }
    if (records == 0) {
      dim = rec_dim;
      // Reserve for the whole file assuming a uniform record size.
      const size_t rec_bytes = 4 + 4 * static_cast<size_t>(dim);
      payload.reserve((file_size / rec_bytes) * 4 * dim);
    } else if (rec_dim != dim) {
      throw FormatError(path + ": record " + std::to_string(records) + " has dim " +
                        std::to_string(rec_dim) + ", expected " + std::to_string(dim));
    }
    offset += 4;
    const size_t row_bytes = 4 * static_cast<size_t>(dim);
    const size_t old_size = payload.size();
    payload.resize(old_size + row_bytes);
    in.read(payload.data() + old_size, static_cast<std::streamsize>(row_bytes));
    if (static_cast<size_t>(in.gcount()) != row_bytes) {
      throw FormatError(path + ": truncated record payload at byte offset " +
                        std::to_string(offset));
    }
    offset += row_bytes;
    ++records;
  }
  dim_out = static_cast<size_t>(dim);
  return records;
}

}  // namespace

const char* to_string(Metric metric) {
  return metric == Metric::kEuclidean ? "euclidean" : "angular";
}

Metric metric_from_string(const std::string& name) {
  if (name == "euclidean" || name == "l2") return Metric::kEuclidean;
  if (name == "angular" || name == "cosine") return Metric::kAngular;
  throw ArgumentError("unknown metric '" + name + "' (expected euclidean or angular)");
}

void VectorSet::validate() const {
  if (data.size() != count * dim) {
    throw FormatError("vector set shape mismatch: " + std::to_string(data.size()) +
                      " values for " + std::to_string(count) + "x" + std::to_string(dim));
  }
  for (size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw FormatError("vector set contains a non-finite value at record " +
                        std::to_string(dim ? i / dim : 0));
    }
  }
}

VectorSet load_fvecs(const std::string& path, Metric metric) {
  std::vector<char> payload;
  size_t dim = 0;
  const size_t records = read_vecs_records(path, payload, dim);
  VectorSet vs;
  vs.count = records;
  vs.dim = records ? dim : 0;
  vs.metric = metric;
  vs.data.resize(records * vs.dim);
  std::memcpy(vs.data.data(), payload.data(), payload.size());
  for (size_t i = 0; i < vs.data.size(); ++i) {
    if (!std::isfinite(vs.data[i])) {
      throw FormatError(path + ": record " + std::to_string(i / vs.dim) +
                        " contains a non-finite value");
    }
  }
  if (metric == Metric::kAngular) normalize_angular(vs, path.c_str());
  return vs;
}

void save_fvecs(const VectorSet& vs, const std::string& path) {
  std::ofstream out = open_binary_for_write(path);
  const int32_t dim = static_cast<int32_t>(vs.dim);
  for (size_t i = 0; i < vs.count; ++i) {
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(vs.row(i)), 4 * vs.dim);
  }
  if (!out) throw IoError("failed writing " + path);
}

NeighborTable load_ivecs(const std::string& path) {
  std::vector<char> payload;
  size_t k = 0;
  const size_t records = read_vecs_records(path, payload, k);
  NeighborTable nt;
  nt.rows = records;
  nt.k = records ? k : 0;
  nt.ids.resize(records * nt.k);
  std::memcpy(nt.ids.data(), payload.data(), payload.size());
  for (size_t r = 0; r < nt.rows; ++r) {
    const int32_t* row = nt.row(r);
    for (size_t a = 0; a < nt.k; ++a) {
      for (size_t b = a + 1; b < nt.k; ++b) {
        if (row[a] == row[b]) {
          throw FormatError(path + ": record " + std::to_string(r) +
                            " contains duplicate id " + std::to_string(row[a]));
        }
      }
    }
  }
  return nt;
}

void save_ivecs(const NeighborTable& nt, const std::string& path) {
  std::ofstream out = open_binary_for_write(path);
  const int32_t k = static_cast<int32_t>(nt.k);
  for (size_t r = 0; r < nt.rows; ++r) {
    out.write(reinterpret_cast<const char*>(&k), 4);
    out.write(reinterpret_cast<const char*>(nt.row(r)), 4 * nt.k);
  }
  if (!out) throw IoError("failed writing " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": invalid JSON: " + e.what());
  }
  DatasetManifest m;
  try {
    m.base = j.at("base").get<std::string>();
    m.query = j.at("query").get<std::string>();
    m.groundtruth = j.at("groundtruth").get<std::string>();
    m.metric = metric_from_string(j.at("metric").get<std::string>());
    m.k = j.at("k").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": bad manifest: " + e.what());
  }
  if (m.k <= 0) throw FormatError(path + ": manifest k must be positive");
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["base"] = manifest.base;
  j["query"] = manifest.query;
  j["groundtruth"] = manifest.groundtruth;
  j["metric"] = to_string(manifest.metric);
  j["k"] = manifest.k;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

VectorSet generate_synthetic(size_t n, size_t dim, uint64_t seed, Metric metric) {
  if (n == 0) throw ArgumentError("generate_synthetic: n must be >= 1");
  if (dim == 0) throw ArgumentError("generate_synthetic: dim must be >= 1");
  VectorSet vs;
  vs.count = n;
  vs.dim = dim;
  vs.metric = metric;
  vs.data.resize(n * dim);
  Rng rng(seed);
  for (auto& x : vs.data) x = static_cast<float>(rng.gaussian());
  if (metric == Metric::kAngular) normalize_angular(vs, "generate_synthetic");
  return vs;
}

float distance(std::span<const float> a, std::span<const float> b, Metric metric) {
  if (a.size() != b.size()) {
    throw ArgumentError("distance: dimension mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
  }
  if (metric == Metric::kEuclidean) {
    double sum = 0.0;
    for (size_t d = 0; d < a.size(); ++d) {
      const double diff = static_cast<double>(a[d]) - b[d];
      sum += diff * diff;
    }
    return static_cast<float>(std::sqrt(sum));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t d = 0; d < a.size(); ++d) {
    dot += static_cast<double>(a[d]) * b[d];
    na += static_cast<double>(a[d]) * a[d];
    nb += static_cast<double>(b[d]) * b[d];
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  if (denom < 1e-30) {
    throw ArgumentError("distance: angular distance undefined for zero vector");
  }
  return static_cast<float>(1.0 - dot / denom);
}

float l2_sqr(const float* a, const float* b, size_t dim) {
  float sum = 0.0f;
  for (size_t d = 0; d < dim; ++d) {
    const float diff = a[d] - b[d];
    sum += diff * diff;
  }
  return sum;
}

float dot_product(const float* a, const float* b, size_t dim) {
  float sum = 0.0f;
  for (size_t d = 0; d < dim; ++d) sum += a[d] * b[d];
  return sum;
}

NeighborTable brute_force_ground_truth(const VectorSet& base, const VectorSet& queries,
                                       size_t k, unsigned threads) {
  if (base.dim != queries.dim) {
    throw ArgumentError("ground truth: base dim " + std::to_string(base.dim) +
                        " != query dim " + std::to_string(queries.dim));
  }
  if (base.metric != queries.metric) {
    throw ArgumentError("ground truth: base and query metrics differ");
  }
  if (k == 0) throw ArgumentError("ground truth: k must be positive");
  if (k > base.count) {
    throw ArgumentError("ground truth: k=" + std::to_string(k) + " exceeds base count " +
                        std::to_string(base.count));
  }

  NeighborTable nt;
  nt.rows = queries.count;
  nt.k = k;
  nt.ids.assign(nt.rows * k, -1);
  nt.distances.assign(nt.rows * k, 0.0f);

  const Metric metric = base.metric;
  auto scan_rows = [&](size_t begin, size_t end) {
    // Bounded selection: keep the k smallest (distance, id) pairs.
    std::vector<std::pair<float, int32_t>> best;
    for (size_t q = begin; q < end; ++q) {
      best.clear();
      best.reserve(k + 1);
      const float* qv = queries.row(q);
      for (size_t i = 0; i < base.count; ++i) {
        const float d = compare_distance(qv, base.row(i), base.dim, metric);
        const auto cand = std::make_pair(d, static_cast<int32_t>(i));
        if (best.size() < k) {
          best.push_back(cand);
          std::push_heap(best.begin(), best.end());
        } else if (cand < best.front()) {
          std::pop_heap(best.begin(), best.end());
          best.back() = cand;
          std::push_heap(best.begin(), best.end());
        }
      }
      std::sort_heap(best.begin(), best.end());
      for (size_t j = 0; j < k; ++j) {
        nt.ids[q * k + j] = best[j].second;
        nt.distances[q * k + j] = true_distance_from_compare(best[j].first, metric);
      }
    }
  };

  unsigned workers = threads ? threads : std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<size_t>(workers, std::max<size_t>(nt.rows, 1)));
  if (workers <= 1) {
    scan_rows(0, nt.rows);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const size_t chunk = (nt.rows + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const size_t begin = w * chunk;
      const size_t end = std::min(nt.rows, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(scan_rows, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return nt;
}

}  // namespace annforge
