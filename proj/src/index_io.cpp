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

#include "annforge/index_io.hpp"

#include <cstring>
#include <fstream>

#include "annforge/errors.hpp"

namespace annforge {

namespace {

constexpr char kMagic[4] = {'C', 'R', 'N', 'N'};
constexpr uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void put_array(std::ofstream& out, const T* data, size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
}

template <typename T>
T get(std::ifstream& in, const std::string& path, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError(path + ": truncated while reading " + what);
  return value;
}

template <typename T>
void get_array(std::ifstream& in, T* data, size_t n, const std::string& path,
               const char* what) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) throw FormatError(path + ": truncated while reading " + what);
}

}  // namespace

void save_index(const HnswIndex& index, const std::string& path,
                const QuantizedSet* quantized) {
  if (!index.frozen) throw StateError("save_index: index must be frozen");
  if (quantized &&
      (quantized->count != index.count() || quantized->dim != index.base.dim)) {
    throw ArgumentError("save_index: quantized set does not match the index");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_index: cannot open " + path + " for writing");

  out.write(kMagic, sizeof(kMagic));
  put(out, kFormatVersion);
  put(out, static_cast<uint8_t>(index.base.metric));
  put(out, index.params.M);
  put(out, index.params.ef_construction);
  put(out, index.params.level_multiplier);
  put(out, static_cast<uint64_t>(index.count()));
  put(out, index.max_level);
  put(out, static_cast<uint32_t>(index.entry_points.size()));
  put_array(out, index.entry_points.data(), index.entry_points.size());
  put_array(out, index.node_level.data(), index.node_level.size());

  put_array(out, index.layer0.data(), index.layer0.size());
  for (uint32_t level = 1; level <= index.max_level && index.count() > 0; ++level) {
    for (size_t node = 0; node < index.count(); ++node) {
      if (index.node_level[node] < level) continue;
      const auto slots = index.neighbors(static_cast<uint32_t>(node), level);
      put_array(out, slots.data(), slots.size());
    }
  }

  put(out, static_cast<uint8_t>(1));  // vectors present
  put(out, static_cast<uint32_t>(index.base.dim));
  put_array(out, index.base.data.data(), index.base.data.size());

  put(out, static_cast<uint8_t>(quantized ? 1 : 0));
  if (quantized) {
    put_array(out, quantized->offset.data(), quantized->offset.size());
    put_array(out, quantized->scale.data(), quantized->scale.size());
    put_array(out, quantized->codes.data(), quantized->codes.size());
  }
  out.flush();
  if (!out) throw IoError("save_index: write failed for " + path);
}

LoadedIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_index: cannot open " + path);

  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path + ": bad magic, not an index file");
  }
  const auto version = get<uint32_t>(in, path, "version");
  if (version != kFormatVersion) {
    throw FormatError(path + ": unsupported format version " + std::to_string(version));
  }
  const auto metric_raw = get<uint8_t>(in, path, "metric");
  if (metric_raw > 1) throw FormatError(path + ": unknown metric code");

  LoadedIndex loaded;
  HnswIndex& idx = loaded.index;
  idx.base.metric = static_cast<Metric>(metric_raw);
  idx.params.M = get<uint32_t>(in, path, "M");
  idx.params.ef_construction = get<uint32_t>(in, path, "ef_construction");
  idx.params.level_multiplier = get<double>(in, path, "level multiplier");
  const auto count = get<uint64_t>(in, path, "count");
  idx.max_level = get<uint32_t>(in, path, "max_level");
  if (idx.params.M == 0) throw FormatError(path + ": M must be positive");

  const auto entry_len = get<uint32_t>(in, path, "entry list length");
  if (entry_len == 0 && count > 0) {
    throw FormatError(path + ": empty entry list for non-empty index");
  }
  idx.entry_points.resize(entry_len);
  get_array(in, idx.entry_points.data(), entry_len, path, "entry list");
  idx.node_level.resize(count);
  get_array(in, idx.node_level.data(), count, path, "node levels");
  for (uint32_t e : idx.entry_points) {
    if (e >= count) throw FormatError(path + ": entry point id out of range");
  }
  for (uint32_t l : idx.node_level) {
    if (l > idx.max_level) throw FormatError(path + ": node level exceeds max_level");
  }

  idx.base.count = count;
  idx.layer0.resize(count * 2 * idx.params.M);
  get_array(in, idx.layer0.data(), idx.layer0.size(), path, "layer 0 adjacency");
  idx.upper.resize(count);
  for (size_t node = 0; node < count; ++node) {
    idx.upper[node].assign(static_cast<size_t>(idx.node_level[node]) * idx.params.M,
                           kEmptySlot);
  }
  for (uint32_t level = 1; level <= idx.max_level && count > 0; ++level) {
    for (size_t node = 0; node < count; ++node) {
      if (idx.node_level[node] < level) continue;
      auto slots = idx.neighbors(static_cast<uint32_t>(node), level);
      get_array(in, slots.data(), slots.size(), path, "upper adjacency");
    }
  }

  uint8_t has_vectors = 0;
  in.read(reinterpret_cast<char*>(&has_vectors), 1);
  if (in && has_vectors == 1) {
    idx.base.dim = get<uint32_t>(in, path, "dim");
    if (idx.base.dim == 0) throw FormatError(path + ": dim must be positive");
    idx.base.data.resize(count * idx.base.dim);
    get_array(in, idx.base.data.data(), idx.base.data.size(), path, "base vectors");

    uint8_t has_quantized = 0;
    in.read(reinterpret_cast<char*>(&has_quantized), 1);
    if (in && has_quantized == 1) {
      QuantizedSet q;
      q.count = count;
      q.dim = idx.base.dim;
      q.metric = idx.base.metric;
      q.offset.resize(q.dim);
      q.scale.resize(q.dim);
      q.codes.resize(q.count * q.dim);
      get_array(in, q.offset.data(), q.dim, path, "quantization offsets");
      get_array(in, q.scale.data(), q.dim, path, "quantization scales");
      get_array(in, q.codes.data(), q.codes.size(), path, "quantized codes");
      for (double s : q.scale) {
        if (!(s > 0.0)) throw FormatError(path + ": non-positive quantization scale");
      }
      loaded.quantized = std::move(q);
    }
  }

  idx.frozen = true;
  return loaded;
}

}  // namespace annforge
