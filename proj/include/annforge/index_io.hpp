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

#include <optional>
#include <string>

#include "annforge/graph.hpp"
#include "annforge/refine.hpp"

namespace annforge {

// Binary index file, little-endian. Layout: magic "CRNN", version u32,
// metric u8, M u32, ef_construction u32, mL f64, count u64, max_level u32,
// entry list (u32 len + u32 ids), node_level u32[count], then per layer the
// contiguous i32 slot arrays (cap(l) per member node, ascending id, -1
// sentinel). Two optional flagged sections follow: base vectors (u8 flag,
// dim u32, f32 rows) and SQ8 codes (u8 flag, offset f64[dim], scale
// f64[dim], u8 codes). Round-trips to identical search results.
void save_index(const HnswIndex& index, const std::string& path,
                const QuantizedSet* quantized = nullptr);

struct LoadedIndex {
  HnswIndex index;
  std::optional<QuantizedSet> quantized;
};

LoadedIndex load_index(const std::string& path);

}  // namespace annforge
