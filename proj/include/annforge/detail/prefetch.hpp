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

#include <cstddef>

namespace annforge::detail {

#if defined(__GNUC__) || defined(__clang__)

constexpr bool kPrefetchSupported = true;

// locality 0..3 maps to the compiler hint (3 = keep in all cache levels).
inline void prefetch_bytes(const void* address, size_t bytes, int locality) {
  const char* p = static_cast<const char*>(address);
  const char* end = p + bytes;
  for (; p < end; p += 64) {
    switch (locality) {
      case 0: __builtin_prefetch(p, 0, 0); break;
      case 1: __builtin_prefetch(p, 0, 1); break;
      case 2: __builtin_prefetch(p, 0, 2); break;
      default: __builtin_prefetch(p, 0, 3); break;
    }
  }
}

#else

constexpr bool kPrefetchSupported = false;

inline void prefetch_bytes(const void*, size_t, int) {}

#endif

}  // namespace annforge::detail
