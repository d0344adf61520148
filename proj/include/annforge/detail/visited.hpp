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
#include <vector>

namespace annforge::detail {

// Epoch-stamped visited marks: reset() is O(1) between traversals.
class VisitedTable {
 public:
  void prepare(size_t n) {
    if (marks_.size() != n) {
      marks_.assign(n, 0);
      epoch_ = 0;
    }
    if (++epoch_ == 0) {  // stamp wrap-around
      std::fill(marks_.begin(), marks_.end(), 0);
      epoch_ = 1;
    }
  }

  bool test_and_set(int32_t id) {
    if (marks_[static_cast<size_t>(id)] == epoch_) return true;
    marks_[static_cast<size_t>(id)] = epoch_;
    return false;
  }

  bool test(int32_t id) const { return marks_[static_cast<size_t>(id)] == epoch_; }

 private:
  std::vector<uint32_t> marks_;
  uint32_t epoch_ = 0;
};

}  // namespace annforge::detail
