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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "annforge/dataset.hpp"
#include "annforge/graph.hpp"
#include "annforge/refine.hpp"
#include "annforge/search.hpp"

namespace annforge {

struct BenchmarkPoint {
  uint32_t ef = 0;
  double recall = 0.0;
  double qps = 0.0;
  double mean_distance_computations = 0.0;
};

// Window and boundary handling for the scalar AUC reward.
struct RewardConfig {
  double recall_lo = 0.85;
  double recall_hi = 0.95;
  bool interpolate_boundaries = true;

  void validate() const;
};

inline const std::vector<uint32_t> kDefaultEfSweep = {10, 20, 40, 80, 120, 200, 400, 800};

struct SweepOptions {
  std::vector<uint32_t> ef_list = kDefaultEfSweep;
  uint32_t k = 10;
  bool warmup = true;
  uint32_t repeats = 3;
  uint32_t workers = 1;
  // Template for per-point SearchParams; k and ef are overwritten per point.
  SearchParams search;
  // When both are set the sweep times the quantized+rerank pipeline.
  const QuantizedSet* quantized = nullptr;
  const EdgeMetadata* metadata = nullptr;
  // Monotonic seconds; injectable for deterministic timing tests.
  std::function<double()> now;
};

// Mean over queries of |returned top-k as set ∩ true top-k| / k.
double measure_recall(const NeighborTable& results, const NeighborTable& ground_truth,
                      uint32_t k);

// One BenchmarkPoint per ef, ascending: optional untimed warmup, then
// `repeats` timed passes over all queries; QPS = count / median pass time.
std::vector<BenchmarkPoint> run_sweep(const HnswIndex& index, const VectorSet& queries,
                                      const NeighborTable& ground_truth,
                                      const SweepOptions& opts);

// Trapezoidal area of the qps-over-recall curve inside [recall_lo,
// recall_hi]; optionally interpolates points onto the window boundaries.
double reward_auc(std::vector<BenchmarkPoint> points, const RewardConfig& cfg);

// Linear interpolation of qps at target_recall; nullopt when no point pair
// brackets the target.
std::optional<double> qps_at_recall(std::vector<BenchmarkPoint> points,
                                    double target_recall);

enum class ReportFormat { kCsv, kJson };

// CSV: ef,recall,qps,mean_distance_computations rows. JSON adds the reward
// scalar and the RewardConfig echo. Byte-stable for identical inputs.
void emit_report(const std::vector<BenchmarkPoint>& points, double reward,
                 const RewardConfig& cfg, const std::string& path, ReportFormat format);

struct Report {
  std::vector<BenchmarkPoint> points;
  double reward = 0.0;
  RewardConfig config;
};

// Reads a JSON report written by emit_report.
Report load_report(const std::string& path);

}  // namespace annforge
