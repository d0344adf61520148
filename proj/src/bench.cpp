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

#include "annforge/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "annforge/errors.hpp"

namespace annforge {

namespace {

double steady_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Shortest round-trip decimal form, matching between CSV and JSON output.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct QueryOutcome {
  std::vector<int32_t> ids;
  uint64_t distance_computations = 0;
};

}  // namespace

void RewardConfig::validate() const {
  if (!(recall_lo >= 0.0 && recall_lo < recall_hi && recall_hi <= 1.0)) {
    throw ArgumentError("RewardConfig: require 0 <= recall_lo < recall_hi <= 1");
  }
}

double measure_recall(const NeighborTable& results, const NeighborTable& ground_truth,
                      uint32_t k) {
  if (results.rows != ground_truth.rows) {
    throw ArgumentError("measure_recall: row count mismatch (" +
                        std::to_string(results.rows) + " vs " +
                        std::to_string(ground_truth.rows) + ")");
  }
  if (results.rows == 0) throw ArgumentError("measure_recall: empty tables");
  if (k == 0 || k > results.k || k > ground_truth.k) {
    throw ArgumentError("measure_recall: k must satisfy 1 <= k <= both tables' k");
  }
  double total = 0.0;
  std::unordered_set<int32_t> truth;
  for (size_t row = 0; row < results.rows; ++row) {
    truth.clear();
    const int32_t* t = ground_truth.row(row);
    for (uint32_t j = 0; j < k; ++j) truth.insert(t[j]);
    const int32_t* r = results.row(row);
    size_t hits = 0;
    for (uint32_t j = 0; j < k; ++j) hits += truth.count(r[j]);
    total += static_cast<double>(hits) / k;
  }
  return total / static_cast<double>(results.rows);
}

std::vector<BenchmarkPoint> run_sweep(const HnswIndex& index, const VectorSet& queries,
                                      const NeighborTable& ground_truth,
                                      const SweepOptions& opts) {
  if (opts.ef_list.empty()) throw ArgumentError("run_sweep: ef_list is empty");
  for (uint32_t ef : opts.ef_list) {
    if (ef < opts.k) {
      throw ArgumentError("run_sweep: ef " + std::to_string(ef) + " < k " +
                          std::to_string(opts.k));
    }
  }
  if (opts.repeats == 0) throw ArgumentError("run_sweep: repeats must be >= 1");
  if (queries.count == 0) throw ArgumentError("run_sweep: no queries");
  if (queries.dim != index.base.dim || queries.metric != index.base.metric) {
    throw ArgumentError("run_sweep: query set does not match the index");
  }
  if (ground_truth.rows != queries.count) {
    throw ArgumentError("run_sweep: ground truth rows != query count");
  }
  const bool refine = opts.quantized != nullptr && opts.metadata != nullptr;
  const auto now = opts.now ? opts.now : steady_seconds;
  const size_t nq = queries.count;
  const uint32_t workers =
      std::max<uint32_t>(1, std::min<uint32_t>(opts.workers, static_cast<uint32_t>(nq)));

  std::vector<uint32_t> ef_sorted = opts.ef_list;
  std::sort(ef_sorted.begin(), ef_sorted.end());

  std::vector<BenchmarkPoint> points;
  points.reserve(ef_sorted.size());
  std::vector<QueryOutcome> outcomes(nq);

  for (uint32_t ef : ef_sorted) {
    SearchParams params = opts.search;
    params.k = opts.k;
    params.ef = ef;
    params.validate();

    auto run_range = [&](size_t begin, size_t end) {
      for (size_t qi = begin; qi < end; ++qi) {
        const std::span<const float> q{queries.row(qi), queries.dim};
        SearchResult res = refine ? refine_search(index, *opts.quantized,
                                                  *opts.metadata, q, params)
                                  : search_knn(index, q, params);
        auto& out = outcomes[qi];
        out.ids.resize(res.neighbors.size());
        for (size_t j = 0; j < res.neighbors.size(); ++j) {
          out.ids[j] = res.neighbors[j].id;
        }
        out.distance_computations = res.stats.distance_computations;
      }
    };
    auto run_pass = [&] {
      if (workers == 1) {
        run_range(0, nq);
        return;
      }
      std::vector<std::thread> pool;
      pool.reserve(workers);
      const size_t chunk = (nq + workers - 1) / workers;
      for (uint32_t w = 0; w < workers; ++w) {
        const size_t begin = static_cast<size_t>(w) * chunk;
        const size_t end = std::min(nq, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(run_range, begin, end);
      }
      for (auto& t : pool) t.join();
    };

    if (opts.warmup) run_pass();
    std::vector<double> pass_seconds(opts.repeats);
    for (uint32_t rep = 0; rep < opts.repeats; ++rep) {
      const double t0 = now();
      run_pass();
      pass_seconds[rep] = now() - t0;
    }
    std::sort(pass_seconds.begin(), pass_seconds.end());
    const double median = opts.repeats % 2 == 1
                              ? pass_seconds[opts.repeats / 2]
                              : 0.5 * (pass_seconds[opts.repeats / 2 - 1] +
                                       pass_seconds[opts.repeats / 2]);
    const double guarded = std::max(median, 1e-12);

    NeighborTable table;
    table.rows = nq;
    table.k = opts.k;
    table.ids.assign(nq * opts.k, -1);
    double mean_dc = 0.0;
    for (size_t qi = 0; qi < nq; ++qi) {
      const auto& out = outcomes[qi];
      std::copy_n(out.ids.begin(), std::min<size_t>(opts.k, out.ids.size()),
                  table.ids.begin() + qi * opts.k);
      mean_dc += static_cast<double>(out.distance_computations);
    }
    mean_dc /= static_cast<double>(nq);

    BenchmarkPoint point;
    point.ef = ef;
    point.recall = measure_recall(table, ground_truth, opts.k);
    point.qps = static_cast<double>(nq) / guarded;
    point.mean_distance_computations = mean_dc;
    points.push_back(point);
  }
  return points;
}

namespace {

// Sort ascending by recall and collapse duplicate recalls onto max qps.
std::vector<BenchmarkPoint> curve_envelope(std::vector<BenchmarkPoint> points) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.recall < b.recall || (a.recall == b.recall && a.qps > b.qps);
  });
  std::vector<BenchmarkPoint> out;
  for (const auto& p : points) {
    if (!out.empty() && out.back().recall == p.recall) continue;  // max kept first
    out.push_back(p);
  }
  return out;
}

double lerp_qps(const BenchmarkPoint& a, const BenchmarkPoint& b, double recall) {
  const double t = (recall - a.recall) / (b.recall - a.recall);
  return a.qps + (b.qps - a.qps) * t;
}

}  // namespace

double reward_auc(std::vector<BenchmarkPoint> points, const RewardConfig& cfg) {
  cfg.validate();
  auto curve = curve_envelope(std::move(points));
  if (curve.empty()) return 0.0;

  std::vector<BenchmarkPoint> window;
  if (cfg.interpolate_boundaries) {
    for (size_t i = 0; i + 1 < curve.size(); ++i) {
      for (double bound : {cfg.recall_lo, cfg.recall_hi}) {
        if (curve[i].recall < bound && bound < curve[i + 1].recall) {
          BenchmarkPoint p;
          p.ef = curve[i].ef;
          p.recall = bound;
          p.qps = lerp_qps(curve[i], curve[i + 1], bound);
          window.push_back(p);
        }
      }
    }
  }
  for (const auto& p : curve) {
    if (p.recall >= cfg.recall_lo && p.recall <= cfg.recall_hi) window.push_back(p);
  }
  window = curve_envelope(std::move(window));
  if (window.size() < 2) return 0.0;

  double area = 0.0;
  for (size_t i = 0; i + 1 < window.size(); ++i) {
    area += (window[i + 1].recall - window[i].recall) *
            0.5 * (window[i].qps + window[i + 1].qps);
  }
  return area;
}

std::optional<double> qps_at_recall(std::vector<BenchmarkPoint> points,
                                    double target_recall) {
  const auto curve = curve_envelope(std::move(points));
  if (curve.empty()) return std::nullopt;
  for (const auto& p : curve) {
    if (p.recall == target_recall) return p.qps;
  }
  for (size_t i = 0; i + 1 < curve.size(); ++i) {
    if (curve[i].recall < target_recall && target_recall < curve[i + 1].recall) {
      return lerp_qps(curve[i], curve[i + 1], target_recall);
    }
  }
  return std::nullopt;
}

void emit_report(const std::vector<BenchmarkPoint>& points, double reward,
                 const RewardConfig& cfg, const std::string& path,
                 ReportFormat format) {
  cfg.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("emit_report: cannot open " + path + " for writing");

  if (format == ReportFormat::kCsv) {
    out << "ef,recall,qps,mean_distance_computations\n";
    for (const auto& p : points) {
      out << p.ef << ',' << format_double(p.recall) << ',' << format_double(p.qps)
          << ',' << format_double(p.mean_distance_computations) << '\n';
    }
  } else {
    nlohmann::ordered_json doc;
    doc["config"] = {{"recall_lo", cfg.recall_lo},
                     {"recall_hi", cfg.recall_hi},
                     {"interpolate_boundaries", cfg.interpolate_boundaries}};
    doc["reward_auc"] = reward;
    auto& arr = doc["points"] = nlohmann::ordered_json::array();
    for (const auto& p : points) {
      arr.push_back({{"ef", p.ef},
                     {"recall", p.recall},
                     {"qps", p.qps},
                     {"mean_distance_computations", p.mean_distance_computations}});
    }
    out << doc.dump(2) << '\n';
  }
  out.flush();
  if (!out) throw IoError("emit_report: write failed for " + path);
}

Report load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_report: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_report: " + path + ": " + e.what());
  }
  Report report;
  try {
    const auto& cfg = doc.at("config");
    report.config.recall_lo = cfg.at("recall_lo").get<double>();
    report.config.recall_hi = cfg.at("recall_hi").get<double>();
    report.config.interpolate_boundaries = cfg.at("interpolate_boundaries").get<bool>();
    report.reward = doc.at("reward_auc").get<double>();
    for (const auto& node : doc.at("points")) {
      BenchmarkPoint p;
      p.ef = node.at("ef").get<uint32_t>();
      p.recall = node.at("recall").get<double>();
      p.qps = node.at("qps").get<double>();
      p.mean_distance_computations = node.at("mean_distance_computations").get<double>();
      report.points.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_report: " + path + ": missing or mistyped field: " + e.what());
  }
  report.config.validate();
  return report;
}

}  // namespace annforge
