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

// Acceptance suite: twelve end-to-end criteria over a pinned synthetic
// workload (20,000 base x 32 dims, 200 queries, euclidean). One line per
// criterion, every tolerance stated inline, exit status 0 iff all pass.
// Criteria that depend on the shared dataset or the pinned build report a
// dependency failure instead of cascading exceptions.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "annforge/bench.hpp"
#include "annforge/dataset.hpp"
#include "annforge/errors.hpp"
#include "annforge/graph.hpp"
#include "annforge/harness.hpp"
#include "annforge/index_io.hpp"
#include "annforge/refine.hpp"
#include "annforge/rng.hpp"
#include "annforge/search.hpp"
#include "reference_search.hpp"
#include "test_util.hpp"

namespace {

using namespace annforge;

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::span<const float> query_row(const VectorSet& vs, size_t q) {
  return {vs.row(q), vs.dim};
}

// Shared state threaded through the criteria in order.
struct Fixture {
  VectorSet base;
  VectorSet queries;
  NeighborTable gt;
  std::optional<HnswIndex> index;
  std::optional<QuantizedSet> quant;
  bool data_ready = false;
};

// Runs every query through `search_knn` with `params` and collects the top-k
// id table plus the mean distance-computation counter.
NeighborTable knn_table(const HnswIndex& index, const VectorSet& queries,
                        const SearchParams& params, double* mean_dc = nullptr) {
  NeighborTable nt;
  nt.rows = queries.count;
  nt.k = params.k;
  nt.ids.resize(nt.rows * nt.k);
  uint64_t dc = 0;
  for (size_t q = 0; q < queries.count; ++q) {
    const SearchResult res = search_knn(index, query_row(queries, q), params);
    for (size_t j = 0; j < nt.k; ++j) {
      nt.ids[q * nt.k + j] = res.neighbors[j].id;
    }
    dc += res.stats.distance_computations;
  }
  if (mean_dc) *mean_dc = static_cast<double>(dc) / static_cast<double>(queries.count);
  return nt;
}

// --- C1: oracle correctness ------------------------------------------------

std::string c1(Fixture& fx) {
  const double t0 = now_s();
  fx.base = generate_synthetic(20000, 32, 42, Metric::kEuclidean);
  fx.queries = generate_synthetic(200, 32, 43, Metric::kEuclidean);
  fx.gt = brute_force_ground_truth(fx.base, fx.queries, 10);
  const NeighborTable oracle = testing::exhaustive_scan(fx.base, fx.queries, 10);
  if (fx.gt.rows != oracle.rows || fx.gt.k != oracle.k) {
    return "ground-truth table shape mismatch";
  }
  for (size_t q = 0; q < fx.gt.rows; ++q) {
    for (size_t j = 0; j < fx.gt.k; ++j) {
      if (fx.gt.row(q)[j] != oracle.row(q)[j]) {
        return "id mismatch vs independent scan at query " + std::to_string(q) +
               " rank " + std::to_string(j);
      }
    }
  }
  const double self = measure_recall(fx.gt, fx.gt, 10);
  if (self != 1.0) return "self recall " + fmt(self) + " != 1.0";
  fx.data_ready = true;
  const double dt = now_s() - t0;
  if (dt >= 30.0) return "runtime " + fmt(dt) + "s, limit 30s";
  return {};
}

// --- C2: baseline build quality --------------------------------------------

std::string c2(Fixture& fx) {
  if (!fx.data_ready) return "dataset unavailable (C1 failed)";
  const double t0 = now_s();
  IndexParams params;
  params.M = 16;
  params.ef_construction = 200;
  params.seed = 7;
  fx.index = build(fx.base, params);
  const std::vector<uint32_t> efs = {16, 32, 64, 128, 256};
  std::vector<double> recalls;
  for (uint32_t ef : efs) {
    const NeighborTable nt =
        knn_table(*fx.index, fx.queries, SearchParams::baseline(10, ef));
    recalls.push_back(measure_recall(nt, fx.gt, 10));
  }
  for (size_t i = 1; i < recalls.size(); ++i) {
    if (recalls[i] < recalls[i - 1] - 0.005) {
      return "sweep step ef=" + std::to_string(efs[i]) + " drops recall " +
             fmt(recalls[i - 1]) + " -> " + fmt(recalls[i]) + " (tolerance 0.005)";
    }
  }
  if (recalls[3] < 0.90) return "recall@10 " + fmt(recalls[3]) + " < 0.90 at ef=128";
  if (recalls[4] < 0.95) return "recall@10 " + fmt(recalls[4]) + " < 0.95 at ef=256";
  const double dt = now_s() - t0;
  if (dt >= 120.0) return "runtime " + fmt(dt) + "s, limit 120s";
  return {};
}

// --- C3: reward fidelity ---------------------------------------------------

std::string c3(Fixture&) {
  const auto pt = [](double recall, double qps) {
    BenchmarkPoint p;
    p.ef = 1;
    p.recall = recall;
    p.qps = qps;
    return p;
  };
  const RewardConfig cfg;
  const double auc = reward_auc({pt(0.85, 1000), pt(0.90, 800), pt(0.95, 600)}, cfg);
  if (std::abs(auc - 80.0) > 1e-9) {
    return "hand-point reward " + fmt(auc) + " != 80 +/- 1e-9";
  }
  if (reward_auc({}, cfg) != 0.0) return "empty window reward != 0";
  if (reward_auc({pt(0.90, 500)}, cfg) != 0.0) return "single-point reward != 0";
  const std::optional<double> q =
      qps_at_recall({pt(0.88, 1000), pt(0.92, 600)}, 0.90);
  if (!q) return "qps_at_recall(0.90) found no bracket";
  if (std::abs(*q - 800.0) > 1e-9) {
    return "qps_at_recall(0.90) " + fmt(*q) + " != 800 +/- 1e-9";
  }
  return {};
}

// --- C4: softmax exemplar sampling -----------------------------------------

std::string c4(Fixture&) {
  testing::TempDir td;
  CandidateDb db(td.file("cands.jsonl"));
  const int64_t hi = db.register_candidate("high", 1.0, ModuleTag::kSearch, 1000);
  db.register_candidate("low", 0.0, ModuleTag::kSearch, 1001);
  SamplerConfig cfg;
  cfg.temperature = 1.0;
  cfg.exemplar_count = 1;
  Rng rng(20260823);
  const size_t trials = 100000;
  size_t hits = 0;
  for (size_t t = 0; t < trials; ++t) {
    const SampledExemplars s = sample_exemplars(db, cfg, rng);
    if (s.records.front().id == hi) ++hits;
  }
  const double freq = static_cast<double>(hits) / static_cast<double>(trials);
  const double p = std::exp(1.0) / (std::exp(1.0) + 1.0);  // 0.73106
  const double band = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  if (std::abs(freq - p) > band) {
    return "first-draw frequency " + fmt(freq) + " outside " + fmt(p) + " +/- " +
           fmt(band) + " (3 SE over 100k trials)";
  }
  const std::vector<double> a = {1.0, 0.0};
  const std::vector<double> b = {1001.0, 1000.0};
  const std::vector<double> pa = softmax_sampling_probabilities(a, 1.0);
  const std::vector<double> pb = softmax_sampling_probabilities(b, 1.0);
  for (size_t i = 0; i < pa.size(); ++i) {
    if (std::abs(pa[i] - pb[i]) > 1e-12) {
      return "shift invariance violated by " + fmt(std::abs(pa[i] - pb[i])) +
             " (tolerance 1e-12)";
    }
  }
  return {};
}

// --- C5: group reward normalization ----------------------------------------

std::string c5(Fixture&) {
  const std::vector<double> g = {1.0, 2.0, 3.0};
  const NormalizedRewards nr = normalize_group_rewards(g, 3);
  const double expected[3] = {-1.2247, 0.0, 1.2247};
  for (size_t i = 0; i < 3; ++i) {
    if (std::abs(nr.values[i] - expected[i]) > 1e-4) {
      return "{1,2,3} -> " + fmt(nr.values[i]) + " at position " +
             std::to_string(i) + ", expected " + fmt(expected[i]) + " +/- 1e-4";
    }
  }
  Rng rng(5150);
  for (int rep = 0; rep < 8; ++rep) {
    std::vector<double> group(4 + rep);
    for (double& v : group) v = rng.gaussian() * 37.0 + 11.0;
    const NormalizedRewards out = normalize_group_rewards(group, group.size());
    double mean = 0.0;
    for (double v : out.values) mean += v;
    mean /= static_cast<double>(out.values.size());
    double var = 0.0;
    for (double v : out.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(out.values.size());
    if (std::abs(mean) > 1e-12) {
      return "normalized mean " + fmt(mean) + " exceeds 1e-12";
    }
    if (std::abs(std::sqrt(var) - 1.0) > 1e-12) {
      return "normalized population std " + fmt(std::sqrt(var)) +
             " not 1 +/- 1e-12";
    }
  }
  const std::vector<double> flat = {4.0, 4.0, 4.0, 4.0};
  const NormalizedRewards zv = normalize_group_rewards(flat, 4);
  if (!zv.zero_variance) return "zero-variance group not flagged";
  for (double v : zv.values) {
    if (v != 0.0) return "zero-variance group produced " + fmt(v) + " != 0";
  }
  return {};
}

// --- C6: structural invariants ---------------------------------------------

std::string c6(Fixture& fx) {
  if (!fx.index) return "index unavailable (C2 failed)";
  const std::string violation = testing::check_index_invariants(*fx.index);
  if (!violation.empty()) return violation;
  const double frac = testing::layer0_reachable_fraction(*fx.index);
  if (frac < 0.99) {
    return "layer-0 reachability " + fmt(frac) + " < 0.99";
  }
  return {};
}

// --- C7: optimization-flag soundness ---------------------------------------

std::string c7(Fixture& fx) {
  if (!fx.index) return "index unavailable (C2 failed)";
  const HnswIndex& index = *fx.index;
  // All optimizations off must reproduce the independently coded plain
  // hierarchical search exactly, id for id.
  for (uint32_t ef : {64u, 128u}) {
    const SearchParams off = SearchParams::baseline(10, ef);
    for (size_t q = 0; q < fx.queries.count; ++q) {
      const SearchResult res = search_knn(index, query_row(fx.queries, q), off);
      const std::vector<int32_t> ref =
          testing::plain_search(index, query_row(fx.queries, q), 10, ef);
      if (res.neighbors.size() != ref.size()) {
        return "baseline result size differs from plain reference at query " +
               std::to_string(q);
      }
      for (size_t j = 0; j < ref.size(); ++j) {
        if (res.neighbors[j].id != ref[j]) {
          return "baseline ids differ from plain reference at query " +
                 std::to_string(q) + " rank " + std::to_string(j) + " (ef=" +
                 std::to_string(ef) + ")";
        }
      }
    }
  }
  // Prefetch is advisory: toggling it must not change ids or distances.
  SearchParams pre_on;
  pre_on.k = 10;
  pre_on.ef = 128;
  SearchParams pre_off = pre_on;
  pre_off.prefetch_enabled = false;
  for (size_t q = 0; q < fx.queries.count; ++q) {
    const SearchResult on = search_knn(index, query_row(fx.queries, q), pre_on);
    const SearchResult off = search_knn(index, query_row(fx.queries, q), pre_off);
    if (on.neighbors.size() != off.neighbors.size()) {
      return "prefetch toggle changed result count at query " + std::to_string(q);
    }
    for (size_t j = 0; j < on.neighbors.size(); ++j) {
      if (on.neighbors[j].id != off.neighbors[j].id ||
          on.neighbors[j].distance != off.neighbors[j].distance) {
        return "prefetch toggle changed results at query " + std::to_string(q);
      }
    }
  }
  // Early termination at defaults: bounded recall cost, real budget savings.
  SearchParams et_on;
  et_on.k = 10;
  et_on.ef = 128;
  SearchParams et_off = et_on;
  et_off.early_termination = false;
  double dc_on = 0.0;
  double dc_off = 0.0;
  const NeighborTable nt_on = knn_table(index, fx.queries, et_on, &dc_on);
  const NeighborTable nt_off = knn_table(index, fx.queries, et_off, &dc_off);
  const double recall_on = measure_recall(nt_on, fx.gt, 10);
  const double recall_off = measure_recall(nt_off, fx.gt, 10);
  if (recall_off - recall_on > 0.02) {
    return "early termination costs " + fmt(recall_off - recall_on) +
           " recall at ef=128, limit 0.02";
  }
  if (dc_on > 0.95 * dc_off) {
    return "early termination saves only " + fmt(100.0 * (1.0 - dc_on / dc_off)) +
           "% distance computations at ef=128, needs >= 5%";
  }
  return {};
}

// --- C8: dynamic ef --------------------------------------------------------

std::string c8(Fixture&) {
  const uint32_t scaled = dynamic_ef(100, 0.98, 0.95, 14.5);
  if (scaled != 143) {
    return "dynamic_ef(100, 0.98, 0.95, 14.5) = " + std::to_string(scaled) +
           ", expected 143";
  }
  if (dynamic_ef(100, 0.90, 0.95, 14.5) != 100) {
    return "target below threshold must leave ef unchanged";
  }
  if (dynamic_ef(100, std::nullopt, 0.95, 14.5) != 100) {
    return "absent target must leave ef unchanged";
  }
  uint32_t prev = 0;
  for (int i = 0; i <= 20; ++i) {
    const double target = std::min(0.90 + 0.005 * i, 1.0);
    const uint32_t v = dynamic_ef(100, target, 0.95, 14.5);
    if (v < prev) {
      return "dynamic_ef not monotone at target " + fmt(target);
    }
    prev = v;
  }
  return {};
}

// --- C9: SQ8 refinement ----------------------------------------------------

std::string c9(Fixture& fx) {
  if (!fx.index) return "index unavailable (C2 failed)";
  const HnswIndex& index = *fx.index;
  fx.quant = quantize_sq8(index.base);
  const QuantizedSet& quant = *fx.quant;
  const EdgeMetadata meta = build_edge_metadata(index);

  // Decode error bounded by half a quantization step everywhere.
  for (size_t i = 0; i < quant.count; ++i) {
    const float* row = index.base.row(i);
    const uint8_t* codes = quant.row(i);
    for (size_t d = 0; d < quant.dim; ++d) {
      const double err = std::abs(sq8_decode(quant, codes[d], d) -
                                  static_cast<double>(row[d]));
      if (err > quant.scale[d] / 2.0 + 1e-9) {
        return "decode error " + fmt(err) + " exceeds half-step " +
               fmt(quant.scale[d] / 2.0) + " at row " + std::to_string(i) +
               " dim " + std::to_string(d);
      }
    }
  }

  // Quantized preliminary pass plus exact rerank stays within 0.01 recall of
  // the full-precision search at ef=128.
  SearchParams sp;
  sp.k = 10;
  sp.ef = 128;
  const NeighborTable full = knn_table(index, fx.queries, sp);
  NeighborTable refined;
  refined.rows = fx.queries.count;
  refined.k = 10;
  refined.ids.resize(refined.rows * refined.k);
  for (size_t q = 0; q < fx.queries.count; ++q) {
    const SearchResult res =
        refine_search(index, quant, meta, query_row(fx.queries, q), sp);
    for (size_t j = 0; j < refined.k; ++j) {
      refined.ids[q * refined.k + j] = res.neighbors[j].id;
    }
  }
  const double recall_full = measure_recall(full, fx.gt, 10);
  const double recall_refined = measure_recall(refined, fx.gt, 10);
  if (std::abs(recall_full - recall_refined) > 0.01) {
    return "refined recall " + fmt(recall_refined) + " vs full " +
           fmt(recall_full) + " differs by more than 0.01";
  }

  // Relative speed: score the same candidate pools (the ef=128 result
  // neighborhoods each beam walks, shuffled) with both kernels. The
  // quantized pass must win by at least 10% on the 3-run median.
  std::vector<std::vector<uint32_t>> pools(fx.queries.count);
  for (size_t q = 0; q < fx.queries.count; ++q) {
    const SearchResult res = search_knn(index, query_row(fx.queries, q), sp);
    std::vector<uint32_t> ids;
    for (const ScoredId& n : res.neighbors) {
      ids.push_back(static_cast<uint32_t>(n.id));
      for (int32_t s : index.neighbors(static_cast<uint32_t>(n.id), 0)) {
        if (s >= 0) ids.push_back(static_cast<uint32_t>(s));
      }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::mt19937 shuffler(static_cast<uint32_t>(q));
    std::shuffle(ids.begin(), ids.end(), shuffler);
    pools[q] = std::move(ids);
  }
  volatile float sink = 0.0f;
  const auto quant_pass = [&]() {
    float acc = 0.0f;
    for (size_t q = 0; q < fx.queries.count; ++q) {
      const Sq8QueryContext ctx(quant, query_row(fx.queries, q));
      for (uint32_t id : pools[q]) acc += ctx(static_cast<int32_t>(id));
    }
    sink = sink + acc;
  };
  const auto full_pass = [&]() {
    float acc = 0.0f;
    for (size_t q = 0; q < fx.queries.count; ++q) {
      const float* qp = fx.queries.row(q);
      for (uint32_t id : pools[q]) {
        acc += compare_distance(qp, index.base.row(id), index.base.dim,
                                index.base.metric);
      }
    }
    sink = sink + acc;
  };
  const auto timed = [&](const std::function<void()>& pass) {
    const double t0 = now_s();
    for (int rep = 0; rep < 20; ++rep) pass();
    return now_s() - t0;
  };
  quant_pass();
  full_pass();  // warm both sides
  std::vector<double> tq;
  std::vector<double> tf;
  for (int run = 0; run < 3; ++run) {
    tq.push_back(timed(quant_pass));
    tf.push_back(timed(full_pass));
  }
  std::sort(tq.begin(), tq.end());
  std::sort(tf.begin(), tf.end());
  if (tq[1] > 0.90 * tf[1]) {
    return "quantized scoring " + fmt(tq[1]) + "s vs full " + fmt(tf[1]) +
           "s on the same pools (3-run medians); needs a 10% win";
  }
  return {};
}

// --- C10: persistence ------------------------------------------------------

std::string c10(Fixture& fx) {
  if (!fx.index) return "index unavailable (C2 failed)";
  const HnswIndex& index = *fx.index;
  if (!fx.quant) fx.quant = quantize_sq8(index.base);
  testing::TempDir td;

  const std::string idx_path = td.file("index.bin");
  save_index(index, idx_path, &*fx.quant);
  const LoadedIndex loaded = load_index(idx_path);
  if (!loaded.quantized) return "quantized section missing after reload";
  if (loaded.quantized->codes != fx.quant->codes) {
    return "quantized codes changed across the round trip";
  }
  SearchParams sp;
  sp.k = 10;
  sp.ef = 128;
  for (size_t q = 0; q < fx.queries.count; ++q) {
    const SearchResult mem = search_knn(index, query_row(fx.queries, q), sp);
    const SearchResult disk =
        search_knn(loaded.index, query_row(fx.queries, q), sp);
    if (mem.neighbors.size() != disk.neighbors.size()) {
      return "loaded index returns different result count at query " +
             std::to_string(q);
    }
    for (size_t j = 0; j < mem.neighbors.size(); ++j) {
      if (mem.neighbors[j].id != disk.neighbors[j].id) {
        return "loaded index ids differ at query " + std::to_string(q) +
               " rank " + std::to_string(j);
      }
    }
  }

  const std::string db_path = td.file("cands.jsonl");
  {
    CandidateDb db(db_path);
    db.register_candidate("plain body", 80.25, ModuleTag::kSearch, 1700000000123);
    db.register_candidate("quotes \" and \\ backslash\nsecond line\ttab",
                          0.1, ModuleTag::kGraphConstruction, 1700000000456);
    std::string gnarly = "unicode pi: \xcf\x80 then a NUL ";
    gnarly.push_back('\0');
    gnarly += "and after";
    db.register_candidate(gnarly, 123.456, ModuleTag::kRefinement, 1700000000789);
  }
  CandidateDb reloaded(db_path);
  CandidateDb twice(db_path);
  if (reloaded.size() != 3) {
    return "candidate store reloaded " + std::to_string(reloaded.size()) +
           " records, expected 3";
  }
  for (size_t i = 0; i < reloaded.size(); ++i) {
    const CandidateRecord& a = reloaded.records()[i];
    const CandidateRecord& b = twice.records()[i];
    if (a.id != b.id || a.code != b.code || a.score != b.score ||
        a.module_tag != b.module_tag || a.created_at != b.created_at) {
      return "candidate record " + std::to_string(i) +
             " not bit-stable across reloads";
    }
  }
  const double scores[3] = {80.25, 0.1, 123.456};
  for (size_t i = 0; i < 3; ++i) {
    if (reloaded.records()[i].score != scores[i]) {
      return "score " + fmt(reloaded.records()[i].score) +
             " lost precision in the round trip (expected " + fmt(scores[i]) + ")";
    }
  }
  return {};
}

// --- C11: level assignment distribution ------------------------------------

std::string c11(Fixture&) {
  const double level_multiplier = 1.0 / std::log(2.0);
  Rng rng(424242);
  const size_t trials = 100000;
  size_t ge1 = 0;
  size_t ge2 = 0;
  for (size_t t = 0; t < trials; ++t) {
    const uint32_t level = assign_level(rng.uniform01(), level_multiplier);
    if (level >= 1) ++ge1;
    if (level >= 2) ++ge2;
  }
  const double p1 = static_cast<double>(ge1) / static_cast<double>(trials);
  const double p2 = static_cast<double>(ge2) / static_cast<double>(trials);
  const double band1 = 3.0 * std::sqrt(0.5 * 0.5 / static_cast<double>(trials));
  const double band2 = 3.0 * std::sqrt(0.25 * 0.75 / static_cast<double>(trials));
  if (std::abs(p1 - 0.5) > band1) {
    return "P(level>=1) " + fmt(p1) + " outside 0.5 +/- " + fmt(band1);
  }
  if (std::abs(p2 - 0.25) > band2) {
    return "P(level>=2) " + fmt(p2) + " outside 0.25 +/- " + fmt(band2);
  }
  return {};
}

// --- C12: prompt protocol --------------------------------------------------

std::string c12(Fixture&) {
  const char* words[] = {"beam",  "layer", "budget", "cache",  "visit",
                         "queue", "score", "edge",   "greedy", "batch"};
  std::mt19937 gen(77);
  const auto sentence = [&](size_t n) {
    std::string out;
    for (size_t i = 0; i < n; ++i) {
      if (i) out += ' ';
      out += words[gen() % 10];
    }
    out += '.';
    return out;
  };
  for (int f = 0; f < 20; ++f) {
    ResponseSections s;
    s.performance_analysis = sentence(5 + f % 4) + "\n" + sentence(3);
    s.algorithm_design = sentence(4 + f % 3);
    s.code_implementation = "int candidate_" + std::to_string(f) +
                            "(int ef) {\n  return ef + " + std::to_string(f) +
                            ";\n}";
    const std::string text = render_response(s);
    ResponseSections parsed;
    try {
      parsed = parse_response(text);
    } catch (const ParseError& e) {
      return "fixture " + std::to_string(f) + " failed to parse: " + e.what();
    }
    if (parsed.performance_analysis != s.performance_analysis ||
        parsed.algorithm_design != s.algorithm_design ||
        parsed.code_implementation != s.code_implementation) {
      return "fixture " + std::to_string(f) + " did not round trip";
    }
    PromptBundle bundle;
    bundle.task_description = sentence(6);
    bundle.exemplars = {{s.code_implementation, 60.0 + f}};
    bundle.generation_protocol = sentence(5);
    bundle.critical_requirements = sentence(4);
    const std::string prompt = assemble_prompt(bundle);
    if (prompt.find("## Task Description") == std::string::npos ||
        prompt.find(s.code_implementation) == std::string::npos) {
      return "assembled prompt missing sections for fixture " + std::to_string(f);
    }
  }
  // Malformed inputs must raise errors that name the missing part.
  const auto expect_error = [](const std::string& text, const std::string& needle,
                               const std::string& label) -> std::string {
    try {
      parse_response(text);
    } catch (const ParseError& e) {
      const std::string what = e.what();
      if (what.find(needle) == std::string::npos) {
        return label + ": error \"" + what + "\" does not name \"" + needle + "\"";
      }
      return {};
    }
    return label + ": no ParseError raised";
  };
  std::string err = expect_error(
      "## Performance Analysis\nfast\n## Code Implementation\n```\nint x;\n```\n",
      "Algorithm Design", "missing design header");
  if (!err.empty()) return err;
  err = expect_error(
      "## Performance Analysis\nfast\n## Algorithm Design\nplan\n"
      "## Code Implementation\nno fence here\n",
      "fence", "missing code fence");
  if (!err.empty()) return err;
  err = expect_error("", "Performance Analysis", "empty input");
  if (!err.empty()) return err;
  return {};
}

struct Criterion {
  int id;
  const char* description;
  std::function<std::string(Fixture&)> fn;
};

}  // namespace

int main() {
  Fixture fx;
  const std::vector<Criterion> criteria = {
      {1, "ground truth matches an independent exhaustive scan; self-recall 1.0", c1},
      {2, "pinned build reaches recall 0.90@ef128 / 0.95@ef256, monotone sweep", c2},
      {3, "reward AUC and qps interpolation reproduce hand-computed values", c3},
      {4, "softmax first-draw frequency within 3 SE; shift invariance 1e-12", c4},
      {5, "group normalization: hand values, mean/std identities, zero variance", c5},
      {6, "degree caps, layer monotonicity, entry distinctness, 99% reachability", c6},
      {7, "flags: baseline bit-identity, prefetch identity, early-exit budget", c7},
      {8, "dynamic ef: 100@0.98 -> 143, identity region, monotone in target", c8},
      {9, "SQ8 refine: recall parity 0.01, half-step decode, 10% scoring win", c9},
      {10, "index and candidate-store round trips preserve results and records", c10},
      {11, "level assignment: P(>=1), P(>=2) within 3 SE of 1/2, 1/4", c11},
      {12, "prompt assembly and response parsing round trip; errors name parts", c12},
  };
  int passed = 0;
  for (const Criterion& c : criteria) {
    std::string failure;
    const double t0 = now_s();
    try {
      failure = c.fn(fx);
    } catch (const std::exception& e) {
      failure = std::string("unexpected exception: ") + e.what();
    }
    const double dt = now_s() - t0;
    if (failure.empty()) {
      std::printf("[PASS] C%d: %s (%.1fs)\n", c.id, c.description, dt);
      ++passed;
    } else {
      std::printf("[FAIL] C%d: %s -- %s\n", c.id, c.description, failure.c_str());
    }
  }
  std::printf("%d/12 criteria passed\n", passed);
  return passed == 12 ? 0 : 1;
}
