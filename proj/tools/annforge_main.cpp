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

#include <charconv>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "annforge/bench.hpp"
#include "annforge/dataset.hpp"
#include "annforge/errors.hpp"
#include "annforge/graph.hpp"
#include "annforge/harness.hpp"
#include "annforge/index_io.hpp"
#include "annforge/refine.hpp"
#include "annforge/rng.hpp"
#include "annforge/search.hpp"

namespace {

using namespace annforge;

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::kEuclidean;
  if (name == "angular") return Metric::kAngular;
  throw ArgumentError("unknown metric '" + name + "' (expected euclidean or angular)");
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct GtArgs {
  std::string base, query, out;
  std::string metric = "euclidean";
  uint32_t k = 100;
};

struct BuildArgs {
  std::string base, out;
  std::string metric = "euclidean";
  uint32_t M = 16;
  uint32_t ef_construction = 200;
  double level_multiplier = 1.0 / std::log(2.0);
  uint32_t entry_cap = 9;
  uint64_t seed = 0;
  std::optional<double> target_recall;
  bool quantize = false;
};

struct SearchArgs {
  std::string index, query;
  uint32_t k = 10;
  uint32_t ef = 64;
  std::optional<double> target_recall;
  double critical_threshold = 0.95;
  double ef_scale = 14.5;
  bool no_early_term = false;
  bool no_prefetch = false;
  bool refine = false;
};

struct BenchArgs {
  std::string index, query, gt, out;
  uint32_t k = 10;
  std::vector<uint32_t> sweep = kDefaultEfSweep;
  uint32_t repeats = 3;
  uint32_t workers = 1;
  bool no_warmup = false;
  bool refine = false;
  std::optional<double> target_recall;
  double critical_threshold = 0.95;
  double ef_scale = 14.5;
  double recall_lo = 0.85;
  double recall_hi = 0.95;
  bool no_interpolate = false;
  std::string format = "json";
};

struct RewardArgs {
  std::string report;
  double recall_lo = 0.85;
  double recall_hi = 0.95;
  bool no_interpolate = false;
};

struct SampleArgs {
  std::string store;
  double temperature = 1.0;
  uint32_t count = 2;
  uint64_t seed = 0;
};

int run_gt(const GtArgs& args) {
  const Metric metric = parse_metric(args.metric);
  const VectorSet base = load_fvecs(args.base, metric);
  const VectorSet queries = load_fvecs(args.query, metric);
  const NeighborTable table = brute_force_ground_truth(base, queries, args.k);
  save_ivecs(table, args.out);
  std::cout << "wrote " << table.rows << " x " << table.k << " ground truth to "
            << args.out << "\n";
  return 0;
}

int run_build(const BuildArgs& args) {
  const Metric metric = parse_metric(args.metric);
  const VectorSet base = load_fvecs(args.base, metric);
  IndexParams params;
  params.M = args.M;
  params.ef_construction = args.ef_construction;
  params.level_multiplier = args.level_multiplier;
  params.entry_point_cap = args.entry_cap;
  params.seed = args.seed;
  params.target_recall = args.target_recall;
  const HnswIndex index = build(base, params);
  if (args.quantize) {
    const QuantizedSet quant = quantize_sq8(index.base);
    save_index(index, args.out, &quant);
  } else {
    save_index(index, args.out);
  }
  std::cout << "built index over " << index.count() << " vectors (max level "
            << index.max_level << ", " << index.entry_points.size()
            << " entry points) -> " << args.out << "\n";
  return 0;
}

SearchParams search_params_from(uint32_t k, uint32_t ef, std::optional<double> target,
                                double critical_threshold, double ef_scale,
                                bool no_early_term, bool no_prefetch) {
  SearchParams params;
  params.k = k;
  params.ef = ef;
  params.target_recall = target;
  params.critical_threshold = critical_threshold;
  params.ef_scale = ef_scale;
  params.early_termination = !no_early_term;
  params.prefetch_enabled = !no_prefetch;
  return params;
}

int run_search(const SearchArgs& args) {
  const LoadedIndex loaded = load_index(args.index);
  const VectorSet queries = load_fvecs(args.query, loaded.index.base.metric);
  const SearchParams params =
      search_params_from(args.k, args.ef, args.target_recall, args.critical_threshold,
                         args.ef_scale, args.no_early_term, args.no_prefetch);
  std::optional<EdgeMetadata> metadata;
  if (args.refine) {
    if (!loaded.quantized) {
      throw StateError("--refine requires an index built with --quantize");
    }
    metadata = build_edge_metadata(loaded.index);
  }
  for (size_t qi = 0; qi < queries.count; ++qi) {
    const std::span<const float> q{queries.row(qi), queries.dim};
    const SearchResult res =
        args.refine ? refine_search(loaded.index, *loaded.quantized, *metadata, q, params)
                    : search_knn(loaded.index, q, params);
    for (size_t j = 0; j < res.neighbors.size(); ++j) {
      if (j) std::cout << ' ';
      std::cout << res.neighbors[j].id;
    }
    std::cout << '\n';
  }
  return 0;
}

int run_bench(const BenchArgs& args) {
  const LoadedIndex loaded = load_index(args.index);
  const VectorSet queries = load_fvecs(args.query, loaded.index.base.metric);
  const NeighborTable gt = load_ivecs(args.gt);

  SweepOptions opts;
  opts.ef_list = args.sweep;
  opts.k = args.k;
  opts.warmup = !args.no_warmup;
  opts.repeats = args.repeats;
  opts.workers = args.workers;
  opts.search = search_params_from(args.k, args.k, args.target_recall,
                                  args.critical_threshold, args.ef_scale, false, false);
  std::optional<EdgeMetadata> metadata;
  if (args.refine) {
    if (!loaded.quantized) {
      throw StateError("--refine requires an index built with --quantize");
    }
    metadata = build_edge_metadata(loaded.index);
    opts.quantized = &*loaded.quantized;
    opts.metadata = &*metadata;
  }

  const auto points = run_sweep(loaded.index, queries, gt, opts);
  RewardConfig cfg;
  cfg.recall_lo = args.recall_lo;
  cfg.recall_hi = args.recall_hi;
  cfg.interpolate_boundaries = !args.no_interpolate;
  const double reward = reward_auc(points, cfg);
  const ReportFormat format =
      args.format == "csv" ? ReportFormat::kCsv : ReportFormat::kJson;
  emit_report(points, reward, cfg, args.out, format);

  for (const auto& p : points) {
    std::printf("ef=%-5u recall=%.4f qps=%.1f dist=%.1f\n", p.ef, p.recall, p.qps,
                p.mean_distance_computations);
  }
  std::cout << "reward_auc " << shortest(reward) << "\n";
  return 0;
}

int run_reward(const RewardArgs& args) {
  const Report report = load_report(args.report);
  RewardConfig cfg;
  cfg.recall_lo = args.recall_lo;
  cfg.recall_hi = args.recall_hi;
  cfg.interpolate_boundaries = !args.no_interpolate;
  std::cout << shortest(reward_auc(report.points, cfg)) << "\n";
  return 0;
}

int run_sample(const SampleArgs& args) {
  const CandidateDb db(args.store);
  SamplerConfig cfg;
  cfg.temperature = args.temperature;
  cfg.exemplar_count = args.count;
  Rng rng(args.seed);
  const SampledExemplars sampled = sample_exemplars(db, cfg, rng);
  for (const auto& rec : sampled.records) std::cout << rec.id << "\n";
  if (sampled.truncated) {
    std::cerr << "note: store holds only " << db.size() << " records\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"annforge: HNSW nearest-neighbor engine and benchmark harness"};
  app.require_subcommand(1);

  GtArgs gt_args;
  auto* gt = app.add_subcommand("gt", "Compute exact ground truth (ivecs)");
  gt->add_option("--base", gt_args.base, "Base vectors (fvecs)")->required();
  gt->add_option("--query", gt_args.query, "Query vectors (fvecs)")->required();
  gt->add_option("--k", gt_args.k, "Neighbors per query")->capture_default_str();
  gt->add_option("--metric", gt_args.metric, "euclidean|angular")->capture_default_str();
  gt->add_option("--out", gt_args.out, "Output path (ivecs)")->required();

  BuildArgs build_args;
  auto* bld = app.add_subcommand("build", "Build and save an index");
  bld->add_option("--base", build_args.base, "Base vectors (fvecs)")->required();
  bld->add_option("--metric", build_args.metric, "euclidean|angular")
      ->capture_default_str();
  bld->add_option("--M", build_args.M, "Upper-layer degree cap")->capture_default_str();
  bld->add_option("--ef-construction", build_args.ef_construction,
                  "Construction beam width")
      ->capture_default_str();
  bld->add_option("--level-multiplier", build_args.level_multiplier,
                  "Layer assignment multiplier mL")
      ->capture_default_str();
  bld->add_option("--entry-cap", build_args.entry_cap, "Max diverse entry points")
      ->capture_default_str();
  bld->add_option("--seed", build_args.seed, "Level-assignment RNG seed")->required();
  bld->add_option("--target-recall", build_args.target_recall,
                  "Scale the construction beam for this recall target");
  bld->add_flag("--quantize", build_args.quantize, "Store SQ8 codes in the index file");
  bld->add_option("--out", build_args.out, "Output index path")->required();

  SearchArgs search_args;
  auto* srch = app.add_subcommand("search", "Query an index, print top-k ids");
  srch->add_option("--index", search_args.index, "Index file")->required();
  srch->add_option("--query", search_args.query, "Query vectors (fvecs)")->required();
  srch->add_option("--k", search_args.k, "Results per query")->capture_default_str();
  srch->add_option("--ef", search_args.ef, "Search beam width")->capture_default_str();
  srch->add_option("--target-recall", search_args.target_recall,
                   "Dynamic ef target recall");
  srch->add_option("--critical-threshold", search_args.critical_threshold,
                   "Recall above which ef scales")
      ->capture_default_str();
  srch->add_option("--ef-scale", search_args.ef_scale, "Dynamic ef scale factor")
      ->capture_default_str();
  srch->add_flag("--no-early-term", search_args.no_early_term,
                 "Disable convergence-based early termination");
  srch->add_flag("--no-prefetch", search_args.no_prefetch,
                 "Disable advisory memory prefetching");
  srch->add_flag("--refine", search_args.refine,
                 "Quantized preliminary search with exact rerank");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Sweep ef, measure recall and QPS");
  bench->add_option("--index", bench_args.index, "Index file")->required();
  bench->add_option("--query", bench_args.query, "Query vectors (fvecs)")->required();
  bench->add_option("--gt", bench_args.gt, "Ground truth (ivecs)")->required();
  bench->add_option("--k", bench_args.k, "Recall@k")->capture_default_str();
  bench->add_option("--sweep", bench_args.sweep, "Comma-separated ef values")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--repeats", bench_args.repeats, "Timed passes per ef")
      ->capture_default_str();
  bench->add_option("--workers", bench_args.workers, "Concurrent query workers")
      ->capture_default_str();
  bench->add_flag("--no-warmup", bench_args.no_warmup, "Skip the untimed warmup pass");
  bench->add_flag("--refine", bench_args.refine, "Benchmark the quantized pipeline");
  bench->add_option("--target-recall", bench_args.target_recall,
                    "Dynamic ef target recall");
  bench->add_option("--critical-threshold", bench_args.critical_threshold,
                    "Recall above which ef scales")
      ->capture_default_str();
  bench->add_option("--ef-scale", bench_args.ef_scale, "Dynamic ef scale factor")
      ->capture_default_str();
  bench->add_option("--recall-lo", bench_args.recall_lo, "Reward window lower bound")
      ->capture_default_str();
  bench->add_option("--recall-hi", bench_args.recall_hi, "Reward window upper bound")
      ->capture_default_str();
  bench->add_flag("--no-interpolate", bench_args.no_interpolate,
                  "Skip reward-window boundary interpolation");
  bench->add_option("--format", bench_args.format, "json|csv")->capture_default_str();
  bench->add_option("--out", bench_args.out, "Report output path")->required();

  RewardArgs reward_args;
  auto* rew = app.add_subcommand("reward", "Recompute the AUC reward from a report");
  rew->add_option("--report", reward_args.report, "JSON report from bench")->required();
  rew->add_option("--recall-lo", reward_args.recall_lo, "Reward window lower bound")
      ->capture_default_str();
  rew->add_option("--recall-hi", reward_args.recall_hi, "Reward window upper bound")
      ->capture_default_str();
  rew->add_flag("--no-interpolate", reward_args.no_interpolate,
                "Skip reward-window boundary interpolation");

  SampleArgs sample_args;
  auto* smp = app.add_subcommand("sample", "Sample exemplars from a candidate store");
  smp->add_option("--store", sample_args.store, "Candidate store (JSON lines)")
      ->required();
  smp->add_option("--temperature", sample_args.temperature, "Softmax temperature")
      ->capture_default_str();
  smp->add_option("--count", sample_args.count, "Exemplars to draw")
      ->capture_default_str();
  smp->add_option("--seed", sample_args.seed, "Sampling RNG seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gt) return run_gt(gt_args);
    if (*bld) return run_build(build_args);
    if (*srch) return run_search(search_args);
    if (*bench) return run_bench(bench_args);
    if (*rew) return run_reward(reward_args);
    if (*smp) return run_sample(sample_args);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
