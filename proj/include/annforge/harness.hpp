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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "annforge/rng.hpp"

namespace annforge {

// Which engine module a generated candidate targets.
enum class ModuleTag { kGraphConstruction, kSearch, kRefinement };

const char* to_string(ModuleTag tag);
ModuleTag module_tag_from_string(const std::string& name);

struct CandidateRecord {
  int64_t id = 0;
  std::string code;
  double score = 0.0;  // the AUC reward scalar
  ModuleTag module_tag = ModuleTag::kSearch;
  int64_t created_at = 0;  // unix epoch milliseconds
};

// Performance-indexed store of scored code samples. Optionally backed by an
// append-only JSON-lines file (one record per line); appends are flushed per
// record so a crash loses at most the in-flight line.
class CandidateDb {
 public:
  CandidateDb() = default;
  // Loads existing records from path (if any); later registrations append.
  explicit CandidateDb(std::string path);

  int64_t register_candidate(const std::string& code, double score, ModuleTag tag);
  int64_t register_candidate(const std::string& code, double score, ModuleTag tag,
                             int64_t created_at);

  const std::vector<CandidateRecord>& records() const { return records_; }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  // Arithmetic mean of all scores (the mu of the sampling distribution).
  double mean_score() const;

 private:
  std::vector<CandidateRecord> records_;
  std::string path_;
  int64_t next_id_ = 0;
};

struct SamplerConfig {
  double temperature = 1.0;
  size_t exemplar_count = 2;

  void validate() const;
};

// First-draw distribution: P(i) = exp((s_i - mu)/tau) / sum_j exp((s_j -
// mu)/tau) with mu the mean score; computed with a max shift before
// exponentiation for stability.
std::vector<double> softmax_sampling_probabilities(std::span<const double> scores,
                                                   double temperature);

struct SampledExemplars {
  std::vector<CandidateRecord> records;
  // Set when exemplar_count exceeded the database size and all records were
  // returned instead.
  bool truncated = false;
};

// Draws exemplar_count records without replacement, renormalizing the
// softmax over the remainder after each draw; mu stays fixed for the call.
SampledExemplars sample_exemplars(const CandidateDb& db, const SamplerConfig& cfg,
                                  Rng& rng);

// Winsorize at the group's 5th/95th percentiles (linear-interpolated), then
// divide by the group's maximum absolute value; all-zero groups stay zero.
// Rank-preserving.
std::vector<double> smooth_rewards(std::span<const double> raw);

struct NormalizedRewards {
  std::vector<double> values;
  bool zero_variance = false;
};

// Group-relative normalization: (r - mean) / population std; a zero-variance
// group yields all zeros with the flag set.
NormalizedRewards normalize_group_rewards(std::span<const double> rewards,
                                          size_t group_size);

struct PromptBundle {
  std::string task_description;
  std::vector<std::pair<std::string, double>> exemplars;  // (code, score)
  std::string generation_protocol;
  std::string critical_requirements;
};

// Renders the four prompt sections in protocol order; each exemplar becomes
// a fenced code block annotated with its score to four decimals.
std::string assemble_prompt(const PromptBundle& bundle);

struct ResponseSections {
  std::string performance_analysis;
  std::string algorithm_design;
  std::string code_implementation;
};

// Splits a response on the three canonical headers (case-insensitive,
// tolerant of numbering/heading prefixes, fence-aware); the code section is
// the first fenced block after the third header. Throws ParseError naming
// the missing part.
ResponseSections parse_response(const std::string& text);

// Canonical rendering of a response; parse_response(render_response(s)) == s
// for fence-free section bodies.
std::string render_response(const ResponseSections& sections);

}  // namespace annforge
