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

#include "annforge/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "annforge/errors.hpp"

namespace annforge {

const char* to_string(ModuleTag tag) {
  switch (tag) {
    case ModuleTag::kGraphConstruction: return "graph_construction";
    case ModuleTag::kSearch: return "search";
    case ModuleTag::kRefinement: return "refinement";
  }
  throw ArgumentError("to_string: invalid ModuleTag");
}

ModuleTag module_tag_from_string(const std::string& name) {
  if (name == "graph_construction") return ModuleTag::kGraphConstruction;
  if (name == "search") return ModuleTag::kSearch;
  if (name == "refinement") return ModuleTag::kRefinement;
  throw ArgumentError("module_tag_from_string: unknown tag '" + name + "'");
}

namespace {

int64_t now_unix_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

nlohmann::ordered_json record_to_json(const CandidateRecord& rec) {
  return {{"id", rec.id},
          {"module_tag", to_string(rec.module_tag)},
          {"score", rec.score},
          {"code", rec.code},
          {"created_at", rec.created_at}};
}

CandidateRecord record_from_json(const nlohmann::json& node) {
  CandidateRecord rec;
  rec.id = node.at("id").get<int64_t>();
  rec.module_tag = module_tag_from_string(node.at("module_tag").get<std::string>());
  rec.score = node.at("score").get<double>();
  rec.code = node.at("code").get<std::string>();
  rec.created_at = node.at("created_at").get<int64_t>();
  return rec;
}

void append_record(const std::string& path, const CandidateRecord& rec) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("candidate store: cannot open " + path + " for append");
  out << record_to_json(rec).dump() << '\n';
  out.flush();
  if (!out) throw IoError("candidate store: append failed for " + path);
}

}  // namespace

CandidateDb::CandidateDb(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // fresh store; file appears on first append
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json node;
    try {
      node = nlohmann::json::parse(line);
      records_.push_back(record_from_json(node));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("candidate store: " + path_ + ":" + std::to_string(line_no) +
                        ": " + e.what());
    }
    next_id_ = std::max(next_id_, records_.back().id + 1);
  }
}

int64_t CandidateDb::register_candidate(const std::string& code, double score,
                                        ModuleTag tag) {
  return register_candidate(code, score, tag, now_unix_ms());
}

int64_t CandidateDb::register_candidate(const std::string& code, double score,
                                        ModuleTag tag, int64_t created_at) {
  if (!std::isfinite(score)) {
    throw ArgumentError("register_candidate: score must be finite");
  }
  CandidateRecord rec;
  rec.id = next_id_++;
  rec.code = code;
  rec.score = score;
  rec.module_tag = tag;
  rec.created_at = created_at;
  if (!path_.empty()) append_record(path_, rec);
  records_.push_back(std::move(rec));
  return records_.back().id;
}

double CandidateDb::mean_score() const {
  if (records_.empty()) throw StateError("mean_score: database is empty");
  double sum = 0.0;
  for (const auto& rec : records_) sum += rec.score;
  return sum / static_cast<double>(records_.size());
}

void SamplerConfig::validate() const {
  if (!(temperature > 0.0)) {
    throw ArgumentError("SamplerConfig: temperature must be positive");
  }
  if (exemplar_count == 0) {
    throw ArgumentError("SamplerConfig: exemplar_count must be positive");
  }
}

std::vector<double> softmax_sampling_probabilities(std::span<const double> scores,
                                                   double temperature) {
  if (scores.empty()) {
    throw ArgumentError("softmax_sampling_probabilities: empty score list");
  }
  if (!(temperature > 0.0)) {
    throw ArgumentError("softmax_sampling_probabilities: temperature must be positive");
  }
  double mu = 0.0;
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw ArgumentError("softmax_sampling_probabilities: scores must be finite");
    }
    mu += s;
  }
  mu /= static_cast<double>(scores.size());

  std::vector<double> logits(scores.size());
  double shift = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < scores.size(); ++i) {
    logits[i] = (scores[i] - mu) / temperature;
    shift = std::max(shift, logits[i]);
  }
  double total = 0.0;
  std::vector<double> probs(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    probs[i] = std::exp(logits[i] - shift);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

SampledExemplars sample_exemplars(const CandidateDb& db, const SamplerConfig& cfg,
                                  Rng& rng) {
  cfg.validate();
  if (db.empty()) throw StateError("sample_exemplars: database is empty");

  const auto& records = db.records();
  const double mu = db.mean_score();  // fixed for the whole call

  SampledExemplars out;
  std::vector<size_t> remaining(records.size());
  for (size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

  const size_t want = std::min(cfg.exemplar_count, records.size());
  out.truncated = cfg.exemplar_count > records.size();
  out.records.reserve(want);

  std::vector<double> weights;
  while (out.records.size() < want) {
    double shift = -std::numeric_limits<double>::infinity();
    for (size_t idx : remaining) {
      shift = std::max(shift, (records[idx].score - mu) / cfg.temperature);
    }
    weights.clear();
    double total = 0.0;
    for (size_t idx : remaining) {
      const double w = std::exp((records[idx].score - mu) / cfg.temperature - shift);
      weights.push_back(w);
      total += w;
    }
    const double r = rng.uniform01() * total;
    double cum = 0.0;
    size_t pick = remaining.size() - 1;  // guard against rounding overshoot
    for (size_t j = 0; j < remaining.size(); ++j) {
      cum += weights[j];
      if (r < cum) {
        pick = j;
        break;
      }
    }
    out.records.push_back(records[remaining[pick]]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

namespace {

// Linear-interpolated percentile of an ascending-sorted sample, p in [0,100].
double percentile_sorted(const std::vector<double>& sorted, double p) {
  const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(rank));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<double> smooth_rewards(std::span<const double> raw) {
  if (raw.empty()) throw ArgumentError("smooth_rewards: empty reward list");
  for (double v : raw) {
    if (!std::isfinite(v)) throw ArgumentError("smooth_rewards: rewards must be finite");
  }
  std::vector<double> sorted(raw.begin(), raw.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = percentile_sorted(sorted, 5.0);
  const double hi = percentile_sorted(sorted, 95.0);

  std::vector<double> out(raw.begin(), raw.end());
  double max_abs = 0.0;
  for (double& v : out) {
    v = std::clamp(v, lo, hi);
    max_abs = std::max(max_abs, std::abs(v));
  }
  if (max_abs == 0.0) return out;  // all zeros already
  for (double& v : out) v /= max_abs;
  return out;
}

NormalizedRewards normalize_group_rewards(std::span<const double> rewards,
                                          size_t group_size) {
  if (group_size < 2) {
    throw ArgumentError("normalize_group_rewards: group size must be >= 2");
  }
  if (rewards.size() != group_size) {
    throw ArgumentError("normalize_group_rewards: reward list length " +
                        std::to_string(rewards.size()) + " != group size " +
                        std::to_string(group_size));
  }
  for (double v : rewards) {
    if (!std::isfinite(v)) {
      throw ArgumentError("normalize_group_rewards: rewards must be finite");
    }
  }

  NormalizedRewards out;
  out.values.assign(rewards.size(), 0.0);
  // All-equal first: {c,c,c} can exhibit mean != c in floating point, which
  // would otherwise leak tiny nonzero outputs through the variance path.
  const bool all_equal =
      std::all_of(rewards.begin(), rewards.end(),
                  [&](double v) { return v == rewards.front(); });
  if (all_equal) {
    out.zero_variance = true;
    return out;
  }

  double mean = 0.0;
  for (double v : rewards) mean += v;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double v : rewards) var += (v - mean) * (v - mean);
  var /= static_cast<double>(rewards.size());
  if (var <= 0.0) {
    out.zero_variance = true;
    return out;
  }
  const double inv_std = 1.0 / std::sqrt(var);
  for (size_t i = 0; i < rewards.size(); ++i) {
    out.values[i] = (rewards[i] - mean) * inv_std;
  }
  return out;
}

namespace {

constexpr const char* kPromptHeaders[4] = {
    "Task Description", "Previous Implementations with Speed",
    "Generation Protocol", "Critical Requirements"};
constexpr const char* kResponseHeaders[3] = {"Performance Analysis", "Algorithm Design",
                                             "Code Implementation"};

std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", score);
  return buf;
}

std::string trimmed(std::string_view text) {
  size_t begin = 0;
  size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

bool is_fence_line(std::string_view line) {
  size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return line.size() >= i + 3 && line.compare(i, 3, "```") == 0;
}

// True when line is a heading for `title`: optional '#'s / "**" / numbering
// like "2." or "3)" before the title (case-insensitive), optional trailing
// colon or "**".
bool is_header_line(std::string_view line, std::string_view title) {
  size_t i = 0;
  auto skip_spaces = [&] {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  };
  skip_spaces();
  while (i < line.size() && line[i] == '#') ++i;
  skip_spaces();
  if (i + 1 < line.size() && line[i] == '*' && line[i + 1] == '*') i += 2;
  skip_spaces();
  size_t digits = i;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) {
    ++digits;
  }
  if (digits > i && digits < line.size() &&
      (line[digits] == '.' || line[digits] == ')' || line[digits] == ':')) {
    i = digits + 1;
    skip_spaces();
  }
  if (line.size() - i < title.size()) return false;
  for (size_t j = 0; j < title.size(); ++j) {
    if (std::tolower(static_cast<unsigned char>(line[i + j])) !=
        std::tolower(static_cast<unsigned char>(title[j]))) {
      return false;
    }
  }
  i += title.size();
  skip_spaces();
  if (i + 1 < line.size() && line[i] == '*' && line[i + 1] == '*') i += 2;
  while (i < line.size() && (line[i] == ':' || line[i] == ' ' || line[i] == '\t' ||
                             line[i] == '\r')) {
    ++i;
  }
  return i == line.size();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace

std::string assemble_prompt(const PromptBundle& bundle) {
  if (trimmed(bundle.task_description).empty()) {
    throw ArgumentError("assemble_prompt: task description is empty");
  }
  if (bundle.exemplars.empty()) {
    throw ArgumentError("assemble_prompt: exemplar list is empty");
  }
  for (const auto& [code, score] : bundle.exemplars) {
    if (trimmed(code).empty()) {
      throw ArgumentError("assemble_prompt: exemplar code is empty");
    }
    if (!std::isfinite(score)) {
      throw ArgumentError("assemble_prompt: exemplar score must be finite");
    }
  }
  if (trimmed(bundle.generation_protocol).empty()) {
    throw ArgumentError("assemble_prompt: generation protocol is empty");
  }
  if (trimmed(bundle.critical_requirements).empty()) {
    throw ArgumentError("assemble_prompt: critical requirements are empty");
  }

  std::ostringstream out;
  out << "## " << kPromptHeaders[0] << "\n\n" << trimmed(bundle.task_description)
      << "\n\n";
  out << "## " << kPromptHeaders[1] << "\n\n";
  for (size_t i = 0; i < bundle.exemplars.size(); ++i) {
    const auto& [code, score] = bundle.exemplars[i];
    out << "### Implementation " << (i + 1) << " (score: " << format_score(score)
        << ")\n\n```\n" << trimmed(code) << "\n```\n\n";
  }
  out << "## " << kPromptHeaders[2] << "\n\n" << trimmed(bundle.generation_protocol)
      << "\n\n";
  out << "## " << kPromptHeaders[3] << "\n\n" << trimmed(bundle.critical_requirements)
      << "\n";
  return out.str();
}

ResponseSections parse_response(const std::string& text) {
  const auto lines = split_lines(text);

  // Locate the three headers in protocol order, ignoring fenced regions.
  size_t header_line[3] = {0, 0, 0};
  size_t next = 0;
  bool in_fence = false;
  size_t cursor = 0;
  for (size_t li = 0; li < lines.size() && next < 3; ++li) {
    if (is_fence_line(lines[li])) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence) continue;
    if (li < cursor) continue;
    if (is_header_line(lines[li], kResponseHeaders[next])) {
      header_line[next] = li;
      cursor = li + 1;
      ++next;
    }
  }
  if (next < 3) {
    throw ParseError(std::string("parse_response: missing '") + kResponseHeaders[next] +
                     "' header" + (next > 0 ? std::string(" after '") +
                                                  kResponseHeaders[next - 1] + "'"
                                            : std::string()));
  }

  auto section_body = [&](size_t from_line, size_t to_line) {
    std::string body;
    for (size_t li = from_line; li < to_line; ++li) {
      body.append(lines[li]);
      body.push_back('\n');
    }
    return trimmed(body);
  };

  ResponseSections sections;
  sections.performance_analysis = section_body(header_line[0] + 1, header_line[1]);
  sections.algorithm_design = section_body(header_line[1] + 1, header_line[2]);
  if (sections.performance_analysis.empty()) {
    throw ParseError("parse_response: empty 'Performance Analysis' section");
  }
  if (sections.algorithm_design.empty()) {
    throw ParseError("parse_response: empty 'Algorithm Design' section");
  }

  // First fenced block after the third header.
  size_t fence_open = lines.size();
  for (size_t li = header_line[2] + 1; li < lines.size(); ++li) {
    if (is_fence_line(lines[li])) {
      fence_open = li;
      break;
    }
  }
  if (fence_open == lines.size()) {
    throw ParseError("parse_response: missing code fence in 'Code Implementation'");
  }
  size_t fence_close = lines.size();
  for (size_t li = fence_open + 1; li < lines.size(); ++li) {
    if (is_fence_line(lines[li])) {
      fence_close = li;
      break;
    }
  }
  if (fence_close == lines.size()) {
    throw ParseError("parse_response: unterminated code fence in 'Code Implementation'");
  }
  std::string code;
  for (size_t li = fence_open + 1; li < fence_close; ++li) {
    code.append(lines[li]);
    if (li + 1 < fence_close) code.push_back('\n');
  }
  if (trimmed(code).empty()) {
    throw ParseError("parse_response: empty code block in 'Code Implementation'");
  }
  sections.code_implementation = code;
  return sections;
}

std::string render_response(const ResponseSections& sections) {
  std::ostringstream out;
  out << "## " << kResponseHeaders[0] << "\n\n" << trimmed(sections.performance_analysis)
      << "\n\n";
  out << "## " << kResponseHeaders[1] << "\n\n" << trimmed(sections.algorithm_design)
      << "\n\n";
  out << "## " << kResponseHeaders[2] << "\n\n```\n" << sections.code_implementation
      << "\n```\n";
  return out.str();
}

}  // namespace annforge
