// Copyright 2026 The Memoprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared domain types and the line-delimited benchmark file format.

#ifndef MEMOPROBE_DATAMODEL_HPP_
#define MEMOPROBE_DATAMODEL_HPP_

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "memoprobe/error.hpp"

namespace memoprobe {

using Json = nlohmann::ordered_json;

enum class TaskKind {
  kCodeGeneration,
  kTestGeneration,
  kProgramRepair,
  kVulnerabilityDetection,
  kCodeSummarization,
};

enum class InputKind { kNaturalLanguage, kCode };

inline constexpr TaskKind kAllTaskKinds[] = {
    TaskKind::kCodeGeneration, TaskKind::kTestGeneration,
    TaskKind::kProgramRepair, TaskKind::kVulnerabilityDetection,
    TaskKind::kCodeSummarization};

inline std::string_view ToString(TaskKind task) {
  switch (task) {
    case TaskKind::kCodeGeneration: return "code_generation";
    case TaskKind::kTestGeneration: return "test_generation";
    case TaskKind::kProgramRepair: return "program_repair";
    case TaskKind::kVulnerabilityDetection: return "vulnerability_detection";
    case TaskKind::kCodeSummarization: return "code_summarization";
  }
  return "";
}

inline std::optional<TaskKind> ParseTaskKind(std::string_view name) {
  for (TaskKind t : kAllTaskKinds) {
    if (ToString(t) == name) return t;
  }
  return std::nullopt;
}

inline std::string_view ToString(InputKind kind) {
  return kind == InputKind::kCode ? "code" : "natural_language";
}

inline std::optional<InputKind> ParseInputKind(std::string_view name) {
  if (name == "code") return InputKind::kCode;
  if (name == "natural_language") return InputKind::kNaturalLanguage;
  return std::nullopt;
}

inline const std::set<std::string, std::less<>>& SupportedLanguageTags() {
  static const std::set<std::string, std::less<>> tags = {
      "python", "java", "c", "cpp", "javascript", "go", "text"};
  return tags;
}

inline bool IsSupportedLanguageTag(std::string_view tag) {
  return SupportedLanguageTags().count(tag) > 0;
}

struct TestDescriptor {
  std::string cmd;
  std::string expect;

  bool operator==(const TestDescriptor&) const = default;
};

struct BenchmarkSample {
  std::string id;
  std::string benchmark;
  TaskKind task = TaskKind::kCodeGeneration;
  InputKind input_kind = InputKind::kNaturalLanguage;
  std::string language = "text";
  std::string input;
  std::string reference;
  std::vector<TestDescriptor> tests;
  // Keys of the source record this schema does not know, kept verbatim.
  Json metadata = Json::object();

  bool operator==(const BenchmarkSample&) const = default;
};

struct RunConfig {
  int pr_max = 5;
  int ans_max = 3;
  int repeats = 3;
  std::uint64_t seed = 0;
  int max_concurrency = 4;

  void Validate() const {
    if (pr_max < 1) throw Error(ErrorCode::kInvalidArgument, "pr_max must be >= 1");
    if (ans_max < 1) throw Error(ErrorCode::kInvalidArgument, "ans_max must be >= 1");
    if (repeats < 1) throw Error(ErrorCode::kInvalidArgument, "repeats must be >= 1");
    if (max_concurrency < 1) {
      throw Error(ErrorCode::kInvalidArgument, "max_concurrency must be >= 1");
    }
  }
};

// `nucleus` is what the request sends as top_p.
struct SamplingConfig {
  double temperature = 0.3;
  double nucleus = 0.5;
  int max_tokens = 512;

  void Validate() const {
    if (!(temperature >= 0)) {
      throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
    }
    if (!(nucleus > 0 && nucleus <= 1)) {
      throw Error(ErrorCode::kInvalidArgument, "nucleus must be in (0, 1]");
    }
    if (max_tokens < 1) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
  }
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

inline ValidationResult validate_sample(const BenchmarkSample& sample) {
  ValidationResult result;
  if (sample.id.empty()) result.violations.push_back("id empty");
  if (sample.input.empty()) result.violations.push_back("input empty");
  if (sample.reference.empty()) result.violations.push_back("reference empty");
  if (!IsSupportedLanguageTag(sample.language)) {
    result.violations.push_back("unsupported language \"" + sample.language + "\"");
  }
  if (sample.input_kind == InputKind::kCode && sample.language == "text") {
    result.violations.push_back("input_kind code requires a source language, got \"text\"");
  }
  return result;
}

inline Json SampleToJson(const BenchmarkSample& sample) {
  Json j;
  j["id"] = sample.id;
  j["benchmark"] = sample.benchmark;
  j["task"] = ToString(sample.task);
  j["input_kind"] = ToString(sample.input_kind);
  j["language"] = sample.language;
  j["input"] = sample.input;
  j["reference"] = sample.reference;
  if (!sample.tests.empty()) {
    Json tests = Json::array();
    for (const auto& t : sample.tests) tests.push_back({{"cmd", t.cmd}, {"expect", t.expect}});
    j["tests"] = std::move(tests);
  }
  for (auto it = sample.metadata.begin(); it != sample.metadata.end(); ++it) {
    j[it.key()] = it.value();
  }
  return j;
}

inline std::string serialize_samples(const std::vector<BenchmarkSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += SampleToJson(s).dump();
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::string RequireString(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::kValidation, std::string("missing key `") + key + "`");
  if (!it->is_string()) {
    throw Error(ErrorCode::kValidation, std::string("key `") + key + "` must be a string");
  }
  return it->get<std::string>();
}

}  // namespace detail

// Parses one record. Throws kParse / kValidation without location info; the
// caller adds the line number.
inline BenchmarkSample ParseSampleJson(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParse, "record is not a JSON object");
  BenchmarkSample s;
  s.id = detail::RequireString(j, "id");
  s.benchmark = detail::RequireString(j, "benchmark");
  const std::string task = detail::RequireString(j, "task");
  auto parsed_task = ParseTaskKind(task);
  if (!parsed_task) throw Error(ErrorCode::kValidation, "unknown task kind \"" + task + "\"");
  s.task = *parsed_task;
  const std::string input_kind = detail::RequireString(j, "input_kind");
  auto parsed_kind = ParseInputKind(input_kind);
  if (!parsed_kind) {
    throw Error(ErrorCode::kValidation, "unknown input_kind \"" + input_kind + "\"");
  }
  s.input_kind = *parsed_kind;
  s.language = detail::RequireString(j, "language");
  s.input = detail::RequireString(j, "input");
  s.reference = detail::RequireString(j, "reference");
  if (auto it = j.find("tests"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::kValidation, "`tests` must be a list");
    for (const auto& t : *it) {
      if (!t.is_object()) throw Error(ErrorCode::kValidation, "test descriptor must be an object");
      s.tests.push_back({detail::RequireString(t, "cmd"), detail::RequireString(t, "expect")});
    }
  }
  static const std::set<std::string, std::less<>> known = {
      "id", "benchmark", "task", "input_kind", "language", "input", "reference", "tests"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) s.metadata[it.key()] = it.value();
  }
  auto validation = validate_sample(s);
  if (!validation.ok()) {
    std::string msg = "invalid sample \"" + s.id + "\": ";
    for (std::size_t i = 0; i < validation.violations.size(); ++i) {
      if (i) msg += "; ";
      msg += validation.violations[i];
    }
    throw Error(ErrorCode::kValidation, msg);
  }
  return s;
}

inline std::vector<BenchmarkSample> parse_benchmark(std::istream& in,
                                                    const std::string& origin = "<stream>") {
  std::vector<BenchmarkSample> samples;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, where + "malformed JSON: " + e.what());
    }
    BenchmarkSample sample;
    try {
      sample = ParseSampleJson(j);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
    if (!seen.insert(sample.id).second) {
      throw Error(ErrorCode::kValidation, where + "duplicate id \"" + sample.id + "\"");
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

inline std::vector<BenchmarkSample> load_benchmark(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open benchmark file " + path);
  return parse_benchmark(in, path);
}

}  // namespace memoprobe

#endif  // MEMOPROBE_DATAMODEL_HPP_
