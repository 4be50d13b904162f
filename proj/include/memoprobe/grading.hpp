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

// Task-dependent scoring of model outputs against a reference. Scores are
// similarities in [0, 1]: 1 - normalized edit distance, so that a drop in
// score between perturbation levels is a positive number.

#ifndef MEMOPROBE_GRADING_HPP_
#define MEMOPROBE_GRADING_HPP_

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <sys/wait.h>

#include "memoprobe/datamodel.hpp"
#include "memoprobe/error.hpp"
#include "memoprobe/lexer.hpp"
#include "memoprobe/util.hpp"

namespace memoprobe {

enum class GraderKind { kTextSimilarity, kCodeTokenSimilarity, kExecution };

inline std::string_view ToString(GraderKind kind) {
  switch (kind) {
    case GraderKind::kTextSimilarity: return "text_similarity";
    case GraderKind::kCodeTokenSimilarity: return "code_token_similarity";
    case GraderKind::kExecution: return "execution";
  }
  return "";
}

inline std::optional<GraderKind> ParseGraderKind(std::string_view name) {
  for (auto k : {GraderKind::kTextSimilarity, GraderKind::kCodeTokenSimilarity,
                 GraderKind::kExecution}) {
    if (ToString(k) == name) return k;
  }
  return std::nullopt;
}

inline GraderKind DefaultGrader(TaskKind task) {
  switch (task) {
    case TaskKind::kCodeGeneration:
    case TaskKind::kTestGeneration:
    case TaskKind::kProgramRepair:
      return GraderKind::kCodeTokenSimilarity;
    case TaskKind::kCodeSummarization:
    case TaskKind::kVulnerabilityDetection:
      return GraderKind::kTextSimilarity;
  }
  return GraderKind::kTextSimilarity;
}

// Edit distance over any equality-comparable sequence, two-row DP.
template <typename Seq>
std::size_t EditDistance(const Seq& a, const Seq& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Counts code points, not bytes.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return EditDistance(DecodeUtf8(a), DecodeUtf8(b));
}

inline double NormalizedSimilarity(std::size_t distance, std::size_t len_a, std::size_t len_b) {
  const std::size_t longest = std::max(len_a, len_b);
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(distance) / static_cast<double>(longest);
}

inline double text_similarity(std::string_view candidate, std::string_view reference) {
  const auto a = DecodeUtf8(candidate);
  const auto b = DecodeUtf8(reference);
  return NormalizedSimilarity(EditDistance(a, b), a.size(), b.size());
}

inline std::vector<std::string> SignificantTokenTexts(std::string_view source,
                                                      std::string_view language) {
  std::vector<std::string> out;
  for (auto& t : tokenize_code(source, language)) {
    if (IsSignificant(t.kind)) out.push_back(std::move(t.text));
  }
  return out;
}

inline double code_token_similarity(std::string_view candidate, std::string_view reference,
                                    std::string_view language) {
  if (!HasLexer(language)) return text_similarity(candidate, reference);
  const auto a = SignificantTokenTexts(candidate, language);
  const auto b = SignificantTokenTexts(reference, language);
  return NormalizedSimilarity(EditDistance(a, b), a.size(), b.size());
}

inline double similarity(GraderKind grader, std::string_view candidate,
                         std::string_view reference, std::string_view language) {
  switch (grader) {
    case GraderKind::kTextSimilarity: return text_similarity(candidate, reference);
    case GraderKind::kCodeTokenSimilarity:
      return code_token_similarity(candidate, reference, language);
    case GraderKind::kExecution:
      throw Error(ErrorCode::kPrecondition, "execution grading needs a test runner");
  }
  return 0.0;
}

// Runs a configured shell command per test descriptor. Placeholders in the
// template: {candidate} (path of a file holding the output), {test_cmd},
// {expect}. Exit status 0 on every test scores 1, anything else 0.
class ExecutionGrader {
 public:
  ExecutionGrader(std::string command_template, int timeout_seconds,
                  std::filesystem::path scratch_dir = std::filesystem::temp_directory_path())
      : template_(std::move(command_template)),
        timeout_seconds_(timeout_seconds),
        scratch_dir_(std::move(scratch_dir)) {
    if (template_.find("{candidate}") == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "execution command template must contain {candidate}");
    }
    if (timeout_seconds_ < 1) throw Error(ErrorCode::kInvalidArgument, "timeout must be >= 1 s");
  }

  double Score(std::string_view candidate, const std::vector<TestDescriptor>& tests) const {
    namespace fs = std::filesystem;
    static std::atomic<std::uint64_t> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    const fs::path file = scratch_dir_ / ("memoprobe_candidate_" +
                                          std::to_string(HashBytes(candidate)) + "_" +
                                          std::to_string(stamp) + "_" +
                                          std::to_string(counter.fetch_add(1)));
    {
      std::ofstream out(file, std::ios::binary);
      if (!out) throw Error(ErrorCode::kIo, "cannot write candidate file " + file.string());
      out << candidate;
    }
    std::vector<TestDescriptor> run = tests;
    if (run.empty()) run.push_back({});
    bool all_passed = true;
    for (const auto& t : run) {
      std::string cmd = Expand(file.string(), t);
      cmd = "timeout " + std::to_string(timeout_seconds_) + " sh -c " + ShellQuote(cmd) +
            " >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        all_passed = false;
        break;
      }
    }
    std::error_code ec;
    fs::remove(file, ec);
    return all_passed ? 1.0 : 0.0;
  }

  static std::string ShellQuote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
      if (c == '\'') {
        out += "'\\''";
      } else {
        out.push_back(c);
      }
    }
    out += "'";
    return out;
  }

 private:
  std::string Expand(const std::string& candidate_path, const TestDescriptor& t) const {
    std::string out;
    std::size_t i = 0;
    while (i < template_.size()) {
      if (template_.compare(i, 11, "{candidate}") == 0) {
        out += ShellQuote(candidate_path);
        i += 11;
      } else if (template_.compare(i, 10, "{test_cmd}") == 0) {
        out += t.cmd;
        i += 10;
      } else if (template_.compare(i, 8, "{expect}") == 0) {
        out += ShellQuote(t.expect);
        i += 8;
      } else {
        out.push_back(template_[i++]);
      }
    }
    return out;
  }

  std::string template_;
  int timeout_seconds_;
  std::filesystem::path scratch_dir_;
};

struct GradingContext {
  GraderKind grader = GraderKind::kTextSimilarity;
  std::string language = "text";
  const ExecutionGrader* runner = nullptr;
  std::vector<TestDescriptor> tests;
};

inline double ScoreOutput(std::string_view output, std::string_view reference,
                          const GradingContext& ctx) {
  if (ctx.grader == GraderKind::kExecution) {
    if (ctx.runner == nullptr) {
      throw Error(ErrorCode::kPrecondition, "execution grader requested but no test runner configured");
    }
    return ctx.runner->Score(output, ctx.tests);
  }
  return similarity(ctx.grader, output, reference, ctx.language);
}

// Mean score of one level's outputs.
inline double perf(const std::vector<std::string>& outputs, std::string_view reference,
                   const GradingContext& ctx) {
  if (outputs.empty()) throw Error(ErrorCode::kInvalidArgument, "perf needs at least one output");
  double total = 0;
  for (const auto& o : outputs) total += ScoreOutput(o, reference, ctx);
  return total / static_cast<double>(outputs.size());
}

inline double perf(const std::vector<std::string>& outputs, std::string_view reference,
                   GraderKind grader, std::string_view language) {
  GradingContext ctx;
  ctx.grader = grader;
  ctx.language = std::string(language);
  return perf(outputs, reference, ctx);
}

}  // namespace memoprobe

#endif  // MEMOPROBE_GRADING_HPP_
