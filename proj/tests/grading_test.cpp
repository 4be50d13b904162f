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

#include "memoprobe/grading.hpp"

#include <gtest/gtest.h>

#include <functional>

#include "memoprobe/mock_models.hpp"
#include "memoprobe/perturbation.hpp"

namespace memoprobe {
namespace {

// Textbook recursion over (i, j) with a full memo table.
std::size_t OracleLevenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  std::function<long(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> long {
    if (i == 0) return static_cast<long>(j);
    if (j == 0) return static_cast<long>(i);
    long& m = memo[i][j];
    if (m >= 0) return m;
    m = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1])});
    return m;
  };
  return static_cast<std::size_t>(d(a.size(), b.size()));
}

std::string RandomText(DeterministicRng& rng, std::size_t max_len) {
  static const char32_t alphabet[] = {U'a', U'b', U'c', U' ', U'é', U'中'};
  std::u32string s;
  for (auto n = rng.Below(max_len + 1); n > 0; --n) s.push_back(alphabet[rng.Below(6)]);
  return EncodeUtf8(s);
}

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein("abc", "abc"), 0u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("\xC3\xA9", "e"), 1u);  // one code point, two bytes
}

TEST(Levenshtein, MatchesOracleSymmetricAndTriangle) {
  DeterministicRng rng(31);
  for (int trial = 0; trial < 400; ++trial) {
    const auto a = RandomText(rng, 12);
    const auto b = RandomText(rng, 12);
    const auto c = RandomText(rng, 12);
    const std::size_t ab = levenshtein(a, b);
    EXPECT_EQ(ab, OracleLevenshtein(DecodeUtf8(a), DecodeUtf8(b)));
    EXPECT_EQ(ab, levenshtein(b, a));
    EXPECT_LE(levenshtein(a, c), ab + levenshtein(b, c));
  }
}

TEST(TextSimilarity, Examples) {
  EXPECT_DOUBLE_EQ(text_similarity("same", "same"), 1.0);
  EXPECT_DOUBLE_EQ(text_similarity("", "abc"), 0.0);
  EXPECT_DOUBLE_EQ(text_similarity("", ""), 1.0);
  EXPECT_NEAR(text_similarity("kitten", "sitting"), 1.0 - 3.0 / 7.0, 1e-15);
}

TEST(TextSimilarity, BoundedOnFuzz) {
  DeterministicRng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const double s = text_similarity(RandomText(rng, 20), RandomText(rng, 20));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(CodeTokenSimilarity, IdenticalIsOne) {
  const std::string ref = "int f(int x) { return x + 1; }";
  EXPECT_DOUBLE_EQ(code_token_similarity(ref, ref, "c"), 1.0);
}

TEST(CodeTokenSimilarity, WhitespaceAndCommentsIgnored) {
  const std::string ref = "def f(x):\n    return x + 1\n";
  const std::string reformatted = "def  f( x ) :\n        return x+1   # same\n";
  EXPECT_DOUBLE_EQ(code_token_similarity(reformatted, ref, "python"), 1.0);
}

TEST(CodeTokenSimilarity, RenamedIdentifiersCostOnePerToken) {
  const std::string ref =
      "def area(width, height):\n    scale = 2\n    return width * height * scale\n";
  const std::string renamed = rename_identifiers(ref, "python", 5, 5, 17);
  const auto a = tokenize_code(ref, "python");
  const auto b = tokenize_code(renamed, "python");
  ASSERT_EQ(a.size(), b.size());
  std::size_t significant = 0, changed = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!IsSignificant(a[i].kind)) continue;
    ++significant;
    changed += a[i].text != b[i].text;
  }
  ASSERT_GT(changed, 0u);
  EXPECT_NEAR(code_token_similarity(renamed, ref, "python"),
              1.0 - static_cast<double>(changed) / static_cast<double>(significant), 1e-15);
}

TEST(CodeTokenSimilarity, FallsBackToTextWithoutLexer) {
  EXPECT_DOUBLE_EQ(code_token_similarity("kitten", "sitting", "text"),
                   text_similarity("kitten", "sitting"));
}

TEST(Perf, AllMatchingIsOne) {
  EXPECT_DOUBLE_EQ(perf({"x = 1", "x = 1", "x = 1"}, "x = 1", GraderKind::kCodeTokenSimilarity, "python"), 1.0);
}

TEST(Perf, MeanOfScores) {
  // scores 1, 0.5 and 0 against "ab"
  EXPECT_DOUBLE_EQ(perf({"ab", "aZ", "cd"}, "ab", GraderKind::kTextSimilarity, "text"), 0.5);
}

TEST(Perf, NoiseOutputsScoreNearZero) {
  const std::string reference = "def truncate_number(number):\n    return number % 1.0\n";
  std::vector<MockEntry> entries = {{"k", reference, GraderKind::kTextSimilarity, "python"}};
  detail::NoiseAlphabet alphabet(entries);
  std::vector<std::string> outputs;
  for (std::uint64_t seed = 0; seed < 3; ++seed) outputs.push_back(NoiseText(alphabet, seed));
  EXPECT_LT(perf(outputs, reference, GraderKind::kTextSimilarity, "python"), 0.1);
  EXPECT_LT(perf(outputs, reference, GraderKind::kCodeTokenSimilarity, "python"), 0.1);
}

TEST(Perf, MonotoneUnderBetterOutput) {
  DeterministicRng rng(8);
  const std::string reference = "abcabcabc";
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> outputs = {RandomText(rng, 10), RandomText(rng, 10), RandomText(rng, 10)};
    const double before = perf(outputs, reference, GraderKind::kTextSimilarity, "text");
    const std::size_t i = rng.Below(3);
    const std::string better = RandomText(rng, 10);
    if (text_similarity(better, reference) < text_similarity(outputs[i], reference)) continue;
    outputs[i] = better;
    EXPECT_GE(perf(outputs, reference, GraderKind::kTextSimilarity, "text"), before);
  }
}

TEST(Perf, EmptyOutputsRejected) {
  EXPECT_THROW(perf({}, "r", GraderKind::kTextSimilarity, "text"), Error);
}

TEST(Perf, ExecutionWithoutRunnerFails) {
  try {
    perf({"x"}, "r", GraderKind::kExecution, "python");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
  }
}

TEST(DefaultGrader, TaskMap) {
  EXPECT_EQ(DefaultGrader(TaskKind::kCodeGeneration), GraderKind::kCodeTokenSimilarity);
  EXPECT_EQ(DefaultGrader(TaskKind::kTestGeneration), GraderKind::kCodeTokenSimilarity);
  EXPECT_EQ(DefaultGrader(TaskKind::kProgramRepair), GraderKind::kCodeTokenSimilarity);
  EXPECT_EQ(DefaultGrader(TaskKind::kCodeSummarization), GraderKind::kTextSimilarity);
  EXPECT_EQ(DefaultGrader(TaskKind::kVulnerabilityDetection), GraderKind::kTextSimilarity);
}

TEST(ExecutionGrader, ExitStatusDecidesScore) {
  ExecutionGrader runner("grep -q {expect} {candidate}", 5);
  GradingContext ctx;
  ctx.grader = GraderKind::kExecution;
  ctx.runner = &runner;
  ctx.tests = {{"", "return"}};
  EXPECT_DOUBLE_EQ(ScoreOutput("return 1", "", ctx), 1.0);
  EXPECT_DOUBLE_EQ(ScoreOutput("pass", "", ctx), 0.0);
  ctx.tests = {{"", "return"}, {"", "missing"}};
  EXPECT_DOUBLE_EQ(ScoreOutput("return 1", "", ctx), 0.0);
}

TEST(ExecutionGrader, TestCommandPlaceholder) {
  ExecutionGrader runner("{test_cmd} {candidate}", 5);
  EXPECT_DOUBLE_EQ(runner.Score("print(1)", {{"test -s", ""}}), 1.0);
  EXPECT_DOUBLE_EQ(runner.Score("", {{"test -s", ""}}), 0.0);
}

TEST(ExecutionGrader, TimeoutScoresZero) {
  ExecutionGrader runner("sleep 5; true {candidate}", 1);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_DOUBLE_EQ(runner.Score("x", {}), 0.0);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(4));
}

TEST(ExecutionGrader, TemplateNeedsCandidate) {
  EXPECT_THROW(ExecutionGrader("true", 1), Error);
  EXPECT_THROW(ExecutionGrader("true {candidate}", 0), Error);
}

}  // namespace
}  // namespace memoprobe
