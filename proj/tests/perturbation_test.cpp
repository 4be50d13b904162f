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

#include "memoprobe/perturbation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "test_support.hpp"

namespace memoprobe {
namespace {

namespace fs = std::filesystem;
using testing::FixturePath;
using testing::ReadFile;

struct CorpusFile {
  std::string language;
  std::string source;
};

std::vector<CorpusFile> LexerCorpus() {
  static const std::map<std::string, std::string> by_ext = {
      {".py", "python"}, {".java", "java"}, {".c", "c"},
      {".cpp", "cpp"},   {".js", "javascript"}, {".go", "go"}};
  std::vector<CorpusFile> out;
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(FixturePath("lexer"))) {
    if (e.is_regular_file()) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) out.push_back({by_ext.at(p.extension().string()), ReadFile(p)});
  return out;
}

std::size_t DiffPositions(const std::string& a, const std::string& b) {
  const auto x = DecodeUtf8(a);
  const auto y = DecodeUtf8(b);
  EXPECT_EQ(x.size(), y.size());
  std::size_t n = 0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) n += x[i] != y[i];
  return n;
}

// Token-by-token comparison: every non-identifier token is byte-identical
// and identifier spellings map consistently. Returns the observed mapping.
std::map<std::string, std::string> CompareRenamed(const std::string& original,
                                                  const std::string& renamed,
                                                  const std::string& language) {
  const auto a = tokenize_code(original, language);
  const auto b = tokenize_code(renamed, language);
  std::map<std::string, std::string> mapping;
  EXPECT_EQ(a.size(), b.size());
  if (a.size() != b.size()) return mapping;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].kind, b[i].kind) << i;
    if (a[i].kind != TokenKind::kIdentifier) {
      EXPECT_EQ(a[i].text, b[i].text) << i;
      continue;
    }
    auto [it, fresh] = mapping.emplace(a[i].text, b[i].text);
    EXPECT_EQ(it->second, b[i].text) << "inconsistent renaming of " << a[i].text;
  }
  return mapping;
}

std::size_t CeilDiv(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// ---------------------------------------------------------------------------

TEST(Perturb, LadderInvariantsForEveryKind) {
  const std::string nl = "Write a function that returns the sum of two integers a and b.";
  const std::string code = "def add(a, b):\n    return a + b\n";
  PerturbOptions fallback;
  fallback.fallback_word_noise = true;
  const std::vector<std::pair<PerturbationKind, std::string>> cases = {
      {PerturbationKind::kIdentifierRename, code},
      {PerturbationKind::kCharNoise, nl},
      {PerturbationKind::kWordNoise, nl},
      {PerturbationKind::kParaphrase, nl}};
  for (const auto& [kind, input] : cases) {
    for (int pr_max : {1, 3, 5}) {
      const auto a = perturb(input, kind, pr_max, 11, "python", fallback);
      const auto b = perturb(input, kind, pr_max, 11, "python", fallback);
      ASSERT_EQ(a.levels.size(), static_cast<std::size_t>(pr_max) + 1);
      EXPECT_EQ(a.levels[0], input);
      EXPECT_EQ(a, b);
    }
  }
}

TEST(Perturb, ParaphraseWithoutProviderFails) {
  try {
    perturb("some prompt", PerturbationKind::kParaphrase, 5, 1, "text");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPrecondition);
  }
}

TEST(Perturb, FallbackRecordsProvenance) {
  PerturbOptions options;
  options.fallback_word_noise = true;
  const auto ladder = perturb("one two three four five six seven eight nine ten",
                              PerturbationKind::kParaphrase, 5, 3, "text", options);
  EXPECT_EQ(ladder.kind, PerturbationKind::kWordNoise);
  EXPECT_EQ(ladder.provenance.at("fallback_from"), "paraphrase");
  EXPECT_EQ(ladder.levels[5], word_noise(ladder.levels[0], 5, 5, 3));
}

TEST(Perturb, RenameNeedsLexer) {
  try {
    perturb("x = 1", PerturbationKind::kIdentifierRename, 5, 1, "text");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

TEST(Perturb, SampleKindMustMatchInputKind) {
  BenchmarkSample s;
  s.id = "nl";
  s.input = "describe";
  s.reference = "r";
  EXPECT_THROW(perturb_sample(s, PerturbationKind::kIdentifierRename, 5, 0), Error);
  s.input_kind = InputKind::kCode;
  s.language = "python";
  EXPECT_THROW(perturb_sample(s, PerturbationKind::kCharNoise, 5, 0), Error);
  EXPECT_EQ(perturb_sample(s, PerturbationKind::kIdentifierRename, 5, 0).sample_id, "nl");
}

// ---------------------------------------------------------------------------

TEST(RenameIdentifiers, AddExampleRenamesEverythingAtTopLevel) {
  const std::string src = "def add(a, b):\n    return a + b";
  const auto ladder = perturb(src, PerturbationKind::kIdentifierRename, 5, 7, "python");
  ASSERT_EQ(ladder.levels.size(), 6u);
  const auto mapping = CompareRenamed(src, ladder.levels[5], "python");
  ASSERT_EQ(mapping.size(), 3u);
  for (const auto& name : {"add", "a", "b"}) {
    ASSERT_TRUE(mapping.count(name));
    EXPECT_NE(mapping.at(name), name);
  }
  EXPECT_NE(ladder.levels[5].find("def "), std::string::npos);
  EXPECT_NE(ladder.levels[5].find("return "), std::string::npos);
}

TEST(RenameIdentifiers, LevelZeroIsIdentity) {
  const std::string src = "int f(int x) { return x * 2; }";
  EXPECT_EQ(rename_identifiers(src, "c", 0, 5, 99), src);
}

std::size_t RenamedCount(const std::string& src, const std::string& out,
                         const std::string& language) {
  std::size_t n = 0;
  for (const auto& [from, to] : CompareRenamed(src, out, language)) n += from != to;
  return n;
}

TEST(RenameIdentifiers, FourSpellingsLevelTwoRenamesTwo) {
  const std::string src = "def f(x, y):\n    z = x + y\n    return z\n";  // D = 4
  EXPECT_EQ(RenamedCount(src, rename_identifiers(src, "python", 2, 5, 1), "python"), 2u);
}

TEST(RenameIdentifiers, ThreeSpellingsTopLevelRenamesAll) {
  const std::string src = "function g(p, q) { return p - q; }";
  const auto out = rename_identifiers(src, "javascript", 5, 5, 3);
  EXPECT_EQ(RenamedCount(src, out, "javascript"), 3u);
  EXPECT_EQ(tokenize_code(src, "javascript").size(), tokenize_code(out, "javascript").size());
}

TEST(RenameIdentifiers, SkipsBuiltinsStringWordsAndMembers) {
  const std::string src =
      "def show(items):\n    label = 'items'\n    print(len(items), label.upper())\n";
  const auto out = rename_identifiers(src, "python", 5, 5, 5);
  const auto mapping = CompareRenamed(src, out, "python");
  EXPECT_EQ(mapping.at("print"), "print");
  EXPECT_EQ(mapping.at("len"), "len");
  EXPECT_EQ(mapping.at("items"), "items");  // occurs inside a string literal
  EXPECT_EQ(mapping.at("upper"), "upper");  // member access
  EXPECT_NE(mapping.at("show"), "show");
  EXPECT_NE(mapping.at("label"), "label");
}

TEST(RenameIdentifiers, CorpusProperties) {
  for (const auto& file : LexerCorpus()) {
    SCOPED_TRACE(file.language);
    const auto tokens = tokenize_code(file.source, file.language);
    std::set<std::string> existing;
    for (const auto& t : tokens) {
      if (t.kind == TokenKind::kIdentifier || t.kind == TokenKind::kKeyword) existing.insert(t.text);
    }
    const auto& rules = RulesFor(file.language);
    const auto ladder =
        perturb(file.source, PerturbationKind::kIdentifierRename, 5, 42, file.language);
    std::set<std::string> previous;
    std::size_t d = 0;
    {
      const auto top = CompareRenamed(file.source, ladder.levels[5], file.language);
      for (const auto& [from, to] : top) d += from != to;
    }
    ASSERT_GT(d, 3u);
    for (int k = 0; k <= 5; ++k) {
      const auto mapping = CompareRenamed(file.source, ladder.levels[k], file.language);
      std::set<std::string> renamed;
      std::set<std::string> targets;
      for (const auto& [from, to] : mapping) {
        if (from == to) continue;
        renamed.insert(from);
        EXPECT_EQ(to.size(), 8u);
        EXPECT_TRUE(std::all_of(to.begin(), to.end(), [](char c) { return c >= 'a' && c <= 'z'; }));
        EXPECT_FALSE(existing.count(to)) << to;
        EXPECT_FALSE(rules.keywords.count(to)) << to;
        EXPECT_FALSE(rules.builtins.count(to)) << to;
        EXPECT_TRUE(targets.insert(to).second) << "two spellings renamed to " << to;
      }
      EXPECT_EQ(renamed.size(), CeilDiv(static_cast<std::size_t>(k) * d, 5)) << "level " << k;
      EXPECT_TRUE(std::includes(renamed.begin(), renamed.end(), previous.begin(), previous.end()));
      previous = renamed;

      // Inverse map restores the source byte for byte.
      std::map<std::string, std::string> inverse;
      for (const auto& [from, to] : mapping) inverse[to] = from;
      EXPECT_EQ(ApplyRenaming(tokenize_code(ladder.levels[k], file.language), inverse), file.source);
    }
  }
}

TEST(RenameIdentifiers, SeedChangesSelectionAndNames) {
  const std::string src = "int main(void) { int alpha = 1, beta = 2, gamma = 3; return alpha; }";
  EXPECT_NE(rename_identifiers(src, "c", 5, 5, 1), rename_identifiers(src, "c", 5, 5, 2));
  EXPECT_EQ(rename_identifiers(src, "c", 3, 5, 1), rename_identifiers(src, "c", 3, 5, 1));
}

// ---------------------------------------------------------------------------

TEST(CharNoise, RateZeroIsIdentity) { EXPECT_EQ(char_noise("hello", 0, 1), "hello"); }

TEST(CharNoise, RateOneReplacesEverything) {
  const auto out = char_noise("ab", 1.0, 9);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NE(out[0], 'a');
  EXPECT_NE(out[1], 'b');
}

TEST(CharNoise, TwoPercentOfHundred) {
  const std::string text(100, 'q');
  EXPECT_EQ(DiffPositions(text, char_noise(text, 0.02, 5)), 2u);
}

TEST(CharNoise, FuzzedCountsMatchCeiling) {
  DeterministicRng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    std::u32string cps;
    const auto len = 1 + rng.Below(400);
    for (std::uint64_t i = 0; i < len; ++i) {
      const auto r = rng.Below(10);
      cps.push_back(r == 0 ? static_cast<char32_t>(0xE9 + rng.Below(20))
                           : static_cast<char32_t>(0x20 + rng.Below(95)));
    }
    const std::string text = EncodeUtf8(cps);
    const auto ladder = perturb(text, PerturbationKind::kCharNoise, 5, rng.Next(), "text");
    for (std::size_t k = 0; k <= 5; ++k) {
      // ceil(0.02 * k * len) in exact integer arithmetic
      const std::size_t expected = std::min<std::size_t>(len, CeilDiv(2 * k * len, 100));
      EXPECT_EQ(DiffPositions(text, ladder.levels[k]), expected) << "len " << len << " k " << k;
      for (char32_t c : DecodeUtf8(ladder.levels[k])) {
        EXPECT_TRUE(c >= 0x20 && (c < 0x7F || c >= 0xE9));
      }
    }
    // Nested positions: whatever changed at level k is still changed at k + 1.
    const auto orig = DecodeUtf8(text);
    for (std::size_t k = 1; k < 5; ++k) {
      const auto lo = DecodeUtf8(ladder.levels[k]);
      const auto hi = DecodeUtf8(ladder.levels[k + 1]);
      for (std::size_t i = 0; i < orig.size(); ++i) {
        if (lo[i] != orig[i]) {
          EXPECT_EQ(hi[i], lo[i]);
        }
      }
    }
  }
}

TEST(CharNoise, RejectsBadRate) {
  EXPECT_THROW(char_noise("x", -0.1, 0), Error);
  EXPECT_THROW(char_noise("x", 1.5, 0), Error);
}

// ---------------------------------------------------------------------------

std::vector<std::string> Words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

TEST(WordNoise, LevelZeroIsIdentity) {
  EXPECT_EQ(word_noise("alpha beta gamma", 0, 5, 1), "alpha beta gamma");
}

TEST(WordNoise, SingleWordUnchanged) {
  for (int k = 0; k <= 5; ++k) EXPECT_EQ(word_noise("  solo\n", k, 5, 4), "  solo\n");
}

TEST(WordNoise, TwentyWordsTopLevelTouchesThree) {
  std::string text;
  for (int i = 0; i < 20; ++i) text += (i ? " w" : "w") + std::to_string(i);
  EXPECT_EQ(plan_word_noise(text, 5, 5, 8).size(), 3u);
}

TEST(WordNoise, FuzzedEditCountsAndWordMultiset) {
  DeterministicRng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = 1 + rng.Below(60);
    std::string text;
    for (std::size_t i = 0; i < w; ++i) {
      if (i) text += rng.Coin() ? " " : "\n\t";
      text += "t" + std::to_string(rng.Below(30));
    }
    const int pr_max = 1 + static_cast<int>(rng.Below(6));
    for (int k = 0; k <= pr_max; ++k) {
      const std::uint64_t seed = rng.Next();
      const auto edits = plan_word_noise(text, k, pr_max, seed);
      const std::size_t expected =
          std::min(w - 1, CeilDiv(15 * static_cast<std::size_t>(k) * w,
                                  100 * static_cast<std::size_t>(pr_max)));
      EXPECT_EQ(edits.size(), expected);
      std::size_t drops = 0;
      std::multiset<std::string> remaining;
      const auto before = Words(text);
      std::vector<bool> dropped(before.size(), false);
      for (const auto& e : edits) {
        if (e.op == WordEdit::Op::kDrop) {
          ++drops;
          dropped[e.word] = true;
        }
      }
      for (std::size_t i = 0; i < before.size(); ++i) {
        if (!dropped[i]) remaining.insert(before[i]);
      }
      const auto after = Words(word_noise(text, k, pr_max, seed));
      EXPECT_EQ(after.size(), w - drops);
      EXPECT_EQ(std::multiset<std::string>(after.begin(), after.end()), remaining);
    }
  }
}

// ---------------------------------------------------------------------------

TEST(BowCosineDistance, Examples) {
  EXPECT_DOUBLE_EQ(bow_cosine_distance("a b", "a b"), 0.0);
  EXPECT_DOUBLE_EQ(bow_cosine_distance("a b", "c d"), 1.0);
  EXPECT_NEAR(bow_cosine_distance("a b", "a c"), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(bow_cosine_distance("", ""), 0.0);
  EXPECT_DOUBLE_EQ(bow_cosine_distance("Hello, WORLD", "hello world!"), 0.0);
}

TEST(BowCosineDistance, SymmetricAndBounded) {
  DeterministicRng rng(12);
  const char* vocab[] = {"sort", "list", "the", "a", "function", "return", "value", "x"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string a, b;
    for (auto n = rng.Below(8); n > 0; --n) a += std::string(vocab[rng.Below(8)]) + " ";
    for (auto n = rng.Below(8); n > 0; --n) b += std::string(vocab[rng.Below(8)]) + " ";
    const double d = bow_cosine_distance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_DOUBLE_EQ(d, bow_cosine_distance(b, a));
  }
}

TEST(OrderParaphrases, OriginalRanksFirst) {
  const auto out = order_paraphrases("sort the list", {"entirely different words", "sort the list"}, 2);
  EXPECT_EQ(out.texts[0], "sort the list");
  EXPECT_DOUBLE_EQ(out.distances[0], 0.0);
}

TEST(OrderParaphrases, TenCandidatesFiveOutputsNonDecreasing) {
  const std::string original = "write a function that sorts a list of integers";
  std::vector<std::string> candidates = {
      "write a function that sorts a list of numbers", "sort integers", "a list",
      "write code", "function sorting integers list", "make a function that orders integers",
      "completely unrelated sentence", "write a function that sorts a list of integers quickly",
      "integers of list a sorts that function a write", "list"};
  const auto out = order_paraphrases(original, candidates, 5);
  ASSERT_EQ(out.texts.size(), 5u);
  EXPECT_EQ(out.padded, 0u);
  std::vector<double> all;
  for (const auto& c : candidates) all.push_back(bow_cosine_distance(original, c));
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(out.distances[i], all[i]);
    EXPECT_DOUBLE_EQ(out.distances[i], bow_cosine_distance(original, out.texts[i]));
    if (i) {
      EXPECT_LE(out.distances[i - 1], out.distances[i]);
    }
  }
}

TEST(OrderParaphrases, TiesKeepInputOrder) {
  const auto out = order_paraphrases("a b", {"a c", "b d", "a e"}, 3);
  EXPECT_EQ(out.texts, (std::vector<std::string>{"a c", "b d", "a e"}));
}

TEST(OrderParaphrases, PadsWithMostDistant) {
  const auto out = order_paraphrases("a b", {"x y", "a b"}, 4);
  EXPECT_EQ(out.texts, (std::vector<std::string>{"a b", "x y", "x y", "x y"}));
  EXPECT_EQ(out.padded, 2u);
}

TEST(OrderParaphrases, EmptyCandidatesFail) {
  EXPECT_THROW(order_paraphrases("a", {}, 5), Error);
}

class ScriptedProvider : public ParaphraseProvider {
 public:
  std::vector<std::string> Paraphrase(const std::string& text, int n) override {
    requests.emplace_back(text, n);
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) {
      std::string s = text;
      for (int j = 0; j < (n - i); ++j) s += " extra" + std::to_string(j);
      out.push_back(s);
    }
    return out;
  }
  std::vector<std::pair<std::string, int>> requests;
};

TEST(Perturb, ParaphraseOversamplesAndOrders) {
  ScriptedProvider provider;
  PerturbOptions options;
  options.provider = &provider;
  const auto ladder = perturb("sort a list", PerturbationKind::kParaphrase, 5, 0, "text", options);
  ASSERT_EQ(provider.requests.size(), 1u);
  EXPECT_EQ(provider.requests[0].second, 20);
  ASSERT_EQ(ladder.levels.size(), 6u);
  const auto& distances = ladder.provenance.at("distances");
  for (std::size_t k = 1; k <= 5; ++k) {
    EXPECT_DOUBLE_EQ(distances[k - 1].get<double>(), bow_cosine_distance("sort a list", ladder.levels[k]));
    if (k > 1) {
      EXPECT_LE(distances[k - 2].get<double>(), distances[k - 1].get<double>());
    }
  }
}

}  // namespace
}  // namespace memoprobe
