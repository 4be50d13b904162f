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

// Graded input perturbations. Level 0 is always the unperturbed input and
// intensity grows with the level index. Every operation is a pure function
// of its arguments, seed included.

#ifndef MEMOPROBE_PERTURBATION_HPP_
#define MEMOPROBE_PERTURBATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "memoprobe/datamodel.hpp"
#include "memoprobe/error.hpp"
#include "memoprobe/lexer.hpp"
#include "memoprobe/util.hpp"

namespace memoprobe {

enum class PerturbationKind { kIdentifierRename, kCharNoise, kWordNoise, kParaphrase };

inline std::string_view ToString(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kIdentifierRename: return "identifier_rename";
    case PerturbationKind::kCharNoise: return "char_noise";
    case PerturbationKind::kWordNoise: return "word_noise";
    case PerturbationKind::kParaphrase: return "paraphrase";
  }
  return "";
}

inline std::optional<PerturbationKind> ParsePerturbationKind(std::string_view name) {
  for (auto k : {PerturbationKind::kIdentifierRename, PerturbationKind::kCharNoise,
                 PerturbationKind::kWordNoise, PerturbationKind::kParaphrase}) {
    if (ToString(k) == name) return k;
  }
  return std::nullopt;
}

inline bool IsCompatible(PerturbationKind kind, InputKind input) {
  return (kind == PerturbationKind::kIdentifierRename) == (input == InputKind::kCode);
}

struct PerturbationLadder {
  std::string sample_id;
  PerturbationKind kind = PerturbationKind::kCharNoise;
  std::vector<std::string> levels;
  std::uint64_t seed = 0;
  // Kind-specific details: paraphrase distances, padding, fallbacks.
  Json provenance = Json::object();

  bool operator==(const PerturbationLadder&) const = default;
};

inline Json LadderToJson(const PerturbationLadder& ladder) {
  Json j;
  j["sample_id"] = ladder.sample_id;
  j["kind"] = ToString(ladder.kind);
  j["seed"] = ladder.seed;
  j["levels"] = ladder.levels;
  j["provenance"] = ladder.provenance;
  return j;
}

// Source of paraphrase candidates, e.g. the HTTP sidecar.
class ParaphraseProvider {
 public:
  virtual ~ParaphraseProvider() = default;
  // Returns exactly n candidates or throws.
  virtual std::vector<std::string> Paraphrase(const std::string& text, int n) = 0;
};

// ---------------------------------------------------------------------------
// Identifier renaming

struct RenamePlan {
  // Renamable spellings in first-occurrence order.
  std::vector<std::string> spellings;
  // original -> fresh, only for the spellings selected at this level.
  std::map<std::string, std::string> mapping;
};

namespace detail {

inline bool IsWordByte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || u >= 0x80;
}

inline void CollectWords(std::string_view text, std::set<std::string, std::less<>>& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (!IsWordByte(text[i])) {
      ++i;
      continue;
    }
    std::size_t e = i;
    while (e < text.size() && IsWordByte(text[e])) ++e;
    out.emplace(text.substr(i, e - i));
    i = e;
  }
}

inline std::size_t PrevSignificant(const std::vector<CodeToken>& tokens, std::size_t i) {
  while (i > 0) {
    --i;
    if (IsSignificant(tokens[i].kind)) return i;
  }
  return tokens.size();
}

inline std::size_t NextSignificant(const std::vector<CodeToken>& tokens, std::size_t i) {
  for (++i; i < tokens.size(); ++i) {
    if (IsSignificant(tokens[i].kind)) return i;
  }
  return tokens.size();
}

// Identifiers on import/package lines name things defined elsewhere.
inline std::vector<bool> ImportLineMask(const std::vector<CodeToken>& tokens,
                                        const LanguageRules& rules) {
  std::vector<bool> mask(tokens.size(), false);
  bool active = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.kind == TokenKind::kKeyword && !active) {
      const bool py = rules.language == Language::kPython && (t.text == "import" || t.text == "from");
      const bool java = rules.language == Language::kJava && (t.text == "import" || t.text == "package");
      const bool go = rules.language == Language::kGo && t.text == "package";
      const bool js = rules.language == Language::kJavaScript && t.text == "import";
      if (py || java || go || js) {
        const std::size_t prev = PrevSignificant(tokens, i);
        // statement start: nothing before, or a line break since the previous token
        bool at_start = prev == tokens.size();
        for (std::size_t k = prev == tokens.size() ? 0 : prev + 1; !at_start && k < i; ++k) {
          if (tokens[k].kind == TokenKind::kWhitespace &&
              tokens[k].text.find('\n') != std::string::npos) {
            at_start = true;
          }
        }
        if (prev != tokens.size() && tokens[prev].text == ";") at_start = true;
        active = at_start;
      }
    }
    if (active) {
      mask[i] = true;
      const bool ends_line = t.kind == TokenKind::kWhitespace && t.text.find('\n') != std::string::npos;
      if (t.text == ";" || (ends_line && rules.language != Language::kJavaScript)) active = false;
      if (rules.language == Language::kJavaScript && t.kind == TokenKind::kString) active = false;
    }
  }
  return mask;
}

}  // namespace detail

// Distinct identifier spellings eligible for renaming, in order of first
// occurrence. Excluded: keywords, predeclared names, spellings that occur as
// words inside string literals, member names after `.`/`->`/`::`, qualifiers
// before `::`, and names on import/package lines.
inline std::vector<std::string> RenamableIdentifiers(const std::vector<CodeToken>& tokens,
                                                     const LanguageRules& rules) {
  std::set<std::string, std::less<>> excluded;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::kString) detail::CollectWords(t.text, excluded);
  }
  const auto import_mask = detail::ImportLineMask(tokens, rules);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::kIdentifier) continue;
    if (import_mask[i]) {
      excluded.insert(tokens[i].text);
      continue;
    }
    const std::size_t prev = detail::PrevSignificant(tokens, i);
    if (prev < tokens.size()) {
      const auto& p = tokens[prev].text;
      if (p == "." || p == "->" || p == "::" || p == "?.") excluded.insert(tokens[i].text);
    }
    const std::size_t next = detail::NextSignificant(tokens, i);
    if (next < tokens.size() && tokens[next].text == "::") excluded.insert(tokens[i].text);
  }
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::kIdentifier) continue;
    if (rules.builtins.count(t.text) || excluded.count(t.text)) continue;
    if (seen.insert(t.text).second) out.push_back(t.text);
  }
  return out;
}

inline RenamePlan plan_renaming(std::string_view source, std::string_view language, int level,
                                int pr_max, std::uint64_t seed) {
  if (pr_max < 1) throw Error(ErrorCode::kInvalidArgument, "pr_max must be >= 1");
  if (level < 0 || level > pr_max) {
    throw Error(ErrorCode::kInvalidArgument, "level must be within [0, pr_max]");
  }
  const LanguageRules& rules = RulesFor(language);
  const auto tokens = tokenize_code(source, language);
  RenamePlan plan;
  plan.spellings = RenamableIdentifiers(tokens, rules);
  const std::size_t d = plan.spellings.size();
  const std::size_t count =
      (static_cast<std::size_t>(level) * d + static_cast<std::size_t>(pr_max) - 1) /
      static_cast<std::size_t>(pr_max);

  std::set<std::string, std::less<>> taken(rules.keywords.begin(), rules.keywords.end());
  taken.insert(rules.builtins.begin(), rules.builtins.end());
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::kIdentifier || t.kind == TokenKind::kKeyword) taken.insert(t.text);
  }

  // The order and the fresh names do not depend on the level, so the renamed
  // set at level k is a subset of the one at level k + 1.
  DeterministicRng rng(MixSeed(seed, HashBytes(source)));
  const auto order = rng.Permutation(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::string fresh;
    do {
      fresh.clear();
      for (int c = 0; c < 8; ++c) fresh.push_back(static_cast<char>('a' + rng.Below(26)));
    } while (taken.count(fresh));
    taken.insert(fresh);
    if (i < count) plan.mapping.emplace(plan.spellings[order[i]], std::move(fresh));
  }
  return plan;
}

inline std::string ApplyRenaming(const std::vector<CodeToken>& tokens,
                                 const std::map<std::string, std::string>& mapping) {
  std::string out;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::kIdentifier) {
      auto it = mapping.find(t.text);
      out += it == mapping.end() ? t.text : it->second;
    } else {
      out += t.text;
    }
  }
  return out;
}

inline std::string rename_identifiers(std::string_view source, std::string_view language,
                                      int level, int pr_max, std::uint64_t seed) {
  const RenamePlan plan = plan_renaming(source, language, level, pr_max, seed);
  if (plan.mapping.empty()) return std::string(source);
  return ApplyRenaming(tokenize_code(source, language), plan.mapping);
}

// ---------------------------------------------------------------------------
// Character and word noise

// Replaces exactly ceil(rate * n) of the n code points with a different
// printable ASCII character. Positions come from one seeded permutation, so
// raising the rate only adds positions.
inline std::string char_noise(std::string_view text, double rate, std::uint64_t seed) {
  if (!(rate >= 0 && rate <= 1)) throw Error(ErrorCode::kInvalidArgument, "rate must be in [0, 1]");
  std::u32string cps = DecodeUtf8(text);
  const std::size_t count = std::min(cps.size(), CeilCount(rate * static_cast<double>(cps.size())));
  if (count == 0) return std::string(text);
  DeterministicRng rng(MixSeed(seed, 0x636861726e6f6973ULL));
  const auto order = rng.Permutation(cps.size());
  // Replacement characters are drawn per position, in position order, so they
  // too are independent of the rate.
  std::vector<char32_t> replacement(cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    char32_t r;
    do {
      r = static_cast<char32_t>(0x20 + rng.Below(95));
    } while (r == cps[i]);
    replacement[i] = r;
  }
  for (std::size_t i = 0; i < count; ++i) cps[order[i]] = replacement[order[i]];
  return EncodeUtf8(cps);
}

inline double CharNoiseRate(int level) { return static_cast<double>(2 * level) / 100.0; }

struct WordEdit {
  enum class Op { kDrop, kSwapWithNext };
  Op op;
  std::size_t word;  // index into the original word list
};

namespace detail {

struct SplitText {
  std::vector<std::string> separators;  // separators[i] precedes words[i]; one trailing extra
  std::vector<std::string> words;
};

inline SplitText SplitWords(std::string_view text) {
  SplitText s;
  std::size_t i = 0;
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::string sep;
  while (i < text.size()) {
    if (is_ws(text[i])) {
      sep.push_back(text[i++]);
      continue;
    }
    std::size_t e = i;
    while (e < text.size() && !is_ws(text[e])) ++e;
    s.separators.push_back(std::move(sep));
    sep.clear();
    s.words.emplace_back(text.substr(i, e - i));
    i = e;
  }
  s.separators.push_back(std::move(sep));
  return s;
}

}  // namespace detail

// The edits word_noise applies: ceil(level / pr_max * 0.15 * W) words, at
// most W - 1, each dropped or swapped with its right-hand neighbour.
inline std::vector<WordEdit> plan_word_noise(std::string_view text, int level, int pr_max,
                                             std::uint64_t seed) {
  if (pr_max < 1) throw Error(ErrorCode::kInvalidArgument, "pr_max must be >= 1");
  if (level < 0 || level > pr_max) {
    throw Error(ErrorCode::kInvalidArgument, "level must be within [0, pr_max]");
  }
  const auto split = detail::SplitWords(text);
  const std::size_t w = split.words.size();
  if (w < 2 || level == 0) return {};
  const std::size_t wanted = (15 * static_cast<std::size_t>(level) * w +
                              100 * static_cast<std::size_t>(pr_max) - 1) /
                             (100 * static_cast<std::size_t>(pr_max));
  const std::size_t count = std::min(wanted, w - 1);

  DeterministicRng rng(MixSeed(seed, 0x776f72646e6f6973ULL));
  const auto order = rng.Permutation(w);
  std::vector<bool> coins(w);
  for (std::size_t i = 0; i < w; ++i) coins[i] = rng.Coin();

  std::vector<bool> chosen(w, false);
  for (std::size_t i = 0; i < count; ++i) chosen[order[i]] = true;
  std::vector<bool> used(w, false);  // consumed as a swap partner
  std::vector<WordEdit> edits;
  for (std::size_t i = 0; i < w; ++i) {
    if (!chosen[i]) continue;
    const bool can_swap = i + 1 < w && !chosen[i + 1] && !used[i + 1] &&
                          split.words[i] != split.words[i + 1];
    if (coins[i] && can_swap) {
      edits.push_back({WordEdit::Op::kSwapWithNext, i});
      used[i + 1] = true;
    } else {
      edits.push_back({WordEdit::Op::kDrop, i});
    }
  }
  return edits;
}

inline std::string word_noise(std::string_view text, int level, int pr_max, std::uint64_t seed) {
  const auto edits = plan_word_noise(text, level, pr_max, seed);
  if (edits.empty()) return std::string(text);
  auto split = detail::SplitWords(text);
  std::vector<bool> dropped(split.words.size(), false);
  for (const auto& e : edits) {
    if (e.op == WordEdit::Op::kDrop) {
      dropped[e.word] = true;
    } else {
      std::swap(split.words[e.word], split.words[e.word + 1]);
    }
  }
  // A dropped word takes its leading separator with it; the first surviving
  // word keeps the original leading whitespace.
  std::string out = split.separators.front();
  bool first = true;
  for (std::size_t i = 0; i < split.words.size(); ++i) {
    if (dropped[i]) continue;
    if (!first) out += split.separators[i].empty() ? " " : split.separators[i];
    out += split.words[i];
    first = false;
  }
  out += split.separators.back();
  return out;
}

// ---------------------------------------------------------------------------
// Paraphrase ordering

// Lowercased runs of [A-Za-z0-9_] (and non-ASCII bytes) with counts.
inline std::map<std::string, double> BagOfWords(std::string_view text) {
  std::map<std::string, double> bag;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!detail::IsWordByte(text[i])) {
      ++i;
      continue;
    }
    std::size_t e = i;
    while (e < text.size() && detail::IsWordByte(text[e])) ++e;
    bag[ToLowerAscii(text.substr(i, e - i))] += 1.0;
    i = e;
  }
  return bag;
}

inline double bow_cosine_distance(std::string_view a, std::string_view b) {
  const auto ba = BagOfWords(a);
  const auto bb = BagOfWords(b);
  if (ba.empty() && bb.empty()) return 0.0;
  if (ba.empty() || bb.empty()) return 1.0;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [w, c] : ba) {
    na += c * c;
    if (auto it = bb.find(w); it != bb.end()) dot += c * it->second;
  }
  for (const auto& [w, c] : bb) nb += c * c;
  const double cosine = dot / std::sqrt(na * nb);
  return std::clamp(1.0 - cosine, 0.0, 1.0);
}

struct OrderedParaphrases {
  std::vector<std::string> texts;
  std::vector<double> distances;
  std::size_t padded = 0;  // trailing entries that repeat the most distant one
};

inline OrderedParaphrases order_paraphrases(std::string_view original,
                                            const std::vector<std::string>& candidates,
                                            int pr_max) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "no paraphrase candidates");
  if (pr_max < 1) throw Error(ErrorCode::kInvalidArgument, "pr_max must be >= 1");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scored.emplace_back(bow_cosine_distance(original, candidates[i]), i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  OrderedParaphrases out;
  const std::size_t take = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(pr_max));
  for (std::size_t i = 0; i < take; ++i) {
    out.texts.push_back(candidates[scored[i].second]);
    out.distances.push_back(scored[i].first);
  }
  while (out.texts.size() < static_cast<std::size_t>(pr_max)) {
    out.texts.push_back(out.texts.back());
    out.distances.push_back(out.distances.back());
    ++out.padded;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ladders

inline constexpr int kParaphraseOversampling = 4;

struct PerturbOptions {
  ParaphraseProvider* provider = nullptr;
  // With no provider, build a word_noise ladder instead of failing.
  bool fallback_word_noise = false;
};

inline PerturbationLadder perturb(std::string_view input, PerturbationKind kind, int pr_max,
                                  std::uint64_t seed, std::string_view language,
                                  const PerturbOptions& options = {}) {
  if (pr_max < 1) throw Error(ErrorCode::kInvalidArgument, "pr_max must be >= 1");
  PerturbationLadder ladder;
  ladder.kind = kind;
  ladder.seed = seed;
  ladder.levels.reserve(static_cast<std::size_t>(pr_max) + 1);
  ladder.levels.emplace_back(input);
  switch (kind) {
    case PerturbationKind::kIdentifierRename:
      if (!HasLexer(language)) {
        throw Error(ErrorCode::kUnsupported, "identifier_rename does not support language \"" +
                                                 std::string(language) + "\"");
      }
      for (int k = 1; k <= pr_max; ++k) {
        ladder.levels.push_back(rename_identifiers(input, language, k, pr_max, seed));
      }
      break;
    case PerturbationKind::kCharNoise:
      for (int k = 1; k <= pr_max; ++k) {
        ladder.levels.push_back(char_noise(input, std::min(1.0, CharNoiseRate(k)), seed));
      }
      ladder.provenance["rate_per_level"] = 0.02;
      break;
    case PerturbationKind::kWordNoise:
      for (int k = 1; k <= pr_max; ++k) ladder.levels.push_back(word_noise(input, k, pr_max, seed));
      break;
    case PerturbationKind::kParaphrase: {
      if (options.provider == nullptr) {
        if (!options.fallback_word_noise) {
          throw Error(ErrorCode::kPrecondition,
                      "paraphrase perturbation needs a paraphrase provider "
                      "(or enable the word-noise fallback)");
        }
        ladder.kind = PerturbationKind::kWordNoise;
        ladder.provenance["fallback_from"] = "paraphrase";
        for (int k = 1; k <= pr_max; ++k) {
          ladder.levels.push_back(word_noise(input, k, pr_max, seed));
        }
        break;
      }
      const int n = kParaphraseOversampling * pr_max;
      auto candidates = options.provider->Paraphrase(std::string(input), n);
      auto ordered = order_paraphrases(input, candidates, pr_max);
      for (auto& t : ordered.texts) ladder.levels.push_back(std::move(t));
      ladder.provenance["requested"] = n;
      ladder.provenance["distances"] = ordered.distances;
      ladder.provenance["padded"] = ordered.padded;
      break;
    }
  }
  return ladder;
}

// Checks input-kind compatibility before building the ladder.
inline PerturbationLadder perturb_sample(const BenchmarkSample& sample, PerturbationKind kind,
                                         int pr_max, std::uint64_t seed,
                                         const PerturbOptions& options = {}) {
  if (!IsCompatible(kind, sample.input_kind)) {
    throw Error(ErrorCode::kPrecondition,
                "sample \"" + sample.id + "\": " + std::string(ToString(kind)) +
                    " cannot perturb " + std::string(ToString(sample.input_kind)) + " input");
  }
  auto ladder = perturb(sample.input, kind, pr_max, seed, sample.language, options);
  ladder.sample_id = sample.id;
  return ladder;
}

}  // namespace memoprobe

#endif  // MEMOPROBE_PERTURBATION_HPP_
