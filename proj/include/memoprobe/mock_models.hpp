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

// Synthetic models that embody the two limit behaviours the harness is
// built to tell apart: a memorizer that answers perfectly on seen inputs and
// collapses on anything else, and a generalizer whose quality decays
// smoothly with distance from what it knows.

#ifndef MEMOPROBE_MOCK_MODELS_HPP_
#define MEMOPROBE_MOCK_MODELS_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "memoprobe/datamodel.hpp"
#include "memoprobe/error.hpp"
#include "memoprobe/grading.hpp"
#include "memoprobe/modelclient.hpp"
#include "memoprobe/perturbation.hpp"
#include "memoprobe/util.hpp"

namespace memoprobe {

struct MockEntry {
  std::string key;  // the prompt the model "knows"
  std::string reference;
  GraderKind grader = GraderKind::kTextSimilarity;
  std::string language = "text";
};

struct MemorizerSpec {
  // Largest character edit distance at which the memorized answer is still
  // returned.
  std::size_t radius = 0;
  int latency_ms = 0;
};

struct GeneralizerSpec {
  // Similarity lost per unit of bag-of-words cosine distance from the key.
  double decay = 0.5;
  int latency_ms = 0;
};

namespace detail {

inline constexpr char32_t kNoiseFirst = 0x4E00;  // CJK unified ideographs
inline constexpr char32_t kNoiseCount = 0x5000;

// Code points no reference uses; outputs built from them share nothing with
// any reference, at character or token level.
class NoiseAlphabet {
 public:
  explicit NoiseAlphabet(const std::vector<MockEntry>& entries) {
    for (const auto& e : entries) {
      for (char32_t cp : DecodeUtf8(e.reference)) {
        if (cp >= kNoiseFirst && cp < kNoiseFirst + kNoiseCount) used_.insert(cp);
      }
    }
  }

  char32_t Draw(DeterministicRng& rng) const {
    for (;;) {
      const char32_t cp = kNoiseFirst + static_cast<char32_t>(rng.Below(kNoiseCount));
      if (!used_.count(cp)) return cp;
    }
  }

 private:
  std::set<char32_t> used_;
};

inline void Sleep(int ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

inline std::uint64_t RequestSeed(const CompletionRequest& r) {
  return MixSeed(MixSeed(HashBytes(r.prompt), static_cast<std::uint64_t>(r.sample_index)),
                 static_cast<std::uint64_t>(r.repeat_index) + 0x100);
}

}  // namespace detail

// Seeded run of noise-alphabet characters, about five per word. Shares no
// code point with any reference, so every grader scores it 0.
inline std::string NoiseText(const detail::NoiseAlphabet& alphabet, std::uint64_t seed,
                             std::size_t words = 16) {
  DeterministicRng rng(seed);
  std::string out;
  for (std::size_t w = 0; w < words; ++w) {
    for (int c = w ? 0 : 1; c < 5; ++c) AppendUtf8(out, alphabet.Draw(rng));
  }
  return out;
}

// Rewrites `reference` so that its grader similarity to the original is as
// close as possible to `target`, by substituting characters (text grading)
// or whole tokens (code grading) with noise-alphabet material.
inline std::string CorruptToSimilarity(const MockEntry& entry, double target,
                                       const detail::NoiseAlphabet& alphabet,
                                       std::uint64_t seed) {
  target = std::clamp(target, 0.0, 1.0);
  if (target >= 1.0) return entry.reference;
  DeterministicRng rng(seed);
  const bool token_level =
      entry.grader == GraderKind::kCodeTokenSimilarity && HasLexer(entry.language);
  if (!token_level) {
    std::u32string cps = DecodeUtf8(entry.reference);
    if (cps.empty()) return entry.reference;
    const auto order = rng.Permutation(cps.size());
    const auto m = static_cast<std::size_t>(
        std::llround((1.0 - target) * static_cast<double>(cps.size())));
    for (std::size_t i = 0; i < m && i < cps.size(); ++i) cps[order[i]] = alphabet.Draw(rng);
    return EncodeUtf8(cps);
  }

  const auto tokens = tokenize_code(entry.reference, entry.language);
  std::vector<std::size_t> significant;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (IsSignificant(tokens[i].kind)) significant.push_back(i);
  }
  if (significant.empty()) return entry.reference;
  const auto order = rng.Permutation(significant.size());
  std::vector<std::string> fresh(significant.size());
  for (auto& f : fresh) {
    for (int c = 0; c < 3; ++c) AppendUtf8(f, alphabet.Draw(rng));
  }
  auto build = [&](std::size_t m) {
    std::vector<bool> replace(tokens.size(), false);
    for (std::size_t i = 0; i < m; ++i) replace[significant[order[i]]] = true;
    std::string out;
    std::size_t f = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (replace[i]) {
        out += ' ';
        out += fresh[f++];
        out += ' ';
      } else {
        out += tokens[i].text;
      }
    }
    return out;
  };
  const double t = static_cast<double>(significant.size());
  const auto guess = static_cast<long long>(std::llround((1.0 - target) * t));
  std::string best = entry.reference;
  double best_gap = 2.0;
  for (long long m = guess - 2; m <= guess + 2; ++m) {
    if (m < 0 || m > static_cast<long long>(significant.size())) continue;
    std::string candidate = build(static_cast<std::size_t>(m));
    const double gap = std::fabs(
        code_token_similarity(candidate, entry.reference, entry.language) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = std::move(candidate);
    }
  }
  return best;
}

class MemorizerBackend : public CompletionBackend {
 public:
  MemorizerBackend(std::vector<MockEntry> entries, MemorizerSpec spec)
      : entries_(std::move(entries)), spec_(spec), alphabet_(entries_) {
    for (std::size_t i = 0; i < entries_.size(); ++i) exact_.emplace(entries_[i].key, i);
  }

  std::string Complete(const CompletionRequest& request) override {
    detail::Sleep(spec_.latency_ms);
    if (auto it = exact_.find(request.prompt); it != exact_.end()) {
      return entries_[it->second].reference;
    }
    if (spec_.radius > 0) {
      const auto prompt = DecodeUtf8(request.prompt);
      for (const auto& e : entries_) {
        const auto key = DecodeUtf8(e.key);
        const std::size_t gap =
            key.size() > prompt.size() ? key.size() - prompt.size() : prompt.size() - key.size();
        if (gap > spec_.radius) continue;
        if (EditDistance(prompt, key) <= spec_.radius) return e.reference;
      }
    }
    return NoiseText(alphabet_, detail::RequestSeed(request));
  }

 private:
  std::vector<MockEntry> entries_;
  MemorizerSpec spec_;
  detail::NoiseAlphabet alphabet_;
  std::unordered_map<std::string, std::size_t> exact_;
};

class GeneralizerBackend : public CompletionBackend {
 public:
  GeneralizerBackend(std::vector<MockEntry> entries, GeneralizerSpec spec)
      : entries_(std::move(entries)), spec_(spec), alphabet_(entries_) {
    if (!(spec_.decay >= 0 && spec_.decay <= 1)) {
      throw Error(ErrorCode::kInvalidArgument, "generalizer decay must be in [0, 1]");
    }
  }

  std::string Complete(const CompletionRequest& request) override {
    detail::Sleep(spec_.latency_ms);
    if (entries_.empty()) return NoiseText(alphabet_, detail::RequestSeed(request));
    std::size_t nearest = 0;
    double best = 2.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const double d = bow_cosine_distance(request.prompt, entries_[i].key);
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    return CorruptToSimilarity(entries_[nearest], 1.0 - spec_.decay * best, alphabet_,
                               detail::RequestSeed(request));
  }

 private:
  std::vector<MockEntry> entries_;
  GeneralizerSpec spec_;
  detail::NoiseAlphabet alphabet_;
};

namespace detail {

inline std::map<std::string, std::string> ParseQuery(std::string_view url) {
  std::map<std::string, std::string> out;
  const auto q = url.find('?');
  if (q == std::string_view::npos) return out;
  std::string_view rest = url.substr(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const std::string_view kv = rest.substr(0, amp);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument, "bad mock option \"" + std::string(kv) + "\"");
    }
    out.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return out;
}

inline double ParseNumber(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "bad value for mock option " + key + ": " + value);
  }
}

}  // namespace detail

// Builds the backend for a mock:* endpoint. The mock "knows" exactly the
// rendered prompts of the given entries.
inline std::unique_ptr<CompletionBackend> MakeMockBackend(const ModelEndpoint& endpoint,
                                                          std::vector<MockEntry> entries) {
  const std::string& url = endpoint.base_url;
  const std::string kind = url.substr(0, url.find('?'));
  const auto options = detail::ParseQuery(url);
  if (kind == "mock:memorizer") {
    MemorizerSpec spec;
    for (const auto& [k, v] : options) {
      const double x = detail::ParseNumber(k, v);
      if (k == "radius") {
        if (x < 0) throw Error(ErrorCode::kInvalidArgument, "memorizer radius must be >= 0");
        spec.radius = static_cast<std::size_t>(x);
      } else if (k == "latency_ms") {
        spec.latency_ms = static_cast<int>(x);
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown memorizer option " + k);
      }
    }
    return std::make_unique<MemorizerBackend>(std::move(entries), spec);
  }
  if (kind == "mock:generalizer") {
    GeneralizerSpec spec;
    for (const auto& [k, v] : options) {
      const double x = detail::ParseNumber(k, v);
      if (k == "decay") {
        spec.decay = x;
      } else if (k == "latency_ms") {
        spec.latency_ms = static_cast<int>(x);
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown generalizer option " + k);
      }
    }
    return std::make_unique<GeneralizerBackend>(std::move(entries), spec);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown mock model \"" + kind + "\"");
}

}  // namespace memoprobe

#endif  // MEMOPROBE_MOCK_MODELS_HPP_
