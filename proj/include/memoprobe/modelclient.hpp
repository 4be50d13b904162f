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

#ifndef MEMOPROBE_MODELCLIENT_HPP_
#define MEMOPROBE_MODELCLIENT_HPP_

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include <unistd.h>

#include "json.hpp"
#include "memoprobe/datamodel.hpp"
#include "memoprobe/error.hpp"

namespace memoprobe {

// Retryable failure: connection errors, timeouts, 408/429/5xx.
class TransientError : public Error {
 public:
  explicit TransientError(const std::string& message, std::string payload = {})
      : Error(ErrorCode::kUnavailable, message, std::move(payload)) {}
};

// ---------------------------------------------------------------------------
// Prompt templates

inline constexpr std::string_view kInputPlaceholder = "{input}";

class PromptTemplate {
 public:
  PromptTemplate(TaskKind task, std::string text) : task_(task), text_(std::move(text)) {
    const auto first = text_.find(kInputPlaceholder);
    if (first == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "prompt template has no {input} placeholder");
    }
    if (text_.find(kInputPlaceholder, first + 1) != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "prompt template has more than one {input} placeholder");
    }
    placeholder_ = first;
  }

  TaskKind task() const { return task_; }
  const std::string& text() const { return text_; }

  std::string Render(std::string_view input) const {
    std::string out;
    out.reserve(text_.size() + input.size());
    out.append(text_, 0, placeholder_);
    out.append(input);
    out.append(text_, placeholder_ + kInputPlaceholder.size());
    return out;
  }

 private:
  TaskKind task_;
  std::string text_;
  std::size_t placeholder_ = 0;
};

inline std::string render_prompt(const PromptTemplate& tmpl, std::string_view input) {
  return tmpl.Render(input);
}

inline std::string_view DefaultTemplateText(TaskKind task) {
  switch (task) {
    case TaskKind::kCodeGeneration:
      return "Solve the following programming task. Reply with code only.\n\n{input}";
    case TaskKind::kTestGeneration:
      return "Write unit tests for the following code. Reply with code only.\n\n{input}";
    case TaskKind::kProgramRepair:
      return "The following code contains a bug. Reply with the fixed code only.\n\n{input}";
    case TaskKind::kVulnerabilityDetection:
      return "Does the following code contain a security vulnerability? Reply with the "
             "vulnerability type (CWE) or \"none\".\n\n{input}";
    case TaskKind::kCodeSummarization:
      return "Summarize what the following code does in one sentence.\n\n{input}";
  }
  return "{input}";
}

class TemplateSet {
 public:
  TemplateSet() {
    for (TaskKind t : kAllTaskKinds) templates_.emplace(t, PromptTemplate(t, std::string(DefaultTemplateText(t))));
  }

  static TemplateSet Uniform(const std::string& text) {
    TemplateSet s;
    for (TaskKind t : kAllTaskKinds) s.Set(PromptTemplate(t, text));
    return s;
  }

  void Set(PromptTemplate tmpl) { templates_.insert_or_assign(tmpl.task(), std::move(tmpl)); }
  const PromptTemplate& For(TaskKind task) const { return templates_.at(task); }

  Json ToJson() const {
    Json j = Json::object();
    for (const auto& [task, tmpl] : templates_) j[std::string(ToString(task))] = tmpl.text();
    return j;
  }

  // JSON object mapping task names to template text; unknown tasks rejected.
  void Override(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "templates must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      auto task = ParseTaskKind(it.key());
      if (!task) throw Error(ErrorCode::kInvalidArgument, "unknown task kind \"" + it.key() + "\"");
      if (!it->is_string()) throw Error(ErrorCode::kInvalidArgument, "template must be a string");
      Set(PromptTemplate(*task, it->get<std::string>()));
    }
  }

 private:
  std::map<TaskKind, PromptTemplate> templates_;
};

// ---------------------------------------------------------------------------
// Endpoints

struct ModelEndpoint {
  std::string name;
  std::string base_url;  // http(s)://host[:port][/prefix] or mock:<kind>[?k=v&...]
  std::string model_id;
  std::optional<std::string> auth_token;
  int max_concurrency = 4;

  bool is_mock() const { return base_url.rfind("mock:", 0) == 0; }
};

// Parses `[name=]target[,model=ID][,concurrency=N]`.
inline ModelEndpoint ParseEndpointSpec(std::string_view spec) {
  ModelEndpoint ep;
  std::vector<std::string> parts;
  {
    std::string cur;
    for (char c : spec) {
      if (c == ',') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    parts.push_back(cur);
  }
  std::string target = parts.front();
  if (auto eq = target.find('='); eq != std::string::npos && target.find("://") > eq &&
                                  target.rfind("mock:", 0) != 0) {
    ep.name = target.substr(0, eq);
    target = target.substr(eq + 1);
  }
  if (target.empty()) throw Error(ErrorCode::kInvalidArgument, "empty endpoint target");
  ep.base_url = target;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "bad endpoint option \"" + parts[i] + "\"");
    }
    const std::string key = parts[i].substr(0, eq);
    const std::string value = parts[i].substr(eq + 1);
    if (key == "model") {
      ep.model_id = value;
    } else if (key == "concurrency") {
      try {
        ep.max_concurrency = std::stoi(value);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, "bad concurrency \"" + value + "\"");
      }
      if (ep.max_concurrency < 1) throw Error(ErrorCode::kInvalidArgument, "concurrency must be >= 1");
    } else if (key == "name") {
      ep.name = value;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown endpoint option \"" + key + "\"");
    }
  }
  if (ep.is_mock()) {
    if (ep.name.empty()) ep.name = target.substr(0, target.find('?'));
    if (ep.model_id.empty()) ep.model_id = ep.name;
  } else {
    if (target.rfind("http://", 0) != 0 && target.rfind("https://", 0) != 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "endpoint must be an http(s) URL or mock:memorizer / mock:generalizer, got \"" +
                      target + "\"");
    }
    if (ep.model_id.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "endpoint " + target + " needs model=<id>");
    }
    if (ep.name.empty()) ep.name = ep.model_id;
  }
  return ep;
}

// ---------------------------------------------------------------------------
// Cache keys

using CacheKey = std::string;  // 64 lowercase hex digits

inline std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

// Exact bit pattern of a double, so 0.3 and 0.30001 never share a key.
inline std::string ExactDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline Json CacheRequestJson(const ModelEndpoint& endpoint, std::string_view prompt,
                             const SamplingConfig& sampling, int sample_index, int repeat_index) {
  Json j;
  j["v"] = 1;
  j["endpoint"] = {{"name", endpoint.name},
                   {"base_url", endpoint.base_url},
                   {"model_id", endpoint.model_id}};
  j["prompt"] = prompt;
  j["temperature"] = ExactDouble(sampling.temperature);
  j["top_p"] = ExactDouble(sampling.nucleus);
  j["max_tokens"] = sampling.max_tokens;
  j["sample_index"] = sample_index;
  j["repeat_index"] = repeat_index;
  return j;
}

inline CacheKey cache_key(const ModelEndpoint& endpoint, std::string_view prompt,
                          const SamplingConfig& sampling, int sample_index, int repeat_index) {
  return Sha256Hex(CacheRequestJson(endpoint, prompt, sampling, sample_index, repeat_index).dump());
}

// ---------------------------------------------------------------------------
// Response cache: <dir>/<first two hex digits>/<key>.json

class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create cache dir " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path PathFor(const CacheKey& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
  }

  std::optional<std::string> Lookup(const CacheKey& key) const {
    std::ifstream in(PathFor(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      const Json j = Json::parse(ss.str());
      return j.at("response").get<std::string>();
    } catch (const std::exception&) {
      return std::nullopt;  // torn or foreign file: treat as a miss
    }
  }

  void Store(const CacheKey& key, const Json& request, const std::string& response) const {
    namespace fs = std::filesystem;
    const fs::path target = PathFor(key);
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + target.parent_path().string());
    Json j;
    j["key"] = key;
    j["request"] = request;
    j["response"] = response;
    j["created_at"] = NowIso8601();
    static std::atomic<std::uint64_t> counter{0};
    std::ostringstream tmp_name;
    tmp_name << key << ".tmp." << ::getpid() << "."
             << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter++;
    const fs::path tmp = target.parent_path() / tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
      out << j.dump(2) << '\n';
      if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) {
      fs::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "cannot publish cache entry " + target.string());
    }
  }

 private:
  static std::string NowIso8601() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Backends and the caching client

struct CompletionRequest {
  std::string prompt;
  SamplingConfig sampling;
  int sample_index = 0;
  int repeat_index = 0;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  // One completion. Throws TransientError for retryable failures.
  virtual std::string Complete(const CompletionRequest& request) = 0;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_delay{500};
  double backoff_factor = 2.0;
};

struct OutputSet {
  int level = 0;
  std::vector<std::string> outputs;
  std::vector<CacheKey> provenance;
};

class ModelClient {
 public:
  explicit ModelClient(std::shared_ptr<ResponseCache> cache = nullptr, RetryPolicy retry = {})
      : cache_(std::move(cache)), retry_(retry) {}

  void AddEndpoint(const ModelEndpoint& endpoint, std::unique_ptr<CompletionBackend> backend) {
    if (endpoints_.count(endpoint.name)) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate endpoint name \"" + endpoint.name + "\"");
    }
    auto slot = std::make_unique<Slot>(endpoint, std::move(backend));
    endpoints_.emplace(endpoint.name, std::move(slot));
  }

  // n completions of `prompt`, issued as n single requests with distinct
  // sample indices. Each resolves from cache when present.
  OutputSet Complete(const ModelEndpoint& endpoint, const std::string& prompt,
                     const SamplingConfig& sampling, int n, int repeat_index = 0) {
    if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n must be >= 1");
    Slot& slot = SlotFor(endpoint.name);
    OutputSet set;
    for (int i = 0; i < n; ++i) {
      const Json request = CacheRequestJson(slot.endpoint, prompt, sampling, i, repeat_index);
      const CacheKey key = Sha256Hex(request.dump());
      set.provenance.push_back(key);
      if (cache_) {
        if (auto hit = cache_->Lookup(key)) {
          ++cache_hits_;
          set.outputs.push_back(std::move(*hit));
          continue;
        }
      }
      std::string text = CallWithRetry(slot, {prompt, sampling, i, repeat_index});
      if (cache_) cache_->Store(key, request, text);
      set.outputs.push_back(std::move(text));
    }
    return set;
  }

  std::uint64_t backend_calls() const { return backend_calls_.load(); }
  std::uint64_t cache_hits() const { return cache_hits_.load(); }

 private:
  struct Slot {
    Slot(ModelEndpoint ep, std::unique_ptr<CompletionBackend> b)
        : endpoint(std::move(ep)),
          backend(std::move(b)),
          in_flight(endpoint.max_concurrency < 1 ? 1 : endpoint.max_concurrency) {}
    ModelEndpoint endpoint;
    std::unique_ptr<CompletionBackend> backend;
    std::counting_semaphore<1024> in_flight;
  };

  Slot& SlotFor(const std::string& name) {
    auto it = endpoints_.find(name);
    if (it == endpoints_.end()) {
      throw Error(ErrorCode::kInvalidArgument, "unknown endpoint \"" + name + "\"");
    }
    return *it->second;
  }

  std::string CallWithRetry(Slot& slot, const CompletionRequest& request) {
    auto delay = retry_.initial_delay;
    for (int attempt = 0;; ++attempt) {
      try {
        slot.in_flight.acquire();
        struct Release {
          std::counting_semaphore<1024>& s;
          ~Release() { s.release(); }
        } release{slot.in_flight};
        ++backend_calls_;
        return slot.backend->Complete(request);
      } catch (const TransientError& e) {
        if (attempt >= retry_.max_retries) {
          throw Error(ErrorCode::kUnavailable,
                      "endpoint \"" + slot.endpoint.name + "\" unreachable after " +
                          std::to_string(attempt + 1) + " attempts: " + e.what(),
                      e.payload());
        }
      }
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(delay.count()) * retry_.backoff_factor));
    }
  }

  std::shared_ptr<ResponseCache> cache_;
  RetryPolicy retry_;
  std::map<std::string, std::unique_ptr<Slot>> endpoints_;
  std::atomic<std::uint64_t> backend_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

}  // namespace memoprobe

#endif  // MEMOPROBE_MODELCLIENT_HPP_
