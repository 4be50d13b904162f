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

// HTTP clients: OpenAI-compatible chat completions and the paraphrase
// sidecar. Kept apart from the rest of the library so that only code that
// talks to the network pulls in cpp-httplib.

#ifndef MEMOPROBE_HTTP_HPP_
#define MEMOPROBE_HTTP_HPP_

#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "memoprobe/error.hpp"
#include "memoprobe/modelclient.hpp"
#include "memoprobe/perturbation.hpp"

namespace memoprobe {

struct HttpTarget {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // "" or "/something", no trailing slash
};

inline HttpTarget SplitUrl(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, "not a URL: " + std::string(url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  HttpTarget t;
  t.origin = std::string(url.substr(0, path_start));
  if (path_start != std::string_view::npos) {
    std::string prefix(url.substr(path_start));
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    t.path_prefix = std::move(prefix);
  }
  return t;
}

inline bool IsTransientStatus(int status) {
  return status == 408 || status == 429 || (status >= 500 && status <= 599);
}

struct HttpTimeouts {
  std::chrono::seconds connect{10};
  std::chrono::seconds read{120};
};

// POST {base_url}/v1/chat/completions with a single user message.
class OpenAICompatibleBackend : public CompletionBackend {
 public:
  explicit OpenAICompatibleBackend(ModelEndpoint endpoint, HttpTimeouts timeouts = {})
      : endpoint_(std::move(endpoint)), target_(SplitUrl(endpoint_.base_url)), timeouts_(timeouts) {}

  static Json RequestBody(const ModelEndpoint& endpoint, const CompletionRequest& request) {
    Json body;
    body["model"] = endpoint.model_id;
    body["messages"] = Json::array({{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.sampling.temperature;
    body["top_p"] = request.sampling.nucleus;
    body["n"] = 1;
    body["max_tokens"] = request.sampling.max_tokens;
    return body;
  }

  // Text of choices[0].message.content; throws kMalformedResponse keeping the
  // raw body.
  static std::string ParseResponse(const std::string& raw) {
    try {
      const Json j = Json::parse(raw);
      const auto& choices = j.at("choices");
      if (!choices.is_array() || choices.empty()) throw std::runtime_error("no choices");
      return choices.at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kMalformedResponse,
                  std::string("malformed chat completion response: ") + e.what(), raw);
    }
  }

  std::string Complete(const CompletionRequest& request) override {
    httplib::Client client(target_.origin);
    client.set_connection_timeout(timeouts_.connect);
    client.set_read_timeout(timeouts_.read);
    httplib::Headers headers;
    if (endpoint_.auth_token && !endpoint_.auth_token->empty()) {
      headers.emplace("Authorization", "Bearer " + *endpoint_.auth_token);
    }
    const auto res = client.Post(target_.path_prefix + "/v1/chat/completions", headers,
                                 RequestBody(endpoint_, request).dump(), "application/json");
    if (!res) {
      throw TransientError(endpoint_.name + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      const std::string msg =
          endpoint_.name + ": HTTP " + std::to_string(res->status);
      if (IsTransientStatus(res->status)) throw TransientError(msg, res->body);
      throw Error(ErrorCode::kUnavailable, msg, res->body);
    }
    return ParseResponse(res->body);
  }

 private:
  ModelEndpoint endpoint_;
  HttpTarget target_;
  HttpTimeouts timeouts_;
};

inline std::unique_ptr<CompletionBackend> MakeHttpBackend(const ModelEndpoint& endpoint) {
  return std::make_unique<OpenAICompatibleBackend>(endpoint);
}

// Client for the paraphrase sidecar: POST /paraphrase {"text", "n"} ->
// {"paraphrases": [...]} with exactly n entries.
class HttpParaphraseProvider : public ParaphraseProvider {
 public:
  explicit HttpParaphraseProvider(std::string base_url,
                                  std::chrono::seconds timeout = std::chrono::seconds(60))
      : base_url_(std::move(base_url)), target_(SplitUrl(base_url_)), timeout_(timeout) {}

  bool Healthy() const {
    httplib::Client client(target_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    const auto res = client.Get(target_.path_prefix + "/health");
    return res && res->status == 200;
  }

  std::vector<std::string> Paraphrase(const std::string& text, int n) override {
    httplib::Client client(target_.origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    Json body;
    body["text"] = text;
    body["n"] = n;
    const auto res =
        client.Post(target_.path_prefix + "/paraphrase", body.dump(), "application/json");
    if (!res) {
      throw Error(ErrorCode::kUnavailable,
                  "paraphrase provider " + base_url_ + ": " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kUnavailable,
                  "paraphrase provider " + base_url_ + ": HTTP " + std::to_string(res->status),
                  res->body);
    }
    std::vector<std::string> out;
    try {
      out = Json::parse(res->body).at("paraphrases").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kMalformedResponse,
                  std::string("malformed paraphrase response: ") + e.what(), res->body);
    }
    if (out.size() != static_cast<std::size_t>(n)) {
      throw Error(ErrorCode::kMalformedResponse,
                  "paraphrase provider returned " + std::to_string(out.size()) + " of " +
                      std::to_string(n) + " paraphrases",
                  res->body);
    }
    return out;
  }

 private:
  std::string base_url_;
  HttpTarget target_;
  std::chrono::seconds timeout_;
};

}  // namespace memoprobe

#endif  // MEMOPROBE_HTTP_HPP_
