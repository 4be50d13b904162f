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

#ifndef MEMOPROBE_ERROR_HPP_
#define MEMOPROBE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace memoprobe {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kValidation,
  kUnsupported,
  kIo,
  kUnavailable,
  kMalformedResponse,
  kDegenerate,
  kPrecondition,
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kUnavailable: return "unavailable";
    case ErrorCode::kMalformedResponse: return "malformed_response";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kPrecondition: return "precondition";
  }
  return "unknown";
}

// Every failure surfaced by the library. `payload` carries raw data worth
// keeping for diagnosis (e.g. an unparseable response body).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string payload = {})
      : std::runtime_error(message), code_(code), payload_(std::move(payload)) {}

  ErrorCode code() const { return code_; }
  const std::string& payload() const { return payload_; }

 private:
  ErrorCode code_;
  std::string payload_;
};

}  // namespace memoprobe

#endif  // MEMOPROBE_ERROR_HPP_
