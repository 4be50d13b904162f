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

// Per-sample sensitivity evaluation and the batch driver around it.
//
// For one sample and one model: build the perturbation ladder, prompt the
// model ans_max times per level, grade each level, and take the largest drop
// in mean score between consecutive levels. This is repeated `repeats` times
// with independent perturbation seeds and the per-repeat values averaged.

#ifndef MEMOPROBE_SENSITIVITY_HPP_
#define MEMOPROBE_SENSITIVITY_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "memoprobe/datamodel.hpp"
#include "memoprobe/error.hpp"
#include "memoprobe/grading.hpp"
#include "memoprobe/mock_models.hpp"
#include "memoprobe/modelclient.hpp"
#include "memoprobe/perturbation.hpp"
#include "memoprobe/util.hpp"

namespace memoprobe {

inline constexpr int kRecordSchemaVersion = 1;

// Largest score drop between consecutive levels. Negative when the score
// rises at every step; not clamped.
inline double sensitivity_from_perf(std::span<const double> series) {
  if (series.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "sensitivity needs at least two levels");
  }
  double best = series[0] - series[1];
  for (std::size_t k = 1; k + 1 < series.size(); ++k) best = std::max(best, series[k] - series[k + 1]);
  return best;
}

struct PerfSeries {
  std::string sample_id;
  std::vector<double> scores;  // one per level, pr_max + 1 entries
};

struct SensitivityRecord {
  std::string sample_id;
  std::string benchmark;
  TaskKind task = TaskKind::kCodeGeneration;
  std::string model;
  PerturbationKind kind = PerturbationKind::kCharNoise;
  std::vector<double> sensitivities;  // one per repeat
  double mean_sensitivity = 0;
  std::vector<std::vector<double>> perf_series;  // one series per repeat

  bool operator==(const SensitivityRecord&) const = default;
};

inline Json RecordToJson(const SensitivityRecord& r) {
  Json j;
  j["schema"] = kRecordSchemaVersion;
  j["sample_id"] = r.sample_id;
  j["benchmark"] = r.benchmark;
  j["task"] = ToString(r.task);
  j["model"] = r.model;
  j["kind"] = ToString(r.kind);
  j["sensitivities"] = r.sensitivities;
  j["mean_sensitivity"] = r.mean_sensitivity;
  j["perf_series"] = r.perf_series;
  return j;
}

inline SensitivityRecord RecordFromJson(const Json& j) {
  try {
    if (j.at("schema").get<int>() != kRecordSchemaVersion) {
      throw Error(ErrorCode::kParse, "unsupported record schema " + j.at("schema").dump());
    }
    SensitivityRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.benchmark = j.at("benchmark").get<std::string>();
    const auto task = ParseTaskKind(j.at("task").get<std::string>());
    if (!task) throw Error(ErrorCode::kParse, "unknown task " + j.at("task").dump());
    r.task = *task;
    r.model = j.at("model").get<std::string>();
    const auto kind = ParsePerturbationKind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kParse, "unknown perturbation kind " + j.at("kind").dump());
    r.kind = *kind;
    r.sensitivities = j.at("sensitivities").get<std::vector<double>>();
    r.mean_sensitivity = j.at("mean_sensitivity").get<double>();
    r.perf_series = j.at("perf_series").get<std::vector<std::vector<double>>>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed sensitivity record: ") + e.what());
  }
}

inline std::string SerializeRecords(const std::vector<SensitivityRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += RecordToJson(r).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<SensitivityRecord> ParseRecords(std::istream& in, const std::string& origin) {
  std::vector<SensitivityRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(RecordFromJson(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, origin + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

inline std::vector<SensitivityRecord> LoadRecords(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open records file " + path);
  return ParseRecords(in, path);
}

// ---------------------------------------------------------------------------

struct EvaluationSettings {
  RunConfig run;
  SamplingConfig sampling;
  TemplateSet templates;
  // Ladder kind for natural-language inputs; code always uses identifier_rename.
  PerturbationKind natural_language_kind = PerturbationKind::kCharNoise;
  PerturbOptions perturb;
  std::optional<GraderKind> grader_override;
  std::map<TaskKind, GraderKind> task_graders;
  const ExecutionGrader* runner = nullptr;
};

inline PerturbationKind ResolveKind(const BenchmarkSample& sample, const EvaluationSettings& s) {
  return sample.input_kind == InputKind::kCode ? PerturbationKind::kIdentifierRename
                                               : s.natural_language_kind;
}

inline GraderKind ResolveGrader(TaskKind task, const EvaluationSettings& s) {
  if (s.grader_override) return *s.grader_override;
  if (auto it = s.task_graders.find(task); it != s.task_graders.end()) return it->second;
  return DefaultGrader(task);
}

inline std::uint64_t RepeatSeed(std::uint64_t seed, int repeat_index) {
  return MixSeed(seed, static_cast<std::uint64_t>(repeat_index));
}

inline SensitivityRecord evaluate_sample(const BenchmarkSample& sample,
                                         const ModelEndpoint& endpoint,
                                         const EvaluationSettings& settings, ModelClient& client) {
  const auto violations = validate_sample(sample);
  if (!violations.ok()) {
    throw Error(ErrorCode::kValidation, "sample \"" + sample.id + "\": " + violations.violations.front());
  }
  const RunConfig& cfg = settings.run;
  cfg.Validate();
  const PromptTemplate& tmpl = settings.templates.For(sample.task);
  GradingContext grading;
  grading.grader = ResolveGrader(sample.task, settings);
  grading.language = sample.language;
  grading.runner = settings.runner;
  grading.tests = sample.tests;

  SensitivityRecord record;
  record.sample_id = sample.id;
  record.benchmark = sample.benchmark;
  record.task = sample.task;
  record.model = endpoint.name;
  record.kind = ResolveKind(sample, settings);
  try {
    for (int r = 0; r < cfg.repeats; ++r) {
      const auto ladder =
          perturb_sample(sample, record.kind, cfg.pr_max, RepeatSeed(cfg.seed, r), settings.perturb);
      record.kind = ladder.kind;
      std::vector<double> series;
      series.reserve(ladder.levels.size());
      for (std::size_t k = 0; k < ladder.levels.size(); ++k) {
        const auto outputs = client.Complete(endpoint, tmpl.Render(ladder.levels[k]),
                                             settings.sampling, cfg.ans_max, r);
        series.push_back(perf(outputs.outputs, sample.reference, grading));
      }
      record.sensitivities.push_back(sensitivity_from_perf(series));
      record.perf_series.push_back(std::move(series));
    }
  } catch (const Error& e) {
    throw Error(e.code(), "sample \"" + sample.id + "\" on " + endpoint.name + ": " + e.what(),
                e.payload());
  }
  record.mean_sensitivity =
      std::accumulate(record.sensitivities.begin(), record.sensitivities.end(), 0.0) /
      static_cast<double>(record.sensitivities.size());
  return record;
}

// Entries a mock endpoint knows: every sample's unperturbed rendered prompt.
inline std::vector<MockEntry> MockEntriesFor(const std::vector<BenchmarkSample>& samples,
                                             const EvaluationSettings& settings) {
  std::vector<MockEntry> entries;
  entries.reserve(samples.size());
  for (const auto& s : samples) {
    entries.push_back({settings.templates.For(s.task).Render(s.input), s.reference,
                       ResolveGrader(s.task, settings), s.language});
  }
  return entries;
}

using BackendFactory = std::function<std::unique_ptr<CompletionBackend>(const ModelEndpoint&)>;

// Registers every endpoint with the client: mocks are built over `samples`,
// everything else goes through `live_factory`.
inline void RegisterEndpoints(ModelClient& client, const std::vector<ModelEndpoint>& endpoints,
                              const std::vector<BenchmarkSample>& samples,
                              const EvaluationSettings& settings,
                              const BackendFactory& live_factory = nullptr) {
  for (const auto& ep : endpoints) {
    if (ep.is_mock()) {
      client.AddEndpoint(ep, MakeMockBackend(ep, MockEntriesFor(samples, settings)));
    } else {
      if (!live_factory) {
        throw Error(ErrorCode::kInvalidArgument, "no live backend available for " + ep.name);
      }
      client.AddEndpoint(ep, live_factory(ep));
    }
  }
}

struct SampleFailure {
  std::string sample_id;
  std::string model;
  std::string message;
};

struct RunResult {
  std::vector<SensitivityRecord> records;  // sample order x endpoint order
  std::vector<SampleFailure> failures;

  bool ok() const { return failures.empty(); }
};

inline RunResult run_benchmark(const std::vector<BenchmarkSample>& samples,
                               const std::vector<ModelEndpoint>& endpoints,
                               const EvaluationSettings& settings, ModelClient& client) {
  settings.run.Validate();
  settings.sampling.Validate();
  std::set<std::string> names;
  for (const auto& ep : endpoints) {
    if (!names.insert(ep.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate endpoint name \"" + ep.name + "\"");
    }
  }
  const std::size_t total = samples.size() * endpoints.size();
  std::vector<std::optional<SensitivityRecord>> slots(total);
  std::vector<std::optional<SampleFailure>> failures(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const auto& sample = samples[i / endpoints.size()];
      const auto& ep = endpoints[i % endpoints.size()];
      try {
        slots[i] = evaluate_sample(sample, ep, settings, client);
      } catch (const Error& e) {
        failures[i] = SampleFailure{sample.id, ep.name, e.what()};
      } catch (const std::exception& e) {
        failures[i] = SampleFailure{sample.id, ep.name, e.what()};
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(total, static_cast<std::size_t>(settings.run.max_concurrency));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  RunResult result;
  for (std::size_t i = 0; i < total; ++i) {
    if (slots[i]) result.records.push_back(std::move(*slots[i]));
    if (failures[i]) result.failures.push_back(std::move(*failures[i]));
  }
  return result;
}

}  // namespace memoprobe

#endif  // MEMOPROBE_SENSITIVITY_HPP_
