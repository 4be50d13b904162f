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

// memoprobe: perturb | run | analyze | report
//
// Exit codes: 0 success, 1 usage or configuration error, 2 partial run
// failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "memoprobe/http.hpp"
#include "memoprobe.hpp"

namespace fs = std::filesystem;

namespace memoprobe {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;

struct CommonFlags {
  std::vector<std::string> benchmarks;
  int levels = 5;
  std::uint64_t seed = 0;
  std::string out = "memoprobe_out";
  std::string provider_url;
  bool fallback_word_noise = false;
};

struct PerturbFlags {
  std::string kind;  // empty: choose per sample
};

struct RunFlags {
  std::vector<std::string> endpoints;
  int samples = 3;
  int repeats = 3;
  double temperature = 0.3;
  double top_p = 0.5;
  int max_tokens = 512;
  int max_concurrency = 4;
  double alpha = 0.05;
  std::string cache_dir;
  std::vector<std::string> graders;
  std::string nl_kind;
  std::string templates;
  std::string exec_cmd;
  int exec_timeout = 10;
};

struct AnalyzeFlags {
  std::string records;
  double alpha = 0.05;
  std::size_t min_cell = 5;
  bool pairwise = false;
  std::vector<std::string> category_a;
  std::vector<std::string> category_b;
};

std::vector<BenchmarkSample> LoadAll(const std::vector<std::string>& paths) {
  if (paths.empty()) throw Error(ErrorCode::kInvalidArgument, "--benchmark is required");
  std::vector<BenchmarkSample> all;
  std::set<std::string> ids;
  for (const auto& p : paths) {
    for (auto& s : load_benchmark(p)) {
      if (!ids.insert(s.benchmark + "\x1f" + s.id).second) {
        throw Error(ErrorCode::kValidation, "duplicate id \"" + s.id + "\" across benchmark files");
      }
      all.push_back(std::move(s));
    }
  }
  return all;
}

void WriteText(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot write " + path.string() + ": " + ec.message());
}

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

PerturbationKind ParseKindFlag(const std::string& name) {
  auto kind = ParsePerturbationKind(name);
  if (!kind) throw Error(ErrorCode::kInvalidArgument, "unknown perturbation kind \"" + name + "\"");
  return *kind;
}

std::unique_ptr<HttpParaphraseProvider> MakeProvider(const CommonFlags& common) {
  if (common.provider_url.empty()) return nullptr;
  return std::make_unique<HttpParaphraseProvider>(common.provider_url);
}

PerturbationKind DefaultNaturalLanguageKind(const CommonFlags& common) {
  if (!common.provider_url.empty()) return PerturbationKind::kParaphrase;
  if (common.fallback_word_noise) return PerturbationKind::kWordNoise;
  return PerturbationKind::kCharNoise;
}

void RequireProviderFor(PerturbationKind kind, const CommonFlags& common) {
  if (kind == PerturbationKind::kParaphrase && common.provider_url.empty() &&
      !common.fallback_word_noise) {
    throw Error(ErrorCode::kInvalidArgument,
                "paraphrase perturbation needs a paraphrase service: pass --provider-url "
                "http://host:port, or --fallback-word-noise to use word noise instead");
  }
}

int CmdPerturb(const CommonFlags& common, const PerturbFlags& flags) {
  const auto samples = LoadAll(common.benchmarks);
  std::optional<PerturbationKind> forced;
  if (!flags.kind.empty()) {
    forced = ParseKindFlag(flags.kind);
    RequireProviderFor(*forced, common);
  }
  auto provider = MakeProvider(common);
  PerturbOptions options;
  options.provider = provider.get();
  options.fallback_word_noise = common.fallback_word_noise;
  std::string out;
  for (const auto& s : samples) {
    const PerturbationKind kind =
        forced ? *forced
               : (s.input_kind == InputKind::kCode ? PerturbationKind::kIdentifierRename
                                                   : DefaultNaturalLanguageKind(common));
    const auto ladder = perturb_sample(s, kind, common.levels, RepeatSeed(common.seed, 0), options);
    Json j = LadderToJson(ladder);
    j["benchmark"] = s.benchmark;
    out += j.dump() + "\n";
  }
  EnsureDir(common.out);
  WriteText(fs::path(common.out) / "ladders.jsonl", out);
  std::cout << "wrote " << samples.size() << " ladders to "
            << (fs::path(common.out) / "ladders.jsonl").string() << "\n";
  return kExitOk;
}

void ApplyGraderFlags(const std::vector<std::string>& graders, EvaluationSettings& settings) {
  for (const auto& g : graders) {
    const auto eq = g.find('=');
    const std::string name = eq == std::string::npos ? g : g.substr(eq + 1);
    const auto kind = ParseGraderKind(name);
    if (!kind) throw Error(ErrorCode::kInvalidArgument, "unknown grader \"" + name + "\"");
    if (eq == std::string::npos) {
      settings.grader_override = *kind;
    } else {
      const auto task = ParseTaskKind(g.substr(0, eq));
      if (!task) throw Error(ErrorCode::kInvalidArgument, "unknown task in --grader " + g);
      settings.task_graders[*task] = *kind;
    }
  }
}

Json GraderMapJson(const EvaluationSettings& settings) {
  Json j = Json::object();
  for (TaskKind t : kAllTaskKinds) j[std::string(ToString(t))] = ToString(ResolveGrader(t, settings));
  return j;
}

int CmdRun(const CommonFlags& common, const RunFlags& flags) {
  const auto samples = LoadAll(common.benchmarks);
  if (flags.endpoints.empty()) throw Error(ErrorCode::kInvalidArgument, "--endpoint is required");

  EvaluationSettings settings;
  settings.run.pr_max = common.levels;
  settings.run.ans_max = flags.samples;
  settings.run.repeats = flags.repeats;
  settings.run.seed = common.seed;
  settings.run.max_concurrency = flags.max_concurrency;
  settings.run.Validate();
  settings.sampling.temperature = flags.temperature;
  settings.sampling.nucleus = flags.top_p;
  settings.sampling.max_tokens = flags.max_tokens;
  settings.sampling.Validate();
  if (!(flags.alpha > 0 && flags.alpha < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "--alpha must be in (0, 1)");
  }
  settings.natural_language_kind =
      flags.nl_kind.empty() ? DefaultNaturalLanguageKind(common) : ParseKindFlag(flags.nl_kind);
  if (settings.natural_language_kind == PerturbationKind::kIdentifierRename) {
    throw Error(ErrorCode::kInvalidArgument, "--nl-kind cannot be identifier_rename");
  }
  RequireProviderFor(settings.natural_language_kind, common);
  auto provider = MakeProvider(common);
  settings.perturb.provider = provider.get();
  settings.perturb.fallback_word_noise = common.fallback_word_noise;
  if (!flags.templates.empty()) {
    std::ifstream in(flags.templates);
    if (!in) throw Error(ErrorCode::kIo, "cannot open templates file " + flags.templates);
    try {
      settings.templates.Override(Json::parse(in));
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, "templates file " + flags.templates + ": " + e.what());
    }
  }
  ApplyGraderFlags(flags.graders, settings);
  std::optional<ExecutionGrader> runner;
  if (!flags.exec_cmd.empty()) {
    runner.emplace(flags.exec_cmd, flags.exec_timeout);
    settings.runner = &*runner;
  }
  for (TaskKind t : kAllTaskKinds) {
    if (ResolveGrader(t, settings) == GraderKind::kExecution && !runner) {
      throw Error(ErrorCode::kInvalidArgument, "execution grading needs --exec-cmd");
    }
  }

  std::vector<ModelEndpoint> endpoints;
  const char* token = std::getenv("MEMOPROBE_API_TOKEN");
  for (const auto& spec : flags.endpoints) {
    auto ep = ParseEndpointSpec(spec);
    if (!ep.is_mock() && token != nullptr && *token != '\0') ep.auth_token = token;
    endpoints.push_back(std::move(ep));
  }

  const fs::path out_dir = common.out;
  EnsureDir(out_dir);
  const fs::path cache_dir = flags.cache_dir.empty() ? out_dir / "cache" : fs::path(flags.cache_dir);
  auto cache = std::make_shared<ResponseCache>(cache_dir);
  ModelClient client(cache);
  RegisterEndpoints(client, endpoints, samples, settings, MakeHttpBackend);

  Json meta;
  meta["schema"] = kRecordSchemaVersion;
  meta["levels"] = settings.run.pr_max;
  meta["samples"] = settings.run.ans_max;
  meta["repeats"] = settings.run.repeats;
  meta["seed"] = settings.run.seed;
  meta["temperature"] = settings.sampling.temperature;
  meta["nucleus"] = settings.sampling.nucleus;
  meta["sampling_parameter"] = "nucleus is sent as top_p";
  meta["max_tokens"] = settings.sampling.max_tokens;
  meta["alpha"] = flags.alpha;
  meta["max_concurrency"] = settings.run.max_concurrency;
  meta["natural_language_kind"] = ToString(settings.natural_language_kind);
  meta["code_kind"] = ToString(PerturbationKind::kIdentifierRename);
  meta["char_noise_rate_per_level"] = 0.02;
  meta["paraphrase_candidates_per_level"] = kParaphraseOversampling;
  meta["provider_url"] = common.provider_url;
  meta["fallback_word_noise"] = common.fallback_word_noise;
  meta["graders"] = GraderMapJson(settings);
  meta["exec_cmd"] = flags.exec_cmd;
  meta["exec_timeout"] = flags.exec_timeout;
  meta["templates"] = settings.templates.ToJson();
  meta["benchmarks"] = common.benchmarks;
  Json eps = Json::array();
  for (const auto& ep : endpoints) {
    eps.push_back({{"name", ep.name}, {"base_url", ep.base_url}, {"model_id", ep.model_id},
                   {"max_concurrency", ep.max_concurrency}, {"auth", ep.auth_token.has_value()}});
  }
  meta["endpoints"] = std::move(eps);
  meta["cache_dir"] = cache_dir.string();
  meta["out"] = out_dir.string();
  WriteText(out_dir / "run_meta.json", meta.dump(2) + "\n");

  const RunResult result = run_benchmark(samples, endpoints, settings, client);
  WriteText(out_dir / "records.jsonl", SerializeRecords(result.records));
  std::cout << "records: " << result.records.size() << "  backend calls: " << client.backend_calls()
            << "  cache hits: " << client.cache_hits() << "\n";
  if (!result.ok()) {
    std::string failures;
    for (const auto& f : result.failures) {
      failures += Json{{"sample_id", f.sample_id}, {"model", f.model}, {"error", f.message}}.dump() + "\n";
      std::cerr << "failed: " << f.message << "\n";
    }
    WriteText(out_dir / "failures.jsonl", failures);
    std::cerr << result.failures.size() << " of " << samples.size() * endpoints.size()
              << " evaluations failed\n";
    return kExitPartial;
  }
  std::error_code ec;
  fs::remove(out_dir / "failures.jsonl", ec);
  return kExitOk;
}

fs::path RecordsPath(const CommonFlags& common, const AnalyzeFlags& flags) {
  return flags.records.empty() ? fs::path(common.out) / "records.jsonl" : fs::path(flags.records);
}

Json RunMetadataNextTo(const fs::path& records) {
  std::ifstream in(records.parent_path() / "run_meta.json");
  if (!in) return nullptr;
  try {
    return Json::parse(in);
  } catch (const Json::parse_error&) {
    return nullptr;
  }
}

ReportOptions MakeReportOptions(const AnalyzeFlags& flags) {
  if (!(flags.alpha > 0 && flags.alpha < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "--alpha must be in (0, 1)");
  }
  ReportOptions options;
  options.advantage.alpha = flags.alpha;
  options.advantage.min_cell = flags.min_cell;
  options.advantage.pairwise = flags.pairwise;
  return options;
}

std::vector<SensitivityRecord> LoadNonEmpty(const fs::path& path) {
  auto records = LoadRecords(path.string());
  if (records.empty()) throw Error(ErrorCode::kPrecondition, "no records in " + path.string());
  return records;
}

int CmdAnalyze(const CommonFlags& common, const AnalyzeFlags& flags) {
  const fs::path records_path = RecordsPath(common, flags);
  const auto records = LoadNonEmpty(records_path);
  const auto matrix = MatrixFromRecords(records);
  if (matrix.Benchmarks().size() < 2) {
    throw Error(ErrorCode::kPrecondition,
                "\xE2\x89\xA5 2 benchmarks required for analysis, found " +
                    std::to_string(matrix.Benchmarks().size()));
  }
  const auto bundle = summarize(records, MakeReportOptions(flags), RunMetadataNextTo(records_path));
  Json analysis;
  analysis["metadata"] = bundle.metadata;
  Json findings = Json::array();
  for (const auto& f : bundle.findings) findings.push_back(FindingToJson(f));
  analysis["findings"] = std::move(findings);
  analysis["correlation"] = bundle.correlation ? CorrelationToJson(*bundle.correlation) : Json(nullptr);
  if (!flags.category_a.empty() || !flags.category_b.empty()) {
    if (flags.category_a.empty() || flags.category_b.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--category-a and --category-b go together");
    }
    const auto cmp = category_comparison(matrix, flags.category_a, flags.category_b);
    analysis["category_comparison"] = {
        {"category_a", flags.category_a},
        {"category_b", flags.category_b},
        {"pairing", "per-model median sensitivity"},
        {"models", cmp.models},
        {"medians_a", cmp.medians_a},
        {"medians_b", cmp.medians_b},
        {"t", cmp.test.statistic},
        {"p_value", cmp.test.p_value}};
  }
  analysis["notes"] = bundle.notes;
  const fs::path out_dir = common.out;
  EnsureDir(out_dir);
  write_findings_jsonl(bundle.findings, out_dir / "findings.jsonl");
  WriteText(out_dir / "analysis.json", analysis.dump(2) + "\n");
  std::size_t flagged = 0;
  for (const auto& f : bundle.findings) {
    if (!f.flagged) continue;
    ++flagged;
    std::cout << "FLAG " << ToString(f.scope) << " " << f.context << " / " << f.subject << ": "
              << ToString(f.direction) << " (" << Interpretation(f.direction)
              << "), adjusted p = " << f.adjusted_p << "\n";
  }
  std::cout << flagged << " of " << bundle.findings.size() << " tests flagged at alpha "
            << flags.alpha << "\n";
  return kExitOk;
}

int CmdReport(const CommonFlags& common, const AnalyzeFlags& flags) {
  const fs::path records_path = RecordsPath(common, flags);
  const auto records = LoadNonEmpty(records_path);
  const auto bundle = summarize(records, MakeReportOptions(flags), RunMetadataNextTo(records_path));
  write_report(bundle, common.out);
  std::cout << "wrote report for " << bundle.rows.size() << " (model, benchmark) cells to "
            << common.out << "\n";
  return kExitOk;
}

// Config files hold plain `key = value` lines that apply to whichever
// subcommand runs, plus optional [perturb]/[run]/[analyze]/[report] sections
// that take precedence over the plain keys.
class SharedKeysConfig : public CLI::ConfigTOML {
 public:
  explicit SharedKeysConfig(std::vector<std::string> subcommands)
      : subcommands_(std::move(subcommands)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> out;
    std::vector<CLI::ConfigItem> shared;
    for (auto& item : CLI::ConfigTOML::from_config(input)) {
      if (item.parents.empty() && item.name != "++" && item.name != "--") {
        shared.push_back(std::move(item));
      } else {
        out.push_back(std::move(item));
      }
    }
    for (const auto& item : shared) {
      for (const auto& sub : subcommands_) {
        CLI::ConfigItem copy = item;
        copy.parents = {sub};
        out.push_back(std::move(copy));
      }
    }
    return out;
  }

 private:
  std::vector<std::string> subcommands_;
};

void AddCommon(CLI::App* cmd, CommonFlags& common, bool with_benchmark) {
  if (with_benchmark) {
    cmd->add_option("--benchmark", common.benchmarks, "Benchmark file (JSONL); repeatable");
    cmd->add_option("--levels", common.levels, "Perturbation levels above the original")
        ->capture_default_str();
    cmd->add_option("--seed", common.seed, "Seed for every stochastic choice")->capture_default_str();
    cmd->add_option("--provider-url", common.provider_url, "Paraphrase service base URL");
    cmd->add_flag("--fallback-word-noise", common.fallback_word_noise,
                  "Use word noise when no paraphrase service is configured");
  }
  cmd->add_option("--out", common.out, "Output directory")->capture_default_str();
}

void AddAnalyzeFlags(CLI::App* cmd, AnalyzeFlags& flags) {
  cmd->add_option("--records", flags.records, "records.jsonl (default: <out>/records.jsonl)");
  cmd->add_option("--alpha", flags.alpha, "Family-wise significance level")->capture_default_str();
  cmd->add_option("--min-cell", flags.min_cell, "Smallest cell that gets tested")
      ->capture_default_str();
  cmd->add_flag("--pairwise", flags.pairwise, "Compare subjects pairwise instead of vs. the pooled rest");
}

int Main(int argc, char** argv) {
  CLI::App app{"memoprobe: memorization advantage via perturbation sensitivity"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; flags override it");
  app.config_formatter(std::make_shared<SharedKeysConfig>(
      std::vector<std::string>{"perturb", "run", "analyze", "report"}));
  // Lets --config appear after the subcommand name too.
  app.fallthrough();
  // One file serves all four subcommands, so keys a subcommand lacks are skipped.
  app.allow_config_extras(CLI::config_extras_mode::ignore);

  // Separate storage per subcommand: shared config keys reach all of them.
  CommonFlags perturb_common, run_common, analyze_common, report_common;
  PerturbFlags perturb_flags;
  RunFlags run_flags;
  AnalyzeFlags analyze_flags, report_flags;

  auto* perturb = app.add_subcommand("perturb", "Write perturbation ladders for inspection");
  AddCommon(perturb, perturb_common, true);
  perturb->add_option("--kind", perturb_flags.kind,
                      "identifier_rename | char_noise | word_noise | paraphrase");

  auto* run = app.add_subcommand("run", "Evaluate sensitivity records");
  AddCommon(run, run_common, true);
  run->add_option("--endpoint", run_flags.endpoints,
                  "[name=]URL,model=ID[,concurrency=N] or mock:memorizer / mock:generalizer; repeatable");
  run->add_option("--samples", run_flags.samples, "Answers per prompt")->capture_default_str();
  run->add_option("--repeats", run_flags.repeats, "Pipeline repetitions")->capture_default_str();
  run->add_option("--temperature", run_flags.temperature)->capture_default_str();
  run->add_option("--top-p", run_flags.top_p, "Nucleus sampling mass")->capture_default_str();
  run->add_option("--max-tokens", run_flags.max_tokens)->capture_default_str();
  run->add_option("--max-concurrency", run_flags.max_concurrency, "Worker threads")
      ->capture_default_str();
  run->add_option("--alpha", run_flags.alpha, "Recorded for the analysis step")->capture_default_str();
  run->add_option("--cache-dir", run_flags.cache_dir, "Response cache (default: <out>/cache)");
  run->add_option("--grader", run_flags.graders, "GRADER or TASK=GRADER; repeatable");
  run->add_option("--nl-kind", run_flags.nl_kind, "Perturbation for natural-language inputs");
  run->add_option("--templates", run_flags.templates, "JSON object: task -> prompt template");
  run->add_option("--exec-cmd", run_flags.exec_cmd,
                  "Execution grader command; placeholders {candidate} {test_cmd} {expect}");
  run->add_option("--exec-timeout", run_flags.exec_timeout, "Seconds per test")->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "Detect benchmark and model advantages");
  AddCommon(analyze, analyze_common, false);
  AddAnalyzeFlags(analyze, analyze_flags);
  analyze->add_option("--category-a", analyze_flags.category_a, "Benchmarks in category A");
  analyze->add_option("--category-b", analyze_flags.category_b, "Benchmarks in category B");

  auto* report = app.add_subcommand("report", "Write report.csv, summary.json, findings and SVGs");
  AddCommon(report, report_common, false);
  AddAnalyzeFlags(report, report_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*perturb) return CmdPerturb(perturb_common, perturb_flags);
    if (*run) return CmdRun(run_common, run_flags);
    if (*analyze) return CmdAnalyze(analyze_common, analyze_flags);
    if (*report) return CmdReport(report_common, report_flags);
  } catch (const Error& e) {
    std::cerr << "memoprobe: " << e.what() << "\n";
    if (!e.payload().empty()) std::cerr << "payload: " << e.payload() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "memoprobe: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace
}  // namespace memoprobe

int main(int argc, char** argv) { return memoprobe::Main(argc, argv); }
