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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <regex>
#include <sstream>

#include "memoprobe.hpp"
#include "test_support.hpp"

namespace memoprobe {
namespace {

namespace fs = std::filesystem;
using testing::Cli;
using testing::DataPath;
using testing::FixturePath;
using testing::Quote;
using testing::ReadFile;
using testing::RunCommand;
using testing::TempDir;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void Check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// ---------------------------------------------------------------------------
// 1. Mock separation

std::string Letters(std::size_t v, std::size_t width) {
  std::string s(width, 'a');
  for (std::size_t i = width; i-- > 0; v /= 26) s[i] = static_cast<char>('a' + v % 26);
  return s;
}

// Five renamable names plus five comment words, each used once: the bag has
// squared norm 10 and renaming k names moves it by exactly k / 10.
BenchmarkSample SyntheticSample(std::size_t i) {
  std::vector<std::string> w;
  for (std::size_t j = 0; j < 10; ++j) w.push_back("zq" + Letters(i * 10 + j, 4));
  BenchmarkSample s;
  s.id = "synthetic/" + std::to_string(i);
  s.benchmark = "synthetic";
  s.task = TaskKind::kProgramRepair;
  s.input_kind = InputKind::kCode;
  s.language = "python";
  s.input = w[0] + " = " + w[1] + " + " + w[2] + " - " + w[3] + " * " + w[4] + "  # " + w[5] + " " +
            w[6] + " " + w[7] + " " + w[8] + " " + w[9] + "\n";
  const std::string k = std::to_string(i);
  s.reference = "def accumulate_" + k + "(values, limit):\n"
                "    total = 0\n"
                "    for index, value in enumerate(values):\n"
                "        if value > limit and index % " + std::to_string(i % 7 + 2) + " == 0:\n"
                "            total += value * " + std::to_string(i + 3) + "\n"
                "        elif value < -limit:\n"
                "            total -= value // 2\n"
                "    return total + " + k + "\n";
  return s;
}

Outcome MockSeparation() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  std::vector<BenchmarkSample> samples;
  for (std::size_t i = 0; i < 50; ++i) samples.push_back(SyntheticSample(i));
  EvaluationSettings settings;
  settings.templates = TemplateSet::Uniform("{input}");
  settings.run.max_concurrency = 1;
  // decay 0.5 on bow distances k / 10 lowers the expected score 0.05 per level
  const std::vector<ModelEndpoint> eps = {ParseEndpointSpec("mock:memorizer?radius=0"),
                                          ParseEndpointSpec("mock:generalizer?decay=0.5")};
  ModelClient client;
  // No live factory: any non-mock endpoint would throw instead of touching the network.
  RegisterEndpoints(client, eps, samples, settings);
  const auto result = run_benchmark(samples, eps, settings, client);
  o.Check(result.ok(), "all evaluations succeed");

  std::vector<double> mem, gen;
  bool single_drop = true;
  for (const auto& r : result.records) {
    if (r.model == eps[0].name) {
      mem.push_back(r.mean_sensitivity);
      for (const auto& series : r.perf_series) {
        std::size_t big = 0;
        for (std::size_t k = 0; k + 1 < series.size(); ++k) big += series[k] - series[k + 1] >= 0.8;
        single_drop = single_drop && big == 1;
      }
    } else {
      gen.push_back(r.mean_sensitivity);
    }
  }
  const double mem_median = stats::Median(mem);
  const double gen_median = stats::Median(gen);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.detail << "memorizer median " << mem_median << ", generalizer median " << gen_median << ", "
           << seconds << " s";
  o.Check(mem.size() == 50 && gen.size() == 50, "50 records per model");
  o.Check(mem_median >= 0.85, "memorizer median >= 0.85");
  o.Check(single_drop, "memorizer series have a single drop >= 0.8");
  o.Check(std::fabs(gen_median - 0.05) <= 0.04, "generalizer median 0.05 +- 0.04");
  o.Check(seconds < 60, "runtime < 60 s");
  return o;
}

// ---------------------------------------------------------------------------
// 2. Statistics oracle

double PairCountU(const std::vector<double>& x, const std::vector<double>& y) {
  double u = 0;
  for (double a : x) {
    for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return u;
}

double PermutationP(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  const std::size_t n = pooled.size();
  const double center = static_cast<double>(x.size() * y.size()) / 2.0;
  const double observed = std::fabs(PairCountU(x, y) - center);
  long long extreme = 0, all = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != x.size()) continue;
    std::vector<double> a, b;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? a : b).push_back(pooled[i]);
    ++all;
    if (std::fabs(PairCountU(a, b) - center) >= observed) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(all);
}

Outcome StatsOracle() {
  Outcome o;
  DeterministicRng rng(20260101);
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(1 + rng.Below(8)), y(1 + rng.Below(8));
    for (auto* g : {&x, &y}) {
      for (auto& v : *g) v = t % 2 ? static_cast<double>(rng.Below(5)) : rng.Uniform();
    }
    worst = std::max(worst, std::fabs(stats::mann_whitney_u(x, y).p_value - PermutationP(x, y)));
  }
  const auto kw = stats::kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  const auto bonf = stats::bonferroni(std::vector<double>(5, 0.01));
  o.detail << "max |p - enumeration| " << worst << ", H " << kw.statistic;
  o.Check(worst <= 1e-12, "exact MWU matches enumeration to 1e-12");
  o.Check(std::fabs(kw.statistic - 7.2) <= 1e-9, "H = 7.2");
  o.Check(bonf == std::vector<double>(5, 0.05), "bonferroni exact");
  return o;
}

// ---------------------------------------------------------------------------
// 3. Sensitivity invariances

Outcome SensitivityInvariance() {
  Outcome o;
  DeterministicRng rng(33);
  double worst_shift = 0, worst_scale = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> s(2 + rng.Below(10));
    for (auto& v : s) v = rng.Uniform();
    const double base = sensitivity_from_perf(s);
    const double c = rng.Uniform(-5, 5);
    const double a = rng.Uniform(0.01, 50);
    auto shifted = s, scaled = s;
    for (auto& v : shifted) v += c;
    for (auto& v : scaled) v *= a;
    worst_shift = std::max(worst_shift, std::fabs(sensitivity_from_perf(shifted) - base));
    worst_scale = std::max(worst_scale, std::fabs(sensitivity_from_perf(scaled) - a * base) / a);
  }
  o.detail << "max shift error " << worst_shift << ", max relative scale error " << worst_scale;
  o.Check(worst_shift < 1e-12, "translation invariance");
  o.Check(worst_scale < 1e-12, "positive scaling homogeneity");
  return o;
}

// ---------------------------------------------------------------------------
// 4. Perturbation determinism and monotonicity

Outcome PerturbationChecks() {
  Outcome o;
  TempDir a, b;
  const std::string args = " --benchmark " + Quote(DataPath("mini_humaneval.jsonl").string()) +
                           " --benchmark " + Quote(DataPath("mini_quixbugs.jsonl").string()) +
                           " --benchmark " + Quote(DataPath("mini_codesearchnet_java.jsonl").string()) +
                           " --seed 2024 --fallback-word-noise --out ";
  const auto ra = RunCommand(Cli() + " perturb" + args + Quote(a.path()));
  const auto rb = RunCommand(Cli() + " perturb" + args + Quote(b.path()));
  const bool identical = ra.exit_code == 0 && rb.exit_code == 0 &&
                         !ReadFile(a / "ladders.jsonl").empty() &&
                         ReadFile(a / "ladders.jsonl") == ReadFile(b / "ladders.jsonl");
  o.Check(identical, "byte-identical ladders across processes");

  DeterministicRng rng(4);
  std::size_t count_mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    std::u32string cps;
    const auto len = 1 + rng.Below(500);
    for (std::uint64_t i = 0; i < len; ++i) {
      cps.push_back(rng.Below(8) == 0 ? static_cast<char32_t>(0x3B1 + rng.Below(24))
                                      : static_cast<char32_t>(0x20 + rng.Below(95)));
    }
    const std::string text = EncodeUtf8(cps);
    const auto ladder = perturb(text, PerturbationKind::kCharNoise, 5, rng.Next(), "text");
    for (std::size_t k = 0; k <= 5; ++k) {
      const auto got = DecodeUtf8(ladder.levels[k]);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < std::min(got.size(), cps.size()); ++i) changed += got[i] != cps[i];
      // ceil(0.02 k len) in integer arithmetic
      const std::size_t want = (2 * k * len + 99) / 100;
      count_mismatches += got.size() != cps.size() || changed != want;
    }
  }
  o.Check(count_mismatches == 0, "char_noise counts equal ceil(0.02 k len)");

  std::size_t files = 0, rename_violations = 0;
  const std::map<std::string, std::string> by_ext = {{".py", "python"}, {".java", "java"}, {".c", "c"},
                                                     {".cpp", "cpp"},   {".js", "javascript"}, {".go", "go"}};
  for (const auto& e : fs::directory_iterator(FixturePath("lexer"))) {
    if (!e.is_regular_file()) continue;
    const auto lang = by_ext.find(e.path().extension().string());
    if (lang == by_ext.end()) continue;
    ++files;
    const std::string source = ReadFile(e.path());
    const auto original = tokenize_code(source, lang->second);
    const auto ladder = perturb(source, PerturbationKind::kIdentifierRename, 5, 7, lang->second);
    for (const auto& level : ladder.levels) {
      const auto renamed = tokenize_code(level, lang->second);
      if (renamed.size() != original.size()) {
        ++rename_violations;
        continue;
      }
      for (std::size_t i = 0; i < original.size(); ++i) {
        if (renamed[i].kind != original[i].kind) ++rename_violations;
        if (original[i].kind != TokenKind::kIdentifier && renamed[i].text != original[i].text) {
          ++rename_violations;
        }
      }
    }
  }
  o.detail << "ladders identical " << (identical ? "yes" : "no") << ", char_noise mismatches "
           << count_mismatches << ", rename violations " << rename_violations << " over " << files
           << " corpus files";
  o.Check(files >= 6 && rename_violations == 0, "renaming preserves kinds and non-identifier bytes");
  return o;
}

// ---------------------------------------------------------------------------
// 5. Detector power and false positives

Outcome DetectorPowerAndFpr() {
  Outcome o;
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    DeterministicRng rng(MixSeed(51, static_cast<std::uint64_t>(trial)));
    SensitivityMatrix m;
    for (int i = 0; i < 30; ++i) m.Add("model", "planted", rng.Uniform(0.6, 0.8));
    for (const char* b : {"clean_a", "clean_b", "clean_c"}) {
      for (int i = 0; i < 30; ++i) m.Add("model", b, rng.Uniform(0.1, 0.3));
    }
    for (const auto& f : benchmark_advantage("model", m).Flagged()) {
      hits += f.subject == "planted" && f.direction == Direction::kHigher;
    }
  }
  int false_families = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    DeterministicRng rng(MixSeed(52, static_cast<std::uint64_t>(trial)));
    SensitivityMatrix m;
    for (const char* b : {"b1", "b2", "b3", "b4"}) {
      for (int i = 0; i < 30; ++i) m.Add("model", b, rng.Uniform(0.1, 0.3));
    }
    false_families += !benchmark_advantage("model", m).Flagged().empty();
  }
  o.detail << "planted flagged in " << hits << "/100, null family-wise flags " << false_families
           << "/1000";
  o.Check(hits >= 90, "power");
  o.Check(false_families <= 70, "family-wise false positive rate");
  return o;
}

// ---------------------------------------------------------------------------
// 6. Replay and 7. default metadata

std::string RunArgs() {
  return " --benchmark " + Quote(DataPath("mini_humaneval.jsonl").string()) + " --benchmark " +
         Quote(DataPath("mini_cvefixes.jsonl").string()) +
         " --endpoint mock:memorizer --endpoint mock:generalizer";
}

Outcome WarmReplay() {
  Outcome o;
  TempDir cold, warm, cache;
  const std::string base = Cli() + " run" + RunArgs() + " --cache-dir " + Quote(cache.path()) + " --out ";
  const auto first = RunCommand(base + Quote(cold.path()));
  const auto second = RunCommand(base + Quote(warm.path()));
  o.Check(first.exit_code == 0 && second.exit_code == 0, "both runs succeed");
  for (const auto* dir : {&cold, &warm}) {
    const auto r = RunCommand(Cli() + " report --out " + Quote(dir->path()));
    o.Check(r.exit_code == 0, "report succeeds");
  }
  std::smatch calls;
  const bool zero_calls = std::regex_search(second.output, calls, std::regex("backend calls: (\\d+)")) &&
                          calls[1] == "0";
  o.Check(zero_calls, "warm rerun makes zero backend calls");
  std::size_t compared = 0, differing = 0;
  std::vector<std::string> names = {"records.jsonl", "report.csv"};
  for (const auto& e : fs::directory_iterator(cold.path())) {
    if (e.path().extension() == ".svg") names.push_back(e.path().filename().string());
  }
  for (const auto& name : names) {
    ++compared;
    if (!fs::exists(warm / name) || ReadFile(cold / name) != ReadFile(warm / name)) ++differing;
  }
  o.detail << compared << " artifacts compared, " << differing << " differ, warm backend calls "
           << (zero_calls ? "0" : "nonzero");
  o.Check(names.size() >= 4 && differing == 0, "artifacts byte-identical");
  return o;
}

Outcome DefaultMetadata() {
  Outcome o;
  TempDir dir;
  const auto r = RunCommand(Cli() + " run" + RunArgs() + " --out " + Quote(dir.path()));
  o.Check(r.exit_code == 0, "run succeeds");
  Json meta;
  try {
    meta = Json::parse(ReadFile(dir / "run_meta.json"));
  } catch (const std::exception&) {
    o.Check(false, "run_meta.json readable");
    return o;
  }
  o.detail << "levels " << meta.value("levels", -1) << ", samples " << meta.value("samples", -1)
           << ", repeats " << meta.value("repeats", -1) << ", temperature " << meta.value("temperature", -1.0)
           << ", nucleus " << meta.value("nucleus", -1.0) << ", alpha " << meta.value("alpha", -1.0);
  o.Check(meta.value("levels", -1) == 5 && meta.value("samples", -1) == 3 && meta.value("repeats", -1) == 3,
          "levels/samples/repeats");
  o.Check(meta.value("temperature", -1.0) == 0.3 && meta.value("nucleus", -1.0) == 0.5 &&
              meta.value("alpha", -1.0) == 0.05,
          "temperature/nucleus/alpha");
  return o;
}

}  // namespace
}  // namespace memoprobe

int main() {
  using memoprobe::Outcome;
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "mock separation", memoprobe::MockSeparation},
      {2, "statistics oracle", memoprobe::StatsOracle},
      {3, "sensitivity invariances", memoprobe::SensitivityInvariance},
      {4, "perturbation determinism and monotonicity", memoprobe::PerturbationChecks},
      {5, "detector power and false positive rate", memoprobe::DetectorPowerAndFpr},
      {6, "warm-cache replay", memoprobe::WarmReplay},
      {7, "default run metadata", memoprobe::DefaultMetadata},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): "
              << o.detail.str() << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
