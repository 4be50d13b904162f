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

// Advantage detectors over the model x benchmark sensitivity matrix.
//
// A benchmark advantage compares one benchmark's sensitivity distribution
// for a fixed model against that model's other benchmarks; a model advantage
// compares one model against the others on a fixed benchmark. Both use the
// two-sided Mann-Whitney U test with Bonferroni correction. A flag means the
// distribution deviates, nothing more: higher sensitivity is consistent with
// memorization or a knowledge gap, lower with robust generalization.

#ifndef MEMOPROBE_ANALYSIS_HPP_
#define MEMOPROBE_ANALYSIS_HPP_

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "memoprobe/error.hpp"
#include "memoprobe/sensitivity.hpp"
#include "memoprobe/stats.hpp"

namespace memoprobe {

class SensitivityMatrix {
 public:
  void Add(const std::string& model, const std::string& benchmark, double value) {
    cells_[model][benchmark].push_back(value);
    benchmarks_.insert(benchmark);
  }

  // Declares a cell without data, e.g. a benchmark a model was never run on.
  void Touch(const std::string& model, const std::string& benchmark) {
    cells_[model];
    benchmarks_.insert(benchmark);
  }

  // Empty when the cell holds no data.
  const std::vector<double>& Cell(const std::string& model, const std::string& benchmark) const {
    static const std::vector<double> kEmpty;
    auto m = cells_.find(model);
    if (m == cells_.end()) return kEmpty;
    auto b = m->second.find(benchmark);
    return b == m->second.end() ? kEmpty : b->second;
  }

  std::vector<std::string> Models() const {
    std::vector<std::string> out;
    for (const auto& [m, _] : cells_) out.push_back(m);
    return out;
  }

  std::vector<std::string> Benchmarks() const { return {benchmarks_.begin(), benchmarks_.end()}; }

  bool HasModel(const std::string& model) const { return cells_.count(model) > 0; }
  bool HasBenchmark(const std::string& benchmark) const { return benchmarks_.count(benchmark) > 0; }

 private:
  std::map<std::string, std::map<std::string, std::vector<double>>> cells_;
  std::set<std::string> benchmarks_;
};

// Label under which a record enters the matrix: the benchmark name, or
// "benchmark/task" when the benchmark carries samples of several tasks.
inline std::map<std::string, std::string> BenchmarkLabels(const std::vector<SensitivityRecord>& records) {
  std::map<std::string, std::set<TaskKind>> tasks;
  for (const auto& r : records) tasks[r.benchmark].insert(r.task);
  std::map<std::string, std::string> labels;
  for (const auto& r : records) {
    const std::string key = r.benchmark + '\x1f' + std::string(ToString(r.task));
    labels[key] = tasks[r.benchmark].size() > 1 ? r.benchmark + "/" + std::string(ToString(r.task))
                                                : r.benchmark;
  }
  return labels;
}

inline std::string LabelFor(const std::map<std::string, std::string>& labels,
                            const SensitivityRecord& r) {
  return labels.at(r.benchmark + '\x1f' + std::string(ToString(r.task)));
}

inline SensitivityMatrix MatrixFromRecords(const std::vector<SensitivityRecord>& records) {
  const auto labels = BenchmarkLabels(records);
  SensitivityMatrix m;
  for (const auto& r : records) m.Add(r.model, LabelFor(labels, r), r.mean_sensitivity);
  return m;
}

enum class Scope { kBenchmarkAdvantage, kModelAdvantage };
enum class Direction { kHigher, kLower, kNone };

inline std::string_view ToString(Scope s) {
  return s == Scope::kBenchmarkAdvantage ? "benchmark_advantage" : "model_advantage";
}

inline std::string_view ToString(Direction d) {
  switch (d) {
    case Direction::kHigher: return "higher";
    case Direction::kLower: return "lower";
    case Direction::kNone: return "none";
  }
  return "";
}

inline std::string_view Interpretation(Direction d) {
  switch (d) {
    case Direction::kHigher: return "memorization or knowledge gap";
    case Direction::kLower: return "robust generalization";
    case Direction::kNone: return "no shift";
  }
  return "";
}

struct Finding {
  Scope scope = Scope::kBenchmarkAdvantage;
  std::string context;   // the fixed model (benchmark scope) or benchmark (model scope)
  std::string subject;   // the benchmark or model under test
  std::string baseline;  // description of what it was compared with
  double statistic = 0;
  double raw_p = 1;
  double adjusted_p = 1;
  Direction direction = Direction::kNone;
  double effect = 0;  // median(subject) - median(baseline)
  std::size_t n_subject = 0;
  std::size_t n_baseline = 0;
  bool flagged = false;
};

inline Json FindingToJson(const Finding& f) {
  Json j;
  j["scope"] = ToString(f.scope);
  j["context"] = f.context;
  j["subject"] = f.subject;
  j["baseline"] = f.baseline;
  j["statistic"] = f.statistic;
  j["raw_p"] = f.raw_p;
  j["adjusted_p"] = f.adjusted_p;
  j["direction"] = ToString(f.direction);
  j["interpretation"] = Interpretation(f.direction);
  j["effect"] = f.effect;
  j["n_subject"] = f.n_subject;
  j["n_baseline"] = f.n_baseline;
  j["flagged"] = f.flagged;
  return j;
}

struct AdvantageOptions {
  double alpha = 0.05;
  // Cells smaller than this are reported as underpowered and not tested.
  std::size_t min_cell = 5;
  // Test every pair of subjects instead of each subject against the pooled rest.
  bool pairwise = false;
};

struct AdvantageReport {
  std::vector<Finding> findings;  // sorted by adjusted_p
  std::vector<std::string> no_data;
  std::vector<std::string> underpowered;

  std::vector<Finding> Flagged() const {
    std::vector<Finding> out;
    for (const auto& f : findings) {
      if (f.flagged) out.push_back(f);
    }
    return out;
  }
};

namespace detail {

struct Group {
  std::string name;
  const std::vector<double>* values;
};

inline Finding Compare(Scope scope, const std::string& context, const std::string& subject,
                       const std::vector<double>& x, const std::string& baseline,
                       const std::vector<double>& y) {
  const auto test = stats::mann_whitney_u(x, y);
  Finding f;
  f.scope = scope;
  f.context = context;
  f.subject = subject;
  f.baseline = baseline;
  f.statistic = test.statistic;
  f.raw_p = test.p_value;
  f.effect = stats::Median(x) - stats::Median(y);
  f.n_subject = x.size();
  f.n_baseline = y.size();
  if (f.effect > 0) {
    f.direction = Direction::kHigher;
  } else if (f.effect < 0) {
    f.direction = Direction::kLower;
  } else {
    // Equal medians: fall back to the rank-sum side.
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto ranks = stats::MidRanks(pooled);
    double r1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) r1 += ranks[i];
    const double u1 = r1 - static_cast<double>(x.size()) * (x.size() + 1) / 2.0;
    const double half = static_cast<double>(x.size()) * y.size() / 2.0;
    f.direction = u1 > half ? Direction::kHigher : u1 < half ? Direction::kLower : Direction::kNone;
  }
  return f;
}

inline AdvantageReport Detect(Scope scope, const std::string& context,
                              const std::vector<Group>& groups, const AdvantageOptions& options,
                              std::string_view what) {
  AdvantageReport report;
  std::vector<Group> present;
  for (const auto& g : groups) {
    if (g.values->empty()) {
      report.no_data.push_back(g.name);
    } else {
      present.push_back(g);
    }
  }
  if (present.size() < 2) {
    throw Error(ErrorCode::kPrecondition,
                "\xE2\x89\xA5 2 " + std::string(what) + " required for \"" + context + "\", found " +
                    std::to_string(present.size()));
  }
  std::vector<Group> eligible;
  for (const auto& g : present) {
    if (g.values->size() < options.min_cell) {
      report.underpowered.push_back(g.name);
    } else {
      eligible.push_back(g);
    }
  }
  if (options.pairwise) {
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      for (std::size_t j = i + 1; j < eligible.size(); ++j) {
        report.findings.push_back(Compare(scope, context, eligible[i].name, *eligible[i].values,
                                          eligible[j].name, *eligible[j].values));
      }
    }
  } else {
    for (const auto& g : eligible) {
      std::vector<double> rest;
      for (const auto& other : present) {
        if (other.name != g.name) rest.insert(rest.end(), other.values->begin(), other.values->end());
      }
      report.findings.push_back(
          Compare(scope, context, g.name, *g.values, "pooled other " + std::string(what), rest));
    }
  }
  std::vector<double> raw;
  for (const auto& f : report.findings) raw.push_back(f.raw_p);
  const auto adjusted = stats::bonferroni(raw);
  for (std::size_t i = 0; i < report.findings.size(); ++i) {
    report.findings[i].adjusted_p = adjusted[i];
    report.findings[i].flagged = adjusted[i] < options.alpha;
  }
  std::stable_sort(report.findings.begin(), report.findings.end(),
                   [](const Finding& a, const Finding& b) { return a.adjusted_p < b.adjusted_p; });
  return report;
}

}  // namespace detail

inline AdvantageReport benchmark_advantage(const std::string& model,
                                           const SensitivityMatrix& matrix,
                                           const AdvantageOptions& options = {}) {
  if (!matrix.HasModel(model)) {
    throw Error(ErrorCode::kPrecondition, "model \"" + model + "\" not in matrix");
  }
  std::vector<detail::Group> groups;
  for (const auto& b : matrix.Benchmarks()) groups.push_back({b, &matrix.Cell(model, b)});
  return detail::Detect(Scope::kBenchmarkAdvantage, model, groups, options, "benchmarks");
}

inline AdvantageReport model_advantage(const std::string& benchmark,
                                       const SensitivityMatrix& matrix,
                                       const AdvantageOptions& options = {}) {
  if (!matrix.HasBenchmark(benchmark)) {
    throw Error(ErrorCode::kPrecondition, "benchmark \"" + benchmark + "\" not in matrix");
  }
  std::vector<detail::Group> groups;
  for (const auto& m : matrix.Models()) groups.push_back({m, &matrix.Cell(m, benchmark)});
  return detail::Detect(Scope::kModelAdvantage, benchmark, groups, options, "models");
}

struct CorrelationTable {
  std::vector<std::string> benchmarks;
  std::vector<std::string> models;
  // entries[i][j]: pearson over per-model medians; nullopt when undefined.
  std::vector<std::vector<std::optional<double>>> entries;
};

inline Json CorrelationToJson(const CorrelationTable& t) {
  Json j;
  j["benchmarks"] = t.benchmarks;
  j["models"] = t.models;
  Json rows = Json::array();
  for (const auto& row : t.entries) {
    Json r = Json::array();
    for (const auto& e : row) r.push_back(e ? Json(*e) : Json(nullptr));
    rows.push_back(std::move(r));
  }
  j["pearson"] = std::move(rows);
  return j;
}

inline CorrelationTable cross_benchmark_correlation(const SensitivityMatrix& matrix,
                                                    const std::vector<std::string>& models,
                                                    const std::vector<std::string>& benchmarks) {
  if (models.size() < 2) throw Error(ErrorCode::kPrecondition, "correlation needs >= 2 models");
  CorrelationTable table{benchmarks, models, {}};
  std::vector<std::vector<double>> medians(benchmarks.size());
  for (std::size_t b = 0; b < benchmarks.size(); ++b) {
    for (const auto& m : models) {
      const auto& cell = matrix.Cell(m, benchmarks[b]);
      if (cell.empty()) {
        throw Error(ErrorCode::kPrecondition,
                    "no data for model \"" + m + "\" on benchmark \"" + benchmarks[b] + "\"");
      }
      medians[b].push_back(stats::Median(cell));
    }
  }
  table.entries.assign(benchmarks.size(), std::vector<std::optional<double>>(benchmarks.size()));
  for (std::size_t i = 0; i < benchmarks.size(); ++i) {
    for (std::size_t j = 0; j < benchmarks.size(); ++j) {
      try {
        table.entries[i][j] = stats::pearson(medians[i], medians[j]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerate) throw;
      }
    }
  }
  return table;
}

struct CategoryComparison {
  stats::TestResult test;
  std::vector<std::string> models;
  std::vector<double> medians_a;
  std::vector<double> medians_b;
};

// Pairs each model's median sensitivity over category A's benchmarks with its
// median over category B's and runs a paired t-test on the pairs.
inline CategoryComparison category_comparison(const SensitivityMatrix& matrix,
                                              const std::vector<std::string>& category_a,
                                              const std::vector<std::string>& category_b) {
  CategoryComparison out;
  for (const auto& m : matrix.Models()) {
    std::vector<double> a, b;
    for (const auto& name : category_a) {
      const auto& cell = matrix.Cell(m, name);
      a.insert(a.end(), cell.begin(), cell.end());
    }
    for (const auto& name : category_b) {
      const auto& cell = matrix.Cell(m, name);
      b.insert(b.end(), cell.begin(), cell.end());
    }
    if (a.empty() && b.empty()) continue;
    if (a.empty() || b.empty()) {
      throw Error(ErrorCode::kPrecondition,
                  "model \"" + m + "\" does not cover both categories");
    }
    out.models.push_back(m);
    out.medians_a.push_back(stats::Median(a));
    out.medians_b.push_back(stats::Median(b));
  }
  out.test = stats::paired_t_test(out.medians_a, out.medians_b);
  return out;
}

}  // namespace memoprobe

#endif  // MEMOPROBE_ANALYSIS_HPP_
