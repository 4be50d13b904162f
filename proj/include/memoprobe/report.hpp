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

// Report artifacts derived from sensitivity records: per-cell summaries,
// findings, a CSV table and grouped SVG boxplots. Everything here is a pure
// function of the records and options, so repeated runs are byte-identical.

#ifndef MEMOPROBE_REPORT_HPP_
#define MEMOPROBE_REPORT_HPP_

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "memoprobe/analysis.hpp"
#include "memoprobe/error.hpp"
#include "memoprobe/sensitivity.hpp"
#include "memoprobe/stats.hpp"

namespace memoprobe {

inline constexpr int kReportSchemaVersion = 1;

struct SummaryRow {
  std::string model;
  std::string benchmark;  // matrix label
  TaskKind task = TaskKind::kCodeGeneration;
  stats::Summary summary;
};

struct ReportBundle {
  Json metadata = Json::object();
  std::vector<SummaryRow> rows;  // sorted by (model, benchmark)
  std::vector<Finding> findings;
  std::optional<CorrelationTable> correlation;
  std::vector<std::string> notes;
};

struct ReportOptions {
  AdvantageOptions advantage;
};

inline ReportBundle summarize(const std::vector<SensitivityRecord>& records,
                              const ReportOptions& options = {}, const Json& run_metadata = {}) {
  if (records.empty()) throw Error(ErrorCode::kPrecondition, "no sensitivity records to summarize");
  ReportBundle bundle;
  bundle.metadata["schema"] = kReportSchemaVersion;
  bundle.metadata["alpha"] = options.advantage.alpha;
  bundle.metadata["min_cell"] = options.advantage.min_cell;
  bundle.metadata["baseline"] = options.advantage.pairwise ? "pairwise" : "pooled";
  bundle.metadata["multiple_comparisons"] = "bonferroni";
  bundle.metadata["quartiles"] = "linear interpolation (type 7)";
  bundle.metadata["records"] = records.size();
  if (!run_metadata.is_null()) bundle.metadata["run"] = run_metadata;

  const auto labels = BenchmarkLabels(records);
  std::map<std::pair<std::string, std::string>, std::vector<double>> cells;
  std::map<std::string, TaskKind> label_task;
  for (const auto& r : records) {
    const std::string label = LabelFor(labels, r);
    cells[{r.model, label}].push_back(r.mean_sensitivity);
    label_task[label] = r.task;
  }
  for (const auto& [key, values] : cells) {
    bundle.rows.push_back({key.first, key.second, label_task[key.second], stats::descriptive(values)});
  }

  const SensitivityMatrix matrix = MatrixFromRecords(records);
  for (const auto& model : matrix.Models()) {
    try {
      auto rep = benchmark_advantage(model, matrix, options.advantage);
      bundle.findings.insert(bundle.findings.end(), rep.findings.begin(), rep.findings.end());
      for (const auto& u : rep.underpowered) {
        bundle.notes.push_back("model " + model + ": benchmark " + u + " underpowered (< " +
                               std::to_string(options.advantage.min_cell) + " samples), not tested");
      }
      for (const auto& u : rep.no_data) bundle.notes.push_back("model " + model + ": no data for " + u);
    } catch (const Error& e) {
      bundle.notes.push_back(std::string("benchmark advantage skipped: ") + e.what());
    }
  }
  for (const auto& benchmark : matrix.Benchmarks()) {
    try {
      auto rep = model_advantage(benchmark, matrix, options.advantage);
      bundle.findings.insert(bundle.findings.end(), rep.findings.begin(), rep.findings.end());
      for (const auto& u : rep.underpowered) {
        bundle.notes.push_back("benchmark " + benchmark + ": model " + u + " underpowered, not tested");
      }
    } catch (const Error& e) {
      bundle.notes.push_back(std::string("model advantage skipped: ") + e.what());
    }
  }
  const auto models = matrix.Models();
  const auto benchmarks = matrix.Benchmarks();
  if (models.size() >= 2 && benchmarks.size() >= 2) {
    try {
      bundle.correlation = cross_benchmark_correlation(matrix, models, benchmarks);
    } catch (const Error& e) {
      bundle.notes.push_back(std::string("correlation skipped: ") + e.what());
    }
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Number formatting shared by every artifact

inline std::string FormatNumber(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

inline Json RowToJson(const SummaryRow& row) {
  Json j;
  j["model"] = row.model;
  j["benchmark"] = row.benchmark;
  j["task"] = ToString(row.task);
  j["n"] = row.summary.n;
  j["min"] = row.summary.min;
  j["q1"] = row.summary.q1;
  j["median"] = row.summary.median;
  j["q3"] = row.summary.q3;
  j["max"] = row.summary.max;
  j["mean"] = row.summary.mean;
  return j;
}

inline Json BundleToJson(const ReportBundle& bundle) {
  Json j;
  j["metadata"] = bundle.metadata;
  Json rows = Json::array();
  for (const auto& r : bundle.rows) rows.push_back(RowToJson(r));
  j["rows"] = std::move(rows);
  Json findings = Json::array();
  for (const auto& f : bundle.findings) findings.push_back(FindingToJson(f));
  j["findings"] = std::move(findings);
  j["correlation"] = bundle.correlation ? CorrelationToJson(*bundle.correlation) : Json(nullptr);
  j["notes"] = bundle.notes;
  return j;
}

namespace detail {

inline void WriteFile(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace detail

inline void write_summary_json(const ReportBundle& bundle, const std::filesystem::path& path) {
  detail::WriteFile(path, BundleToJson(bundle).dump(2) + "\n");
}

inline void write_findings_jsonl(const std::vector<Finding>& findings,
                                 const std::filesystem::path& path) {
  std::string out;
  for (const auto& f : findings) out += FindingToJson(f).dump() + "\n";
  detail::WriteFile(path, out);
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kCsvColumns[] = {"model", "benchmark", "task", "n",  "min",
                                                   "q1",    "median",    "q3",   "max", "mean"};

inline std::string CsvField(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string ToCsv(const ReportBundle& bundle) {
  std::string out;
  for (std::size_t i = 0; i < std::size(kCsvColumns); ++i) {
    if (i) out += ',';
    out += kCsvColumns[i];
  }
  out += "\r\n";
  for (const auto& r : bundle.rows) {
    const std::string fields[] = {r.model,
                                  r.benchmark,
                                  std::string(ToString(r.task)),
                                  std::to_string(r.summary.n),
                                  FormatNumber(r.summary.min),
                                  FormatNumber(r.summary.q1),
                                  FormatNumber(r.summary.median),
                                  FormatNumber(r.summary.q3),
                                  FormatNumber(r.summary.max),
                                  FormatNumber(r.summary.mean)};
    for (std::size_t i = 0; i < std::size(fields); ++i) {
      if (i) out += ',';
      out += CsvField(fields[i]);
    }
    out += "\r\n";
  }
  return out;
}

inline void export_csv(const ReportBundle& bundle, const std::filesystem::path& path) {
  detail::WriteFile(path, ToCsv(bundle));
}

// ---------------------------------------------------------------------------
// SVG boxplots

namespace detail {

inline std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string XmlEscape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr std::string_view kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                                "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
                                                "#9c755f", "#bab0ac"};

}  // namespace detail

// One standalone SVG for the rows of a single task family: benchmarks along
// the x axis, one box per model within each benchmark group.
inline std::string RenderBoxplotSvg(const std::vector<SummaryRow>& rows, std::string_view title) {
  std::vector<std::string> benchmarks, models;
  for (const auto& r : rows) {
    if (std::find(benchmarks.begin(), benchmarks.end(), r.benchmark) == benchmarks.end()) {
      benchmarks.push_back(r.benchmark);
    }
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
  }
  std::sort(benchmarks.begin(), benchmarks.end());
  std::sort(models.begin(), models.end());

  double lo = 0.0, hi = 1.0;
  for (const auto& r : rows) {
    if (r.summary.min < 0 || r.summary.max > 1) {
      lo = -1.0;
      hi = 1.0;
    }
  }
  const double box_w = 18, gap = 6, group_pad = 24;
  const double group_w = static_cast<double>(models.size()) * (box_w + gap) - gap;
  const double left = 60, top = 40, plot_h = 300, legend_h = 20.0 * static_cast<double>(models.size());
  const double plot_w = static_cast<double>(benchmarks.size()) * (group_w + 2 * group_pad);
  const double width = left + plot_w + 20;
  const double height = top + plot_h + 60 + legend_h;
  auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * plot_h; };

  using detail::Fixed;
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Fixed(width) + "\" height=\"" +
       Fixed(height) + "\" viewBox=\"0 0 " + Fixed(width) + " " + Fixed(height) + "\">\n";
  s += "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" + Fixed(width) + "\" height=\"" +
       Fixed(height) + "\" fill=\"#ffffff\"/>\n";
  s += "<text class=\"title\" x=\"" + Fixed(left) + "\" y=\"20\" font-family=\"sans-serif\" "
       "font-size=\"14\">" + detail::XmlEscape(title) + "</text>\n";
  // axis and ticks
  s += "<line class=\"axis\" x1=\"" + Fixed(left) + "\" y1=\"" + Fixed(top) + "\" x2=\"" +
       Fixed(left) + "\" y2=\"" + Fixed(top + plot_h) + "\" stroke=\"#000000\"/>\n";
  const int ticks = lo < 0 ? 8 : 5;
  for (int t = 0; t <= ticks; ++t) {
    const double v = lo + (hi - lo) * t / ticks;
    const double y = y_of(v);
    s += "<line class=\"tick\" x1=\"" + Fixed(left - 4) + "\" y1=\"" + Fixed(y) + "\" x2=\"" +
         Fixed(left + plot_w) + "\" y2=\"" + Fixed(y) + "\" stroke=\"#dddddd\"/>\n";
    s += "<text class=\"tick-label\" x=\"" + Fixed(left - 8) + "\" y=\"" + Fixed(y + 4) +
         "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + Fixed(v) +
         "</text>\n";
  }
  s += "<text class=\"axis-label\" x=\"14\" y=\"" + Fixed(top + plot_h / 2) +
       "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 " +
       Fixed(top + plot_h / 2) + ")\" text-anchor=\"middle\">sensitivity</text>\n";

  for (std::size_t b = 0; b < benchmarks.size(); ++b) {
    const double gx = left + static_cast<double>(b) * (group_w + 2 * group_pad) + group_pad;
    s += "<text class=\"group-label\" x=\"" + Fixed(gx + group_w / 2) + "\" y=\"" +
         Fixed(top + plot_h + 18) + "\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"middle\">" + detail::XmlEscape(benchmarks[b]) + "</text>\n";
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& r) {
        return r.benchmark == benchmarks[b] && r.model == models[m];
      });
      if (it == rows.end()) continue;
      const auto& sm = it->summary;
      const double x = gx + static_cast<double>(m) * (box_w + gap);
      const double cx = x + box_w / 2;
      const std::string color(detail::kPalette[m % std::size(detail::kPalette)]);
      s += "<g class=\"boxplot\" data-model=\"" + detail::XmlEscape(models[m]) +
           "\" data-benchmark=\"" + detail::XmlEscape(benchmarks[b]) + "\">\n";
      s += "<line class=\"whisker\" x1=\"" + Fixed(cx) + "\" y1=\"" + Fixed(y_of(sm.max)) +
           "\" x2=\"" + Fixed(cx) + "\" y2=\"" + Fixed(y_of(sm.q3)) + "\" stroke=\"#000000\"/>\n";
      s += "<line class=\"whisker\" x1=\"" + Fixed(cx) + "\" y1=\"" + Fixed(y_of(sm.q1)) +
           "\" x2=\"" + Fixed(cx) + "\" y2=\"" + Fixed(y_of(sm.min)) + "\" stroke=\"#000000\"/>\n";
      for (double cap : {sm.min, sm.max}) {
        s += "<line class=\"cap\" x1=\"" + Fixed(x + 4) + "\" y1=\"" + Fixed(y_of(cap)) +
             "\" x2=\"" + Fixed(x + box_w - 4) + "\" y2=\"" + Fixed(y_of(cap)) +
             "\" stroke=\"#000000\"/>\n";
      }
      s += "<rect class=\"box\" x=\"" + Fixed(x) + "\" y=\"" + Fixed(y_of(sm.q3)) +
           "\" width=\"" + Fixed(box_w) + "\" height=\"" + Fixed(y_of(sm.q1) - y_of(sm.q3)) +
           "\" fill=\"" + color + "\" stroke=\"#000000\"/>\n";
      s += "<line class=\"median\" x1=\"" + Fixed(x) + "\" y1=\"" + Fixed(y_of(sm.median)) +
           "\" x2=\"" + Fixed(x + box_w) + "\" y2=\"" + Fixed(y_of(sm.median)) +
           "\" stroke=\"#000000\" stroke-width=\"2\"/>\n";
      s += "</g>\n";
    }
  }
  for (std::size_t m = 0; m < models.size(); ++m) {
    const double ly = top + plot_h + 34 + 20.0 * static_cast<double>(m);
    s += "<rect class=\"legend-swatch\" x=\"" + Fixed(left) + "\" y=\"" + Fixed(ly) +
         "\" width=\"12\" height=\"12\" fill=\"" +
         std::string(detail::kPalette[m % std::size(detail::kPalette)]) + "\"/>\n";
    s += "<text class=\"legend-label\" x=\"" + Fixed(left + 18) + "\" y=\"" + Fixed(ly + 10) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::XmlEscape(models[m]) +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

// Writes boxplots_<task>.svg into `dir` for every task family present and
// returns the paths in task order.
inline std::vector<std::filesystem::path> render_boxplots(const ReportBundle& bundle,
                                                          const std::filesystem::path& dir) {
  std::map<TaskKind, std::vector<SummaryRow>> by_task;
  for (const auto& r : bundle.rows) by_task[r.task].push_back(r);
  std::vector<std::filesystem::path> written;
  for (const auto& [task, rows] : by_task) {
    const auto path = dir / ("boxplots_" + std::string(ToString(task)) + ".svg");
    detail::WriteFile(path, RenderBoxplotSvg(rows, "Perturbation sensitivity: " +
                                                       std::string(ToString(task))));
    written.push_back(path);
  }
  return written;
}

// report.csv, summary.json, findings.jsonl and the boxplots.
inline void write_report(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
  export_csv(bundle, dir / "report.csv");
  write_summary_json(bundle, dir / "summary.json");
  write_findings_jsonl(bundle.findings, dir / "findings.jsonl");
  render_boxplots(bundle, dir);
}

}  // namespace memoprobe

#endif  // MEMOPROBE_REPORT_HPP_
