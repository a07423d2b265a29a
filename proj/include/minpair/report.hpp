// Copyright 2026 The minpair Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Accuracy-by-model tables ordered by training size, annotated with the
// amount of child language exposure the training data corresponds to.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <limits>
#include <vector>

#include "minpair/detail/util.hpp"
#include "minpair/error.hpp"
#include "minpair/scoring.hpp"

namespace minpair {

inline constexpr double kWordsPerDay = 30000.0;
inline constexpr double kDaysPerMonth = 30.0;
inline constexpr double kDaysPerYear = 365.25;
// Below 60 days durations stay in days; from 10.5 months on they are years.
inline constexpr double kMonthsFromDays = 60.0;
inline constexpr double kYearsFromDays = 10.5 * kDaysPerMonth;

enum class DurationUnit { days, months, years };

inline std::string_view to_string(DurationUnit u) noexcept {
  switch (u) {
    case DurationUnit::days: return "days";
    case DurationUnit::months: return "months";
    case DurationUnit::years: return "years";
  }
  return "days";
}

inline DurationUnit parse_duration_unit(std::string_view s) {
  if (s == "days") return DurationUnit::days;
  if (s == "months") return DurationUnit::months;
  if (s == "years") return DurationUnit::years;
  throw ValidationError("unknown duration unit '" + std::string(s) + "'");
}

struct Duration {
  double days = 0.0;
  std::uint64_t value = 0;  // rounded count of `unit`
  DurationUnit unit = DurationUnit::days;

  std::string text() const {
    std::string u(to_string(unit));
    if (value == 1) u.pop_back();
    return std::to_string(value) + " " + u;
  }
  friend bool operator==(const Duration&, const Duration&) = default;
};

inline Duration human_equivalent(std::uint64_t tokens) {
  Duration d;
  d.days = static_cast<double>(tokens) / kWordsPerDay;
  double v;
  if (d.days < kMonthsFromDays) {
    d.unit = DurationUnit::days;
    v = d.days;
  } else if (d.days < kYearsFromDays) {
    d.unit = DurationUnit::months;
    v = d.days / kDaysPerMonth;
  } else {
    d.unit = DurationUnit::years;
    v = d.days / kDaysPerYear;
  }
  d.value = static_cast<std::uint64_t>(std::llround(v));
  return d;
}

struct ModelLedgerEntry {
  std::string model_id;
  std::uint64_t training_tokens = 0;
  Duration human() const { return human_equivalent(training_tokens); }
  friend bool operator==(const ModelLedgerEntry&, const ModelLedgerEntry&) = default;
};

// The eight reference models and their approximate training sizes.
inline std::vector<ModelLedgerEntry> builtin_ledger() {
  return {
      {"childes-lstm", 8'600'000},
      {"childes-transformer", 8'600'000},
      {"babylm-10m", 10'000'000},
      {"wikipedia-transformer", 90'000'000},
      {"babylm-100m", 100'000'000},
      {"bert-base-uncased", 3'500'000'000},
      {"gpt2", 8'000'000'000},
      {"llama-3.2-3b", 9'000'000'000'000},
  };
}

// Ledger CSV: model,training_tokens
inline void write_ledger_csv(std::ostream& out, std::span<const ModelLedgerEntry> ledger) {
  out << "model,training_tokens\n";
  for (const auto& e : ledger) out << e.model_id << ',' << e.training_tokens << '\n';
}

inline std::vector<ModelLedgerEntry> read_ledger_csv(std::istream& in) {
  std::vector<ModelLedgerEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line == "model,training_tokens") continue;
    if (line.empty() || line[0] == '#') continue;
    auto f = detail::split(line, ',');
    if (f.size() != 2) throw ValidationError("ledger line " + std::to_string(lineno) + " needs 2 fields");
    try {
      std::size_t used = 0;
      const auto tokens = std::stoull(f[1], &used);
      if (used != f[1].size()) throw std::invalid_argument("trailing characters");
      out.push_back({f[0], tokens});
    } catch (const std::exception&) {
      throw ValidationError("ledger line " + std::to_string(lineno) + " has a bad token count");
    }
  }
  return out;
}

inline std::vector<ModelLedgerEntry> load_ledger_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ledger '" + path + "'");
  return read_ledger_csv(in);
}

struct ReportRow {
  std::string model_id;
  std::string phenomenon;
  std::uint64_t training_tokens = 0;
  double log10_tokens = 0.0;
  Duration human;
  std::size_t seeds = 0;
  double accuracy = 0.0;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

// Rows ascend by training tokens; equal sizes fall back to model id and then
// phenomenon, so input order never matters.
inline std::vector<ReportRow> emit_report(std::span<const AccuracyReport> reports,
                                          std::span<const ModelLedgerEntry> ledger) {
  std::map<std::string, std::uint64_t> size;
  for (const auto& e : ledger) {
    auto [it, fresh] = size.emplace(e.model_id, e.training_tokens);
    if (!fresh && it->second != e.training_tokens)
      throw ValidationError("ledger lists '" + e.model_id + "' twice with different sizes");
  }
  std::vector<ReportRow> rows;
  rows.reserve(reports.size());
  for (const auto& r : reports) {
    auto it = size.find(r.scorer_id);
    if (it == size.end()) throw ValidationError("no ledger entry for scorer '" + r.scorer_id + "'");
    ReportRow row;
    row.model_id = r.scorer_id;
    row.phenomenon = r.phenomenon;
    row.training_tokens = it->second;
    row.log10_tokens = it->second == 0 ? -std::numeric_limits<double>::infinity()
                                       : std::log10(static_cast<double>(it->second));
    row.human = human_equivalent(it->second);
    row.seeds = r.seeds.size();
    row.accuracy = r.mean;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.training_tokens, a.model_id, a.phenomenon) <
           std::tie(b.training_tokens, b.model_id, b.phenomenon);
  });
  return rows;
}

inline constexpr std::string_view kReportHeader =
    "model,phenomenon,training_tokens,log10_tokens,human_days,human_value,human_unit,seeds,accuracy";

inline void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  out << kReportHeader << '\n';
  for (const auto& r : rows)
    out << r.model_id << ',' << r.phenomenon << ',' << r.training_tokens << ','
        << detail::format_double(r.log10_tokens) << ',' << detail::format_double(r.human.days) << ','
        << r.human.value << ',' << to_string(r.human.unit) << ',' << r.seeds << ','
        << detail::format_double(r.accuracy) << '\n';
}

inline std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::vector<ReportRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kReportHeader) throw ValidationError("unexpected report CSV header '" + line + "'");
      continue;
    }
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    if (f.size() != 9) throw ValidationError("report CSV line " + std::to_string(lineno) + " needs 9 fields");
    try {
      ReportRow r;
      r.model_id = f[0];
      r.phenomenon = f[1];
      r.training_tokens = std::stoull(f[2]);
      r.log10_tokens = detail::parse_double(f[3]);
      r.human.days = detail::parse_double(f[4]);
      r.human.value = std::stoull(f[5]);
      r.human.unit = parse_duration_unit(f[6]);
      r.seeds = std::stoull(f[7]);
      r.accuracy = detail::parse_double(f[8]);
      rows.push_back(std::move(r));
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception&) {
      throw ValidationError("report CSV line " + std::to_string(lineno) + " has a bad number");
    }
  }
  return rows;
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
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

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

}  // namespace detail

// Static chart: one panel per phenomenon with accuracy bars per model, plus a
// dark line for log10 training size scaled onto the same axis.
inline void write_report_svg(std::ostream& out, std::span<const ReportRow> rows) {
  std::vector<std::string> phenomena, models;
  for (const auto& r : rows) {
    if (std::find(phenomena.begin(), phenomena.end(), r.phenomenon) == phenomena.end()) phenomena.push_back(r.phenomenon);
    if (std::find(models.begin(), models.end(), r.model_id) == models.end()) models.push_back(r.model_id);
  }
  std::sort(phenomena.begin(), phenomena.end());
  double max_log = 1.0;
  for (const auto& r : rows) max_log = std::max(max_log, r.log10_tokens);

  const double bar = 28, gap = 8, plot_h = 200, margin = 50, label_h = 110;
  const double panel_w = margin + static_cast<double>(models.size()) * (bar + gap) + gap;
  const double width = std::max(1.0, static_cast<double>(phenomena.size())) * panel_w + margin;
  const double height = plot_h + label_h + 2 * margin;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fixed(width, 0) << "\" height=\""
      << detail::fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < phenomena.size(); ++p) {
    const double x0 = margin + static_cast<double>(p) * panel_w;
    const double y0 = margin;
    out << "<g>\n<text x=\"" << detail::fixed(x0, 1) << "\" y=\"" << detail::fixed(y0 - 12, 1) << "\" font-size=\"14\">"
        << detail::xml_escape(phenomena[p]) << "</text>\n";
    out << "<line x1=\"" << detail::fixed(x0, 1) << "\" y1=\"" << detail::fixed(y0, 1) << "\" x2=\""
        << detail::fixed(x0, 1) << "\" y2=\"" << detail::fixed(y0 + plot_h, 1) << "\" stroke=\"black\"/>\n";
    for (double t : {0.0, 0.5, 1.0}) {
      const double y = y0 + plot_h * (1 - t);
      out << "<text x=\"" << detail::fixed(x0 - 6, 1) << "\" y=\"" << detail::fixed(y + 4, 1)
          << "\" text-anchor=\"end\">" << detail::fixed(t, 1) << "</text>\n";
    }
    std::string line_points;
    for (std::size_t m = 0; m < models.size(); ++m) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const ReportRow& r) {
        return r.phenomenon == phenomena[p] && r.model_id == models[m];
      });
      if (it == rows.end()) continue;
      const double x = x0 + gap + static_cast<double>(m) * (bar + gap);
      const double h = plot_h * std::clamp(it->accuracy, 0.0, 1.0);
      out << "<rect x=\"" << detail::fixed(x, 1) << "\" y=\"" << detail::fixed(y0 + plot_h - h, 1) << "\" width=\""
          << detail::fixed(bar, 1) << "\" height=\"" << detail::fixed(h, 1) << "\" fill=\"#4a90b8\"/>\n";
      const double ly = y0 + plot_h * (1 - std::max(0.0, it->log10_tokens) / max_log);
      line_points += detail::fixed(x + bar / 2, 1) + "," + detail::fixed(ly, 1) + " ";
      out << "<text transform=\"translate(" << detail::fixed(x + bar / 2, 1) << "," << detail::fixed(y0 + plot_h + 8, 1)
          << ") rotate(60)\">" << detail::xml_escape(models[m]) << "</text>\n";
    }
    if (!line_points.empty())
      out << "<polyline points=\"" << line_points << "\" fill=\"none\" stroke=\"#222\" stroke-width=\"2\"/>\n";
    out << "</g>\n";
  }
  out << "</svg>\n";
}

}  // namespace minpair
