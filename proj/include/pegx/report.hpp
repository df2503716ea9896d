#pragma once

// Aggregates scenario CSVs into a summary table and two SVG charts: grouped
// bars (success rate, average steps) per scenario and training curves.
// Output bytes depend only on the input files' contents and order.

#include <map>
#include <string>
#include <vector>

#include "pegx/harness.hpp"

namespace pegx {

struct CurveSeries {
  std::string label;  // e.g. "scenario 1"
  std::vector<CurvePoint> points;
};

struct ReportInputs {
  std::map<int, std::vector<EpisodeRecord>> records;  // by scenario id
  std::vector<CurveSeries> curves;
};

// Sorts each CSV by header: records files are grouped by their scenario_id
// column, curve files are labelled from the parent directory name. Summary
// CSVs are skipped. Anything else is a ValidationError with its line number.
ReportInputs LoadReportInputs(const std::vector<std::string>& paths);

struct ReportSummary {
  std::vector<SummaryStats> rows;  // ascending scenario id
  // e.g. "success_rate: 1 > 5 > 3"; ties keep ascending id order.
  std::vector<std::string> orderings;
  std::string table;  // aligned plain-text table
};

ReportSummary BuildReport(const ReportInputs& inputs);

std::string BarChartSvg(const std::vector<SummaryStats>& rows);
std::string CurveChartSvg(const std::vector<CurveSeries>& curves);

// Expands shell-style patterns (`*`, `?`, `[...]`) in sorted order. A
// pattern without wildcards is taken as a literal path.
std::vector<std::string> ExpandGlobs(const std::vector<std::string>& patterns);

// Writes summary.csv, summary.txt, results.svg and, when curves exist,
// curves.svg into out_dir. UsageError when `paths` is empty.
ReportSummary WriteReport(const std::vector<std::string>& paths,
                          const std::string& out_dir);

}  // namespace pegx
