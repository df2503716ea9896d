#include "pegx/report.hpp"

#include <glob.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "pegx/errors.hpp"

namespace pegx {
namespace {

namespace fs = std::filesystem;

std::string FirstLine(const std::string& text) {
  std::string line = text.substr(0, text.find('\n'));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Rounds the axis maximum up to a 1/2/5 x 10^k step.
double NiceCeil(double v) {
  if (v <= 0.0) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(v)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= v) return m * mag;
  }
  return 10.0 * mag;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string Ordering(const std::vector<SummaryStats>& rows, const char* name,
                     bool descending, double SummaryStats::*field) {
  std::vector<SummaryStats> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
    return descending ? a.*field > b.*field : a.*field < b.*field;
  });
  std::string out = std::string(name) + ":";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0) {
      out += sorted[i - 1].*field == sorted[i].*field ? " =" : (descending ? " >" : " <");
    }
    out += " " + std::to_string(sorted[i].scenario_id);
  }
  return out;
}

}  // namespace

ReportInputs LoadReportInputs(const std::vector<std::string>& paths) {
  ReportInputs in;
  for (const auto& path : paths) {
    const std::string text = ReadTextFile(path);
    const std::string header = FirstLine(text);
    if (header == kRecordsHeader) {
      for (auto& r : ParseRecordsCsv(text, path)) in.records[r.scenario_id].push_back(r);
    } else if (header == kCurveHeader) {
      const fs::path p(path);
      std::string label = p.parent_path().filename().string();
      if (label.empty()) label = p.stem().string();
      std::replace(label.begin(), label.end(), '_', ' ');
      in.curves.push_back({label, ParseCurveCsv(text, path)});
    } else if (header == kSummaryHeader) {
      continue;
    } else {
      throw ValidationError(path + ":1: unrecognized CSV header '" + header + "'");
    }
  }
  return in;
}

ReportSummary BuildReport(const ReportInputs& inputs) {
  ReportSummary s;
  for (const auto& [id, records] : inputs.records) s.rows.push_back(Summarize(id, records));
  s.orderings.push_back(
      Ordering(s.rows, "success_rate", true, &SummaryStats::success_rate_percent));
  s.orderings.push_back(Ordering(s.rows, "avg_steps", false, &SummaryStats::avg_steps));

  std::ostringstream t;
  t << "scenario  success_rate  avg_steps  episodes\n";
  for (const auto& r : s.rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%8d  %12.2f  %9.2f  %8d\n", r.scenario_id,
                  r.success_rate_percent, r.avg_steps, r.episodes);
    t << line;
  }
  s.table = t.str();
  return s;
}

std::string BarChartSvg(const std::vector<SummaryStats>& rows) {
  const double width = 720, height = 400;
  const double left = 70, right = 70, top = 50, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double max_steps = 0.0;
  for (const auto& r : rows) max_steps = std::max(max_steps, r.avg_steps);
  const double steps_axis = NiceCeil(max_steps);
  const double group_w = rows.empty() ? plot_w : plot_w / rows.size();
  const double bar_w = std::min(40.0, group_w * 0.3);

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
    << height << "\" viewBox=\"0 0 " << width << " " << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << "Success rate and average time-steps per scenario</text>\n";
  // Axes and gridlines: left is success rate, right is average steps.
  for (int i = 0; i <= 5; ++i) {
    const double y = top + plot_h - plot_h * i / 5.0;
    o << "<line x1=\"" << left << "\" y1=\"" << Fixed(y, 2) << "\" x2=\"" << left + plot_w
      << "\" y2=\"" << Fixed(y, 2) << "\" stroke=\"#dddddd\"/>\n"
      << "<text x=\"" << left - 8 << "\" y=\"" << Fixed(y + 4, 2)
      << "\" text-anchor=\"end\">" << 20 * i << "</text>\n"
      << "<text x=\"" << left + plot_w + 8 << "\" y=\"" << Fixed(y + 4, 2) << "\">"
      << Fixed(steps_axis * i / 5.0, 0) << "</text>\n";
  }
  o << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w
    << "\" y2=\"" << top + plot_h << "\" stroke=\"black\"/>\n"
    << "<text transform=\"translate(18," << top + plot_h / 2
    << ") rotate(-90)\" text-anchor=\"middle\">success rate [%]</text>\n"
    << "<text transform=\"translate(" << width - 14 << "," << top + plot_h / 2
    << ") rotate(90)\" text-anchor=\"middle\">avg time-steps</text>\n";

  for (std::size_t g = 0; g < rows.size(); ++g) {
    const auto& r = rows[g];
    const double cx = left + group_w * (g + 0.5);
    const double h1 = plot_h * r.success_rate_percent / 100.0;
    const double h2 = plot_h * r.avg_steps / steps_axis;
    o << "<g class=\"scenario\" data-scenario=\"" << r.scenario_id << "\">\n"
      << "<rect x=\"" << Fixed(cx - bar_w - 2, 2) << "\" y=\"" << Fixed(top + plot_h - h1, 2)
      << "\" width=\"" << Fixed(bar_w, 2) << "\" height=\"" << Fixed(h1, 2)
      << "\" fill=\"" << kPalette[0] << "\"/>\n"
      << "<rect x=\"" << Fixed(cx + 2, 2) << "\" y=\"" << Fixed(top + plot_h - h2, 2)
      << "\" width=\"" << Fixed(bar_w, 2) << "\" height=\"" << Fixed(h2, 2)
      << "\" fill=\"" << kPalette[1] << "\"/>\n"
      << "<text x=\"" << Fixed(cx - bar_w / 2 - 2, 2) << "\" y=\""
      << Fixed(top + plot_h - h1 - 4, 2) << "\" text-anchor=\"middle\" font-size=\"10\">"
      << Fixed(r.success_rate_percent, 2) << "</text>\n"
      << "<text x=\"" << Fixed(cx + bar_w / 2 + 2, 2) << "\" y=\""
      << Fixed(top + plot_h - h2 - 4, 2) << "\" text-anchor=\"middle\" font-size=\"10\">"
      << Fixed(r.avg_steps, 1) << "</text>\n"
      << "<text x=\"" << Fixed(cx, 2) << "\" y=\"" << top + plot_h + 18
      << "\" text-anchor=\"middle\">Scenario " << r.scenario_id << "</text>\n"
      << "</g>\n";
  }
  const double ly = height - 18;
  o << "<rect x=\"" << left << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\""
    << kPalette[0] << "\"/>\n"
    << "<text x=\"" << left + 18 << "\" y=\"" << ly << "\">success rate</text>\n"
    << "<rect x=\"" << left + 130 << "\" y=\"" << ly - 10
    << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[1] << "\"/>\n"
    << "<text x=\"" << left + 148 << "\" y=\"" << ly << "\">avg time-steps</text>\n"
    << "</svg>\n";
  return o.str();
}

std::string CurveChartSvg(const std::vector<CurveSeries>& curves) {
  const double width = 720, height = 400;
  const double left = 70, right = 160, top = 50, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double max_step = 1.0, lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      max_step = std::max(max_step, static_cast<double>(p.step));
      lo = any ? std::min(lo, p.mean_episode_reward) : p.mean_episode_reward;
      hi = any ? std::max(hi, p.mean_episode_reward) : p.mean_episode_reward;
      any = true;
    }
  }
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  auto X = [&](double step) { return left + plot_w * step / max_step; };
  auto Y = [&](double r) { return top + plot_h - plot_h * (r - lo) / (hi - lo); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
    << height << "\" viewBox=\"0 0 " << width << " " << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << left + plot_w / 2
    << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">Mean episode reward during "
       "training</text>\n"
    << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
    << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    const double s = max_step * i / 4.0;
    o << "<text x=\"" << left - 8 << "\" y=\"" << Fixed(Y(v) + 4, 2)
      << "\" text-anchor=\"end\">" << Fixed(v, 1) << "</text>\n"
      << "<text x=\"" << Fixed(X(s), 2) << "\" y=\"" << top + plot_h + 18
      << "\" text-anchor=\"middle\">" << Fixed(s, 0) << "</text>\n";
  }
  o << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 8
    << "\" text-anchor=\"middle\">agent steps</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < curves[i].points.size(); ++k) {
      const auto& p = curves[i].points[k];
      o << (k ? " " : "") << Fixed(X(static_cast<double>(p.step)), 2) << ","
        << Fixed(Y(p.mean_episode_reward), 2);
    }
    o << "\"/>\n";
    const double ly = top + 16 + 18 * i;
    o << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly - 4 << "\" x2=\""
      << left + plot_w + 32 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << left + plot_w + 38 << "\" y=\"" << ly << "\">" << curves[i].label
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::string> ExpandGlobs(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  for (const auto& pat : patterns) {
    if (pat.find_first_of("*?[") == std::string::npos) {
      out.push_back(pat);
      continue;
    }
    glob_t g{};
    const int rc = ::glob(pat.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
  }
  return out;
}

ReportSummary WriteReport(const std::vector<std::string>& paths, const std::string& out_dir) {
  if (paths.empty()) throw UsageError("report: no input CSV files");
  const ReportInputs inputs = LoadReportInputs(paths);
  if (inputs.records.empty()) throw UsageError("report: no records CSV among the inputs");
  ReportSummary s = BuildReport(inputs);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  WriteTextFile((dir / "summary.csv").string(), SummaryCsv(s.rows));
  std::string text = s.table + "\n";
  for (const auto& line : s.orderings) text += line + "\n";
  WriteTextFile((dir / "summary.txt").string(), text);
  WriteTextFile((dir / "results.svg").string(), BarChartSvg(s.rows));
  if (!inputs.curves.empty()) {
    WriteTextFile((dir / "curves.svg").string(), CurveChartSvg(inputs.curves));
  }
  return s;
}

}  // namespace pegx
