// SPDX-License-Identifier: Apache-2.0
#include "revode/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "json.hpp"

#include "revode/error.hpp"

namespace revode {

namespace {
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace

SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size()) throw InvalidParams("slope fit needs matching h and error lists");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0) || !std::isfinite(h[i]) || !std::isfinite(err[i]))
      continue;
    lx.push_back(std::log(h[i]));
    ly.push_back(std::log(err[i]));
  }
  const std::size_t n = lx.size();
  if (n < 4) throw StudyError("slope fit needs at least 4 usable points, got " + std::to_string(n));
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += lx[i], my += ly[i];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw StudyError("slope fit needs distinct step sizes");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.points = n;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (my + fit.slope * (lx[i] - mx));
    rss += r * r;
  }
  fit.half_width = 2.0 * std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  return fit;
}

void ExperimentReport::append(const ExperimentReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  slopes.insert(slopes.end(), other.slopes.begin(), other.slopes.end());
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

std::vector<const ReportRow*> ExperimentReport::select(const std::string& solver,
                                                       const std::string& metric) const {
  std::vector<const ReportRow*> out;
  for (const auto& r : rows)
    if ((solver.empty() || r.solver == solver) && (metric.empty() || r.metric == metric))
      out.push_back(&r);
  return out;
}

const SlopeEntry* ExperimentReport::slope(const std::string& solver,
                                          const std::string& metric) const {
  for (const auto& s : slopes)
    if (s.solver == solver && s.metric == metric) return &s;
  return nullptr;
}

void write_report_csv(const ExperimentReport& r, std::ostream& os) {
  os << kReportHeader << "\n";
  for (const auto& row : r.rows) {
    os << csv_field(row.study) << ',' << csv_field(row.solver) << ',' << csv_field(row.params)
       << ',' << row.variable << ',' << row.steps << ',' << row.nfe << ',' << num(row.h) << ','
       << num(row.g) << ',' << row.seed << ',' << row.metric << ',' << num(row.value) << ','
       << row.flag << "\n";
  }
}

std::string report_json(const ExperimentReport& r) {
  nlohmann::ordered_json j;
  j["study"] = r.study;
  j["rows"] = r.rows.size();
  std::size_t flagged = 0;
  for (const auto& row : r.rows) flagged += !row.flag.empty();
  j["flagged_rows"] = flagged;
  auto slopes = nlohmann::ordered_json::array();
  for (const auto& s : r.slopes) {
    nlohmann::ordered_json e;
    e["solver"] = s.solver;
    e["metric"] = s.metric;
    e["slope"] = s.fit.slope;
    e["half_width"] = s.fit.half_width;
    e["points"] = s.fit.points;
    e["expected"] = s.expected;
    slopes.push_back(e);
  }
  j["slopes"] = slopes;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

}  // namespace revode
