// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace revode {

/// One measurement. `flag` is empty or a short marker such as "diverged",
/// "reversible-fail" or "no-oracle".
struct ReportRow {
  std::string study;
  std::string solver;
  std::string params;
  std::string variable;
  std::size_t steps = 0;
  std::size_t nfe = 0;
  double h = 0.0;
  double g = 1.0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  std::string flag;
};

struct SlopeFit {
  double slope = 0.0;
  double half_width = 0.0;
  std::size_t points = 0;
};

/// Least squares fit of log(err) against log(h); half-width is twice the
/// standard error. Non-positive or non-finite points are dropped; fewer than
/// four usable points is an error.
SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& err);

struct SlopeEntry {
  std::string solver;
  std::string metric;
  SlopeFit fit;
  double expected = 0.0;
};

struct ExperimentReport {
  std::string study;
  std::vector<ReportRow> rows;
  std::vector<SlopeEntry> slopes;
  std::vector<std::string> warnings;

  void append(const ExperimentReport& other);
  /// Rows matching solver and metric (empty string matches anything).
  std::vector<const ReportRow*> select(const std::string& solver, const std::string& metric) const;
  const SlopeEntry* slope(const std::string& solver, const std::string& metric) const;
};

inline constexpr const char* kReportHeader = "study,solver,params,variable,N,nfe,h,g,seed,metric,value,flag";

void write_report_csv(const ExperimentReport& r, std::ostream& os);
std::string report_json(const ExperimentReport& r);

}  // namespace revode
