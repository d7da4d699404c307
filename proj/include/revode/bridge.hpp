// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat-buffer facade for host bindings: only contiguous doubles, sizes and
// strings cross this boundary.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "revode/field.hpp"

namespace revode::bridge {

/// Host noise predictor writing `dim` values to `out`.
using FlatEpsFn = std::function<void(const double* x, int dim, double t, const char* condition,
                                     double* out)>;

FieldModel bind_field(FlatEpsFn fn, int dim);

struct RunRequest {
  std::string solver = "ddim";   // preset name
  std::string params_json;       // optional overrides, same keys as a config solver entry
  std::string schedule_json;     // optional schedule object; default linear-beta
  std::string grid_variable;     // empty: the solver's default
  std::size_t steps = 0;
  double strength = 1.0;
  std::vector<double> x0;
  bool backward = false;         // start at the data end and integrate towards noise
  std::string condition = "c";
  double guidance = 1.0;
};

enum class Status { ok = 0, diverged = 1, invalid = 2, step_error = 3 };

struct RunResult {
  Status status = Status::ok;
  std::string message;
  long step = -1;                // failing step index, -1 if none
  std::vector<double> grid_values;
  std::vector<double> states;    // (steps + 1) x dim, row-major, traversal order
  std::size_t nfe = 0;
  std::size_t evaluations = 0;
};

/// Never throws for bad input; errors come back as a status and message.
RunResult run(const RunRequest& request, const FieldModel& field);

}  // namespace revode::bridge
