// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "revode/lab.hpp"
#include "revode/stability.hpp"

namespace revode {

enum class StudyKind { stability, convergence, roundtrip, reconstruct, edit, latent };

std::string_view to_string(StudyKind k);
StudyKind study_kind_from_string(std::string_view name);

struct StabilitySettings {
  std::vector<std::string> methods{"ees25"};
  Window window;
  int nx = 201, ny = 201;
  bool empirical = false;  // add an empirical raster per method
  int iterations = 10000;
  double growth_cap = 1e6;
  double zeta = 0.999;     // Gamma raster for mcf-* methods
  GammaTest test = GammaTest::spectral;
};

struct RunConfig {
  StudyKind study = StudyKind::roundtrip;
  StudyConfig lab;
  StabilitySettings stability;
  std::string out;  // absolute once resolved
};

/// Study-specific defaults (guidance sweep, seeds, ladders) before any file
/// or flag is applied.
RunConfig default_run_config(StudyKind study);

/// Solver by preset name ("all" is not handled here).
SolverSpec parse_solver_name(std::string_view name);
/// Expands "all" and "budget" to the preset lists.
std::vector<SolverSpec> parse_solver_list(const std::vector<std::string>& names);

/// Preset `name` with overrides from a JSON object (solver entry keys).
SolverSpec solver_from_json_text(std::string_view name, std::string_view overrides);
/// Schedule from a JSON object (config "schedule" keys); empty text gives the default.
NoiseSchedule schedule_from_json_text(std::string_view text);

/// Overlay a JSON document onto `cfg`. Unknown keys and ill-typed values
/// throw InvalidParams naming the offending path.
void apply_config_json(RunConfig& cfg, std::string_view json_text);
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Resolve the output directory to an absolute path and validate the study.
void finalize_config(RunConfig& cfg);

}  // namespace revode
