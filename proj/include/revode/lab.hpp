// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "revode/field.hpp"
#include "revode/report.hpp"
#include "revode/schedule.hpp"
#include "revode/stepper.hpp"

namespace revode {

/// splitmix64 stream with Box-Muller normals. Streams are fully determined
/// by the seed, independent of the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // in (0, 1)
  double normal();
  Vec normal_vec(int dim);

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Independent stream seed for cell `index` of a study run with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Analytic test problem. Conditions: "src", "trg" and the null condition,
/// all with spread s0. The null mean is zero; trg = src + separation * |src|
/// along a fixed unit direction.
struct LabField {
  FieldKind kind = FieldKind::gaussian;
  int dim = 8;
  double s0 = 0.5;
  double mean_scale = 1.0;
  RoughParams rough;
  std::uint64_t layout_seed = 2024;
};

FieldModel make_lab_field(const LabField& spec, double separation = 0.0);

struct StudyConfig {
  std::string id = "study";
  NoiseSchedule schedule = NoiseSchedule::linear_beta();
  LabField field;
  std::vector<SolverSpec> solvers;
  std::size_t nfe_budget = 48;       // used when `steps` is empty
  std::vector<std::size_t> steps;    // explicit ladder, shared by all solvers
  std::vector<double> guidance_scales{1.0};
  std::vector<double> smoothing{1.0};
  std::vector<double> separations{0.0, 1.0, 4.0, 16.0};
  GuidanceMode guidance_mode = GuidanceMode::plain;
  double quantile = 0.7;
  double strength = 1.0;
  std::size_t seeds = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::size_t oracle_refinement = 100;
  double oracle_tolerance = 1e-12;
  double reversible_tolerance = 1e-9;
};

/// Step counts used for `spec` under `cfg` (ladder or budget).
std::vector<std::size_t> study_steps(const StudyConfig& cfg, const SolverSpec& spec);

/// Global terminal error against a fine RK4 oracle on the same formulation,
/// with slope fits per solver.
ExperimentReport convergence_study(const StudyConfig& cfg);

/// Forward N steps then backward N steps from a noise-end sample.
ExperimentReport roundtrip_study(const StudyConfig& cfg);

/// Invert data samples under guidance and re-sample with the same condition.
ExperimentReport reconstruction_experiment(const StudyConfig& cfg);

/// Invert under "src", re-sample under "trg" across condition separations;
/// also probes the stiff linear test problem at z = -1.5.
ExperimentReport edit_experiment(const StudyConfig& cfg);

/// Moments of the inverted terminal states x_T / sigma_T.
ExperimentReport latent_stats(const StudyConfig& cfg);

/// Exact probability-flow map of a Gaussian condition (mean, s0) from level
/// `from` to level `to`.
Vec gaussian_flow(const Vec& x, const Vec& mean, double s0, const NoiseLevel& from,
                  const NoiseLevel& to);

double spearman(const std::vector<double>& a, const std::vector<double>& b);
double median(std::vector<double> v);

}  // namespace revode
