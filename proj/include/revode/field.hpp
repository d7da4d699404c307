// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "revode/linalg.hpp"
#include "revode/schedule.hpp"

namespace revode {

/// Reserved id of the unconditional (empty prompt) condition.
inline constexpr std::string_view kNullCondition = "null";

enum class FieldKind { gaussian, mixture, rough, callback };

std::string_view to_string(FieldKind k);
FieldKind field_kind_from_string(std::string_view name);

struct MixtureComponent {
  double weight = 1.0;
  Vec mean;
  double s0 = 0.0;
};

/// Per-condition parameters. Gaussian and rough fields use (mean, s0);
/// mixtures use `components`.
struct Condition {
  std::string id;
  Vec mean;
  double s0 = 0.0;
  std::vector<MixtureComponent> components;
};

/// Oscillatory perturbation added to the Gaussian denoiser by the rough field.
/// `smoothing` scales the amplitude: 0 gives back the smooth Gaussian field.
struct RoughParams {
  double amplitude = 0.15;
  double frequency = 3.0;
  double time_frequency = 1.0;
  double smoothing = 1.0;
};

/// Host-provided noise predictor: (x, t, condition id) -> eps.
using EpsCallback = std::function<Vec(const Vec& x, double t, const std::string& condition)>;

/// Conditioned noise-prediction field eps(x, t, c). Immutable once built;
/// evaluation is a pure function of its arguments.
class FieldModel {
 public:
  static FieldModel gaussian(int dim);
  static FieldModel mixture(int dim);
  static FieldModel rough(int dim, RoughParams params = {});
  static FieldModel callback(EpsCallback fn, int dim);

  FieldModel& add_condition(std::string id, Vec mean, double s0);
  FieldModel& add_mixture_condition(std::string id, std::vector<MixtureComponent> components);

  FieldKind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool needs_time() const { return kind_ == FieldKind::callback; }
  bool has_condition(std::string_view id) const;
  const Condition& condition(std::string_view id) const;
  const std::vector<Condition>& conditions() const { return conditions_; }
  const RoughParams& rough_params() const { return rough_; }

  /// Copy with a different oscillation smoothing factor (rough fields only).
  FieldModel with_smoothing(double rho) const;

  Vec eps(const Vec& x, const NoiseLevel& level, std::string_view condition) const;

 private:
  FieldModel(FieldKind kind, int dim) : kind_(kind), dim_(dim) {}
  std::size_t index_of(std::string_view id) const;
  Vec gaussian_eps(const Vec& x, const NoiseLevel& lv, const Vec& mean, double s0) const;

  FieldKind kind_;
  int dim_;
  std::vector<Condition> conditions_;
  RoughParams rough_;
  EpsCallback callback_;
};

enum class GuidanceMode { plain, npi_inversion, proximal };
enum class Phase { inversion, sampling };

std::string_view to_string(GuidanceMode m);
GuidanceMode guidance_mode_from_string(std::string_view name);

/// Classifier-free guidance configuration.
struct GuidanceConfig {
  double scale = 1.0;
  GuidanceMode mode = GuidanceMode::plain;
  double quantile = 0.7;
  std::string source = "c";
  std::string target = "c";
  std::string null_id = std::string(kNullCondition);

  void validate(const FieldModel& model) const;
};

Vec guided_eps(const FieldModel& model, const GuidanceConfig& guidance, const Vec& x,
               const NoiseLevel& level, Phase phase);

/// Bound noise predictor used by the solvers.
using EpsFn = std::function<Vec(const Vec& x, const NoiseLevel& level)>;

EpsFn bind_eps(const FieldModel& model, const GuidanceConfig& guidance, Phase phase);

/// Data prediction x0 = (x - sigma eps) / alpha and its inverse.
Vec eps_to_x0(const NoiseLevel& level, const Vec& x, const Vec& eps);
Vec x0_to_eps(const NoiseLevel& level, const Vec& x, const Vec& x0);

}  // namespace revode
