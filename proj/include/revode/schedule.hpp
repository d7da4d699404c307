// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

namespace revode {

enum class ScheduleKind { linear_beta, cosine, discrete };

/// Time variables a grid or ODE can be expressed in.
///  - t      : diffusion time
///  - lambda : half log-SNR, log(alpha / sigma)
///  - ratio  : sigma / alpha = exp(-lambda)
enum class Variable { t, lambda, ratio };

std::string_view to_string(Variable v);
Variable variable_from_string(std::string_view name);

/// Snapshot of the schedule at one point. `t` is NaN when it was not requested.
struct NoiseLevel {
  double t = std::numeric_limits<double>::quiet_NaN();
  double lambda = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;

  double ratio() const { return sigma / alpha; }
  double value(Variable v) const;
};

/// alpha and sigma of a VP schedule depend on lambda alone.
NoiseLevel level_from_lambda(double lambda);
NoiseLevel level_from_ratio(double ratio);

/// Variance-preserving schedule with alpha^2 + sigma^2 = 1.
///
/// sigma is never stored; it is derived from log(alpha) as
/// sqrt(-expm1(2 log alpha)), which keeps the VP identity at full precision
/// near t = 0.
class NoiseSchedule {
 public:
  struct Knot {
    double t;
    double log_alpha;
  };

  static NoiseSchedule linear_beta(double beta_min = 0.1, double beta_max = 20.0,
                                   double horizon = 1.0);
  static NoiseSchedule cosine(double offset = 0.008, double horizon = 1.0);
  static NoiseSchedule discrete(std::vector<Knot> knots);

  ScheduleKind kind() const { return kind_; }
  double horizon() const { return horizon_; }

  /// Lower clamp for grids; defaults to 1e-3 of the horizon.
  double t_min() const { return t_min_; }
  void set_t_min(double t_min);

  /// Largest admissible time (alpha must stay positive).
  double t_max() const;

  double log_alpha(double t) const;
  double dlog_alpha_dt(double t) const;
  double alpha(double t) const;
  double sigma(double t) const;
  double lambda(double t) const;
  double ratio(double t) const;

  /// Inverse of lambda(t) by bisection; 1e-12 tolerance within 200 iterations.
  double t_of_lambda(double lambda) const;

  NoiseLevel level_at_t(double t) const;
  NoiseLevel level(Variable var, double value, bool with_time = true) const;

  double beta_min() const { return p0_; }
  double beta_max() const { return p1_; }
  double cosine_offset() const { return p0_; }
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  NoiseSchedule() = default;
  void check_t(double t) const;
  double t_lower_bound() const;

  ScheduleKind kind_ = ScheduleKind::linear_beta;
  double horizon_ = 1.0;
  double t_min_ = 1e-3;
  double p0_ = 0.0;
  double p1_ = 0.0;
  std::vector<Knot> knots_;
};

ScheduleKind schedule_kind_from_string(std::string_view name);

/// Convert `value` between t, lambda and ratio.
double reparametrize(const NoiseSchedule& schedule, double value, Variable from, Variable to);

/// Traversal order of a grid: sampling runs from the noise end (large t)
/// towards the data end, inversion the other way.
enum class GridDirection { sampling, inversion };

/// Discretisation of [t_min, strength * T] that is uniform in `variable`.
struct TimeGrid {
  Variable variable = Variable::t;
  double strength = 1.0;
  GridDirection direction = GridDirection::sampling;
  std::vector<double> nodes;        // values in `variable`, in traversal order
  std::vector<NoiseLevel> levels;   // full schedule state at every node

  std::size_t steps() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  std::size_t size() const { return nodes.size(); }
};

TimeGrid build_grid(const NoiseSchedule& schedule, Variable variable, std::size_t steps,
                    double strength = 1.0, GridDirection direction = GridDirection::sampling);

}  // namespace revode
