// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "revode/field.hpp"
#include "revode/schedule.hpp"

namespace revode {

enum class Parametrisation { t_original, lambda_eps, lambda_x0, ratio_ddim };
enum class Treatment { black_box, semilinear };

/// Which ODE the solvers integrate, and in which coordinates.
///
///   t-original            dx/dt   = dlog(alpha)/dt (x - eps / sigma)
///   lambda-eps            dx/dl   = sigma^2 x - sigma eps
///     semilinear          u = x / alpha,  du/dl = -exp(-l) eps
///   lambda-x0             dx/dl   = -alpha^2 x + alpha x0
///     semilinear          u = x / sigma,  du/dl = exp(l) x0
///   ratio-ddim            u = x / alpha,  du/dr = eps   (r = sigma / alpha)
struct OdeFormulation {
  Parametrisation param = Parametrisation::lambda_x0;
  Treatment treatment = Treatment::semilinear;

  Variable variable() const;
  /// Throws InvalidParams for semilinear t-original or ratio-ddim.
  void validate() const;
  std::string name() const;
};

OdeFormulation formulation_from_string(std::string_view name);

/// Evaluates the right-hand side of a formulation in its own coordinates.
class FormulationAdapter {
 public:
  FormulationAdapter(OdeFormulation form, const NoiseSchedule& schedule, bool needs_time);

  const OdeFormulation& formulation() const { return form_; }
  Variable variable() const { return form_.variable(); }

  /// Schedule state at formulation-variable value s.
  NoiseLevel level(double s) const;

  /// x = scale(level) * u.
  double scale(const NoiseLevel& lv) const;

  Vec rhs(const EpsFn& eps, const NoiseLevel& lv, const Vec& u) const;
  Vec rhs(const EpsFn& eps, double s, const Vec& u) const { return rhs(eps, level(s), u); }

 private:
  OdeFormulation form_;
  const NoiseSchedule* schedule_;
  bool needs_time_;
};

}  // namespace revode
