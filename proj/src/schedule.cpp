// SPDX-License-Identifier: Apache-2.0
#include "revode/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "revode/error.hpp"

namespace revode {

std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::t: return "t";
    case Variable::lambda: return "lambda";
    case Variable::ratio: return "ratio";
  }
  return "?";
}

Variable variable_from_string(std::string_view name) {
  if (name == "t") return Variable::t;
  if (name == "lambda") return Variable::lambda;
  if (name == "ratio" || name == "sigma" || name == "u" || name == "tau") return Variable::ratio;
  throw InvalidParams("unknown time variable '" + std::string(name) + "'");
}

ScheduleKind schedule_kind_from_string(std::string_view name) {
  if (name == "linear-beta" || name == "analytic-linear-beta") return ScheduleKind::linear_beta;
  if (name == "cosine" || name == "analytic-cosine") return ScheduleKind::cosine;
  if (name == "discrete" || name == "discrete-interpolated") return ScheduleKind::discrete;
  throw InvalidParams("unknown schedule kind '" + std::string(name) + "'");
}

double NoiseLevel::value(Variable v) const {
  switch (v) {
    case Variable::t: return t;
    case Variable::lambda: return lambda;
    case Variable::ratio: return ratio();
  }
  return t;
}

NoiseLevel level_from_lambda(double lambda) {
  NoiseLevel lv;
  lv.lambda = lambda;
  lv.alpha = std::sqrt(1.0 / (1.0 + std::exp(-2.0 * lambda)));
  lv.sigma = std::sqrt(1.0 / (1.0 + std::exp(2.0 * lambda)));
  return lv;
}

NoiseLevel level_from_ratio(double ratio) {
  NoiseLevel lv;
  const double norm = std::hypot(1.0, ratio);
  lv.lambda = -std::log(ratio);
  lv.alpha = 1.0 / norm;
  lv.sigma = ratio / norm;
  return lv;
}

NoiseSchedule NoiseSchedule::linear_beta(double beta_min, double beta_max, double horizon) {
  if (!(horizon > 0.0)) throw InvalidParams("schedule horizon must be positive");
  if (!(beta_min >= 0.0) || !(beta_min < beta_max))
    throw InvalidParams("linear-beta schedule requires 0 <= beta_min < beta_max");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::linear_beta;
  s.horizon_ = horizon;
  s.t_min_ = 1e-3 * horizon;
  s.p0_ = beta_min;
  s.p1_ = beta_max;
  return s;
}

NoiseSchedule NoiseSchedule::cosine(double offset, double horizon) {
  if (!(horizon > 0.0)) throw InvalidParams("schedule horizon must be positive");
  if (!(offset > 0.0)) throw InvalidParams("cosine schedule offset must be positive");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::cosine;
  s.horizon_ = horizon;
  s.t_min_ = 1e-3 * horizon;
  s.p0_ = offset;
  return s;
}

NoiseSchedule NoiseSchedule::discrete(std::vector<Knot> knots) {
  if (knots.size() < 2) throw InvalidParams("discrete schedule needs at least two knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i].t) || !std::isfinite(knots[i].log_alpha))
      throw InvalidParams("discrete schedule knots must be finite");
    if (i > 0 && !(knots[i].t > knots[i - 1].t))
      throw InvalidParams("discrete schedule knot times must be strictly increasing");
    if (i > 0 && !(knots[i].log_alpha < knots[i - 1].log_alpha))
      throw InvalidParams("discrete schedule log-alpha must be strictly decreasing");
  }
  if (knots.front().log_alpha > 0.0) throw InvalidParams("discrete schedule needs alpha <= 1");
  if (!(knots.back().t > 0.0)) throw InvalidParams("schedule horizon must be positive");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::discrete;
  s.horizon_ = knots.back().t;
  s.t_min_ = knots.front().t + 1e-3 * (knots.back().t - knots.front().t);
  s.knots_ = std::move(knots);
  return s;
}

void NoiseSchedule::set_t_min(double t_min) {
  if (!(t_min > t_lower_bound()) || !(t_min < t_max()))
    throw InvalidParams("t_min must lie inside the schedule domain");
  t_min_ = t_min;
}

double NoiseSchedule::t_lower_bound() const {
  return kind_ == ScheduleKind::discrete ? knots_.front().t : 0.0;
}

double NoiseSchedule::t_max() const {
  // alpha reaches zero at the horizon of the cosine schedule.
  return kind_ == ScheduleKind::cosine ? horizon_ * (1.0 - 1e-3) : horizon_;
}

void NoiseSchedule::check_t(double t) const {
  if (!(t >= t_lower_bound()) || !(t <= t_max() * (1.0 + 1e-14)))
    throw OutOfRange("time " + std::to_string(t) + " outside schedule domain");
}

double NoiseSchedule::log_alpha(double t) const {
  check_t(t);
  switch (kind_) {
    case ScheduleKind::linear_beta:
      return -0.25 * t * t * (p1_ - p0_) - 0.5 * t * p0_;
    case ScheduleKind::cosine: {
      const double s = p0_;
      const double theta = 0.5 * std::numbers::pi * (t / horizon_ + s) / (1.0 + s);
      const double theta0 = 0.5 * std::numbers::pi * s / (1.0 + s);
      return std::log(std::cos(theta)) - std::log(std::cos(theta0));
    }
    case ScheduleKind::discrete: {
      auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                 [](double v, const Knot& k) { return v < k.t; });
      if (it == knots_.end()) return knots_.back().log_alpha;
      if (it == knots_.begin()) return knots_.front().log_alpha;
      const Knot& hi = *it;
      const Knot& lo = *(it - 1);
      const double w = (t - lo.t) / (hi.t - lo.t);
      return lo.log_alpha + w * (hi.log_alpha - lo.log_alpha);
    }
  }
  return 0.0;
}

double NoiseSchedule::dlog_alpha_dt(double t) const {
  check_t(t);
  switch (kind_) {
    case ScheduleKind::linear_beta:
      return -0.5 * t * (p1_ - p0_) - 0.5 * p0_;
    case ScheduleKind::cosine: {
      const double s = p0_;
      const double rate = 0.5 * std::numbers::pi / (horizon_ * (1.0 + s));
      const double theta = rate * (t + s * horizon_);
      return -rate * std::tan(theta);
    }
    case ScheduleKind::discrete: {
      auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                 [](double v, const Knot& k) { return v < k.t; });
      if (it == knots_.end()) --it;
      if (it == knots_.begin()) ++it;
      const Knot& hi = *it;
      const Knot& lo = *(it - 1);
      return (hi.log_alpha - lo.log_alpha) / (hi.t - lo.t);
    }
  }
  return 0.0;
}

double NoiseSchedule::alpha(double t) const { return std::exp(log_alpha(t)); }

double NoiseSchedule::sigma(double t) const {
  return std::sqrt(-std::expm1(2.0 * log_alpha(t)));
}

double NoiseSchedule::lambda(double t) const {
  const double la = log_alpha(t);
  return la - 0.5 * std::log(-std::expm1(2.0 * la));
}

double NoiseSchedule::ratio(double t) const { return std::exp(-lambda(t)); }

double NoiseSchedule::t_of_lambda(double target) const {
  if (!std::isfinite(target)) throw OutOfRange("lambda must be finite");
  double lo = t_lower_bound();
  double hi = t_max();
  const double lam_hi = lambda(hi);
  const double lam_lo = lambda(lo);  // +inf when alpha(lo) == 1
  if (target < lam_hi || target > lam_lo)
    throw OutOfRange("lambda " + std::to_string(target) + " outside schedule image");
  if (target == lam_hi) return hi;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (lambda(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  if (hi - lo > 1e-12 * std::max(1.0, hi))
    throw Error("lambda -> t bisection did not converge");
  return 0.5 * (lo + hi);
}

NoiseLevel NoiseSchedule::level_at_t(double t) const {
  NoiseLevel lv;
  const double la = log_alpha(t);
  lv.t = t;
  lv.alpha = std::exp(la);
  lv.sigma = std::sqrt(-std::expm1(2.0 * la));
  lv.lambda = la - std::log(lv.sigma);
  return lv;
}

NoiseLevel NoiseSchedule::level(Variable var, double value, bool with_time) const {
  switch (var) {
    case Variable::t:
      return level_at_t(value);
    case Variable::lambda: {
      NoiseLevel lv = level_from_lambda(value);
      if (with_time) lv.t = t_of_lambda(value);
      return lv;
    }
    case Variable::ratio: {
      if (!(value > 0.0)) throw OutOfRange("ratio must be positive");
      NoiseLevel lv = level_from_ratio(value);
      if (with_time) lv.t = t_of_lambda(lv.lambda);
      return lv;
    }
  }
  return {};
}

double reparametrize(const NoiseSchedule& schedule, double value, Variable from, Variable to) {
  if (from == to) return value;
  if (!std::isfinite(value)) throw OutOfRange("value must be finite");
  double lam = 0.0;
  switch (from) {
    case Variable::t:
      if (!(value > 0.0)) throw OutOfRange("t must be positive");
      lam = schedule.lambda(value);
      if (to == Variable::ratio) return schedule.ratio(value);
      break;
    case Variable::lambda:
      lam = value;
      break;
    case Variable::ratio:
      if (!(value > 0.0)) throw OutOfRange("ratio must be positive");
      lam = -std::log(value);
      break;
  }
  if (to == Variable::t) return schedule.t_of_lambda(lam);
  if (from != Variable::t) {
    // Validate against the image of the schedule.
    if (lam < schedule.lambda(schedule.t_max()))
      throw OutOfRange("value outside schedule image");
  }
  return to == Variable::lambda ? lam : std::exp(-lam);
}

TimeGrid build_grid(const NoiseSchedule& schedule, Variable variable, std::size_t steps,
                    double strength, GridDirection direction) {
  if (steps < 1) throw InvalidParams("grid needs at least one step");
  if (!(strength > 0.0) || !(strength <= 1.0))
    throw InvalidParams("strength must lie in (0, 1]");
  const double t_lo = schedule.t_min();
  const double t_hi = std::min(strength * schedule.horizon(), schedule.t_max());
  if (!(t_hi > t_lo)) throw InvalidParams("degenerate grid interval: s*T <= t_min");

  const double a = schedule.level_at_t(t_lo).value(variable);
  const double b = schedule.level_at_t(t_hi).value(variable);

  TimeGrid grid;
  grid.variable = variable;
  grid.strength = strength;
  grid.direction = direction;
  grid.nodes.resize(steps + 1);
  grid.levels.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    double v = k == steps ? b : a + (b - a) * (static_cast<double>(k) / static_cast<double>(steps));
    std::size_t slot = direction == GridDirection::inversion ? k : steps - k;
    grid.nodes[slot] = v;
  }
  for (std::size_t k = 0; k <= steps; ++k) {
    double v = grid.nodes[k];
    // Grid endpoints keep their exact clamp times.
    bool lo_end = (direction == GridDirection::inversion ? k == 0 : k == steps);
    bool hi_end = (direction == GridDirection::inversion ? k == steps : k == 0);
    if (variable != Variable::t && (lo_end || hi_end)) {
      NoiseLevel lv = schedule.level(variable, v, false);
      lv.t = lo_end ? t_lo : t_hi;
      grid.levels[k] = lv;
    } else {
      grid.levels[k] = schedule.level(variable, v, true);
    }
  }
  return grid;
}

}  // namespace revode
