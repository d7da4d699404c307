// SPDX-License-Identifier: Apache-2.0
#include "revode/formulation.hpp"

#include <cmath>
#include <optional>
#include <utility>

#include "revode/error.hpp"

namespace revode {

Variable OdeFormulation::variable() const {
  switch (param) {
    case Parametrisation::t_original: return Variable::t;
    case Parametrisation::lambda_eps:
    case Parametrisation::lambda_x0: return Variable::lambda;
    case Parametrisation::ratio_ddim: return Variable::ratio;
  }
  return Variable::t;
}

void OdeFormulation::validate() const {
  if (treatment == Treatment::semilinear &&
      (param == Parametrisation::t_original || param == Parametrisation::ratio_ddim))
    throw InvalidParams("semilinear treatment applies to lambda-eps and lambda-x0 only");
}

std::string OdeFormulation::name() const {
  std::string out;
  switch (param) {
    case Parametrisation::t_original: out = "t-original"; break;
    case Parametrisation::lambda_eps: out = "lambda-eps"; break;
    case Parametrisation::lambda_x0: out = "lambda-x0"; break;
    case Parametrisation::ratio_ddim: return "ratio-ddim";
  }
  return out + (treatment == Treatment::semilinear ? "-semilinear" : "-black-box");
}

OdeFormulation formulation_from_string(std::string_view name) {
  auto split = [&](std::string_view prefix, Parametrisation p) -> std::optional<OdeFormulation> {
    if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
    std::string_view rest = name.substr(prefix.size());
    if (rest.empty() || rest == "-black-box" || rest == "-bb")
      return OdeFormulation{p, Treatment::black_box};
    if (rest == "-semilinear" || rest == "-sl") return OdeFormulation{p, Treatment::semilinear};
    return std::nullopt;
  };
  if (name == "ratio-ddim") return {Parametrisation::ratio_ddim, Treatment::black_box};
  for (auto [prefix, p] : {std::pair{std::string_view("t-original"), Parametrisation::t_original},
                           std::pair{std::string_view("lambda-eps"), Parametrisation::lambda_eps},
                           std::pair{std::string_view("lambda-x0"), Parametrisation::lambda_x0}}) {
    if (auto f = split(prefix, p)) {
      f->validate();
      return *f;
    }
  }
  throw InvalidParams("unknown formulation '" + std::string(name) + "'");
}

FormulationAdapter::FormulationAdapter(OdeFormulation form, const NoiseSchedule& schedule,
                                       bool needs_time)
    : form_(form), schedule_(&schedule), needs_time_(needs_time) {
  form_.validate();
}

NoiseLevel FormulationAdapter::level(double s) const {
  return schedule_->level(form_.variable(), s, needs_time_);
}

double FormulationAdapter::scale(const NoiseLevel& lv) const {
  if (form_.treatment == Treatment::semilinear)
    return form_.param == Parametrisation::lambda_x0 ? lv.sigma : lv.alpha;
  return form_.param == Parametrisation::ratio_ddim ? lv.alpha : 1.0;
}

Vec FormulationAdapter::rhs(const EpsFn& eps, const NoiseLevel& lv, const Vec& u) const {
  const double sc = scale(lv);
  const Vec x = sc * u;
  const Vec e = eps(x, lv);
  if (e.size() != x.size()) throw Error("noise prediction has wrong dimension");
  const bool semi = form_.treatment == Treatment::semilinear;
  switch (form_.param) {
    case Parametrisation::t_original:
      return schedule_->dlog_alpha_dt(lv.t) * (x - e / lv.sigma);
    case Parametrisation::lambda_eps:
      if (semi) return (-lv.sigma / lv.alpha) * e;
      return lv.sigma * lv.sigma * x - lv.sigma * e;
    case Parametrisation::lambda_x0: {
      const Vec x0 = eps_to_x0(lv, x, e);
      if (semi) return (lv.alpha / lv.sigma) * x0;
      return lv.alpha * x0 - lv.alpha * lv.alpha * x;
    }
    case Parametrisation::ratio_ddim:
      return e;
  }
  return e;
}

}  // namespace revode
