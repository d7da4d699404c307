// SPDX-License-Identifier: Apache-2.0
#include "revode/stepper.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "revode/error.hpp"
#include "revode/steps.hpp"

namespace revode {

namespace {
constexpr double kDivergenceNorm = 1e12;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string_view to_string(SolverKind k) {
  switch (k) {
    case SolverKind::ddim: return "ddim";
    case SolverKind::edict: return "edict";
    case SolverKind::bdia: return "bdia";
    case SolverKind::obelm: return "obelm";
    case SolverKind::rex: return "rex";
    case SolverKind::reversible_heun: return "rev-heun";
    case SolverKind::mccallum_foster: return "mcf";
    case SolverKind::ees: return "ees";
  }
  return "?";
}

bool algebraically_reversible(SolverKind k) {
  return k != SolverKind::ddim && k != SolverKind::ees;
}

void SolverSpec::validate() const {
  formulation.validate();
  tableau.check_consistency();
  if (!tableau.is_explicit()) throw InvalidParams("tableau must be explicit");
  switch (kind) {
    case SolverKind::edict:
      if (!(p > 0.0 && p <= 1.0)) throw InvalidParams("EDICT mixing p must lie in (0, 1]");
      break;
    case SolverKind::bdia:
      if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidParams("BDIA gamma must lie in [0, 1]");
      break;
    case SolverKind::rex:
    case SolverKind::mccallum_foster:
      if (!(zeta > 0.0 && zeta <= 1.0)) throw InvalidParams("coupling zeta must lie in (0, 1]");
      break;
    default:
      break;
  }
  const bool ratio_only = kind == SolverKind::ddim || kind == SolverKind::edict ||
                          kind == SolverKind::bdia || kind == SolverKind::obelm ||
                          kind == SolverKind::rex;
  if (ratio_only && formulation.param != Parametrisation::ratio_ddim)
    throw InvalidParams(std::string(to_string(kind)) + " is defined on the ratio-ddim formulation");
}

std::string SolverSpec::params_string() const {
  std::string out;
  switch (kind) {
    case SolverKind::edict: out = "p=" + fmt(p) + ";"; break;
    case SolverKind::bdia: out = "gamma=" + fmt(gamma) + ";"; break;
    case SolverKind::rex:
    case SolverKind::mccallum_foster:
      out = "zeta=" + fmt(zeta) + ";base=" + tableau.label + ";";
      break;
    case SolverKind::ees: out = "tableau=" + tableau.label + ";"; break;
    default: break;
  }
  return out + "form=" + formulation.name() + ";grid=" + std::string(to_string(grid_variable));
}

SolverSpec solver_spec(std::string_view name) {
  SolverSpec s;
  s.label = std::string(name);
  const OdeFormulation ratio{Parametrisation::ratio_ddim, Treatment::black_box};
  const OdeFormulation x0_bb{Parametrisation::lambda_x0, Treatment::black_box};
  const OdeFormulation x0_sl{Parametrisation::lambda_x0, Treatment::semilinear};
  s.formulation = ratio;
  s.grid_variable = Variable::t;
  if (name == "ddim") {
    s.kind = SolverKind::ddim;
  } else if (name == "edict") {
    s.kind = SolverKind::edict;
  } else if (name == "bdia") {
    s.kind = SolverKind::bdia;
  } else if (name == "obelm") {
    s.kind = SolverKind::obelm;
  } else if (name == "rev-heun") {
    s.kind = SolverKind::reversible_heun;
    s.formulation = x0_bb;
  } else if (name == "mcf-euler" || name == "mcf-midpoint") {
    s.kind = SolverKind::mccallum_foster;
    s.formulation = x0_bb;
    s.tableau = name == "mcf-euler" ? euler_tableau() : midpoint_tableau();
  } else if (name == "rex-euler" || name == "rex-midpoint") {
    s.kind = SolverKind::rex;
    s.tableau = name == "rex-euler" ? euler_tableau() : midpoint_tableau();
  } else if (name == "ees25" || name == "ees27" || name == "rk4") {
    s.kind = SolverKind::ees;
    s.formulation = x0_sl;
    s.grid_variable = Variable::lambda;
    s.tableau = name == "ees25" ? ees25_tableau() : name == "ees27" ? ees27_tableau() : rk4_tableau();
  } else {
    throw InvalidParams("unknown solver '" + std::string(name) + "'");
  }
  return s;
}

std::vector<std::string> solver_names() {
  return {"ddim",      "edict",        "bdia",      "obelm",        "rev-heun", "mcf-euler",
          "mcf-midpoint", "rex-euler", "rex-midpoint", "ees25",     "ees27",    "rk4"};
}

std::vector<std::string> budget_solver_names() {
  return {"ddim",      "edict",        "bdia",      "obelm", "rev-heun", "mcf-euler",
          "mcf-midpoint", "rex-euler", "rex-midpoint", "ees25", "ees27"};
}

int nominal_cost(const SolverSpec& spec) {
  switch (spec.kind) {
    case SolverKind::ddim:
    case SolverKind::bdia:
    case SolverKind::obelm: return 1;
    case SolverKind::edict:
    case SolverKind::reversible_heun: return 2;
    case SolverKind::ees: return spec.tableau.stages();
    case SolverKind::rex:
    case SolverKind::mccallum_foster: return 2 * spec.tableau.stages();
  }
  return 1;
}

std::size_t steps_for_budget(const SolverSpec& spec, std::size_t budget) {
  const auto cost = static_cast<std::size_t>(nominal_cost(spec));
  if (budget == 0 || budget % cost != 0)
    throw InvalidParams("budget " + std::to_string(budget) + " is not divisible by the " +
                        std::to_string(cost) + " evaluations per step of " + spec.label);
  return budget / cost;
}

SolverSession::SolverSession(SolverSpec spec, const NoiseSchedule& schedule, TimeGrid grid,
                             bool field_needs_time)
    : spec_(std::move(spec)),
      schedule_(&schedule),
      grid_(std::move(grid)),
      adapter_(spec_.formulation, schedule,
               field_needs_time || spec_.formulation.param == Parametrisation::t_original) {
  spec_.validate();
  if (grid_.size() < 2) throw InvalidParams("grid needs at least two nodes");
  s_.reserve(grid_.size());
  for (const NoiseLevel& lv : grid_.levels) s_.push_back(lv.value(adapter_.variable()));
}

Vec SolverSession::to_x(std::size_t node, const Vec& u) const {
  return adapter_.scale(grid_.levels[node]) * u;
}

Vec SolverSession::from_x(std::size_t node, const Vec& x) const {
  return x / adapter_.scale(grid_.levels[node]);
}

Vec SolverSession::rhs(const EpsFn& eps, std::size_t node, const Vec& u) {
  ++evals_;
  return adapter_.rhs(eps, grid_.levels[node], u);
}

Vec SolverSession::rhs_at(const EpsFn& eps, double s, const Vec& u) {
  const std::size_t lo = node_ == 0 ? 0 : node_ - 1;
  const std::size_t hi = std::min(node_ + 1, grid_.size() - 1);
  for (std::size_t k = lo; k <= hi; ++k)
    if (s_[k] == s) return rhs(eps, k, u);
  ++evals_;
  return adapter_.rhs(eps, s, u);
}

Vec SolverSession::increment(const EpsFn& eps, double s, const Vec& u, double h) {
  auto f = [&](double si, const Vec& y) { return rhs_at(eps, si, y); };
  return steps::rk_increment<Vec>(spec_.tableau, f, s, u, h);
}

void SolverSession::start(const Vec& x, std::size_t node, const EpsFn& eps) {
  if (node >= grid_.size()) throw InvalidParams("start node outside grid");
  if (!x.allFinite()) throw InvalidParams("initial state must be finite");
  node_ = node;
  u_ = from_x(node, x);
  aux_.resize(0);
  k_.resize(0);
  neighbour_ = Neighbour::none;
  switch (spec_.kind) {
    case SolverKind::edict:
    case SolverKind::rex:
    case SolverKind::mccallum_foster:
      aux_ = u_;
      break;
    case SolverKind::reversible_heun:
      aux_ = u_;
      k_ = rhs(eps, node, u_);
      break;
    default:
      break;
  }
  started_ = true;
}

Vec SolverSession::state() const {
  if (!started_) throw Error("session not started");
  return to_x(node_, u_);
}

std::optional<Vec> SolverSession::aux() const {
  if (!started_ || aux_.size() == 0) return std::nullopt;
  switch (neighbour_) {
    case Neighbour::behind: return to_x(node_ - 1, aux_);
    case Neighbour::ahead: return to_x(node_ + 1, aux_);
    case Neighbour::none: return to_x(node_, aux_);
  }
  return std::nullopt;
}

void SolverSession::check_state() const {
  const Vec x = state();
  if (!x.allFinite()) throw DivergenceError("state became non-finite");
  if (max_abs(x) > kDivergenceNorm) throw DivergenceError("state norm exceeded 1e12");
  if (aux_.size() && !aux_.allFinite()) throw DivergenceError("auxiliary state became non-finite");
}

void SolverSession::two_step(const EpsFn& eps, bool fwd) {
  const std::size_t c = node_;
  const std::size_t target = fwd ? c + 1 : c - 1;
  const Neighbour shift_from = fwd ? Neighbour::ahead : Neighbour::behind;
  const Neighbour recurse_from = fwd ? Neighbour::behind : Neighbour::ahead;
  const Neighbour after = fwd ? Neighbour::behind : Neighbour::ahead;

  if (neighbour_ == shift_from) {
    std::swap(u_, aux_);
  } else if (neighbour_ == Neighbour::none) {
    Vec e = rhs(eps, c, u_);
    aux_ = u_;
    u_ = u_ + (s_[target] - s_[c]) * e;
  } else if (neighbour_ == recurse_from) {
    // aux_ holds x_{c-1} when stepping forward and x_{c+1} when stepping backward.
    const Vec e = rhs(eps, c, u_);
    Vec next;
    if (spec_.kind == SolverKind::obelm) {
      const auto k = steps::obelm_coefficients(s_[c] - s_[c - 1], s_[c + 1] - s_[c]);
      next = fwd ? steps::obelm_forward<Vec>(k, aux_, u_, e)
                 : steps::obelm_backward<Vec>(k, aux_, u_, e);
    } else {
      const double a_prev = grid_.levels[c - 1].alpha;
      const double a_next = grid_.levels[c + 1].alpha;
      const Vec xc = to_x(c, u_);
      const Vec d_back = a_prev * (u_ + (s_[c - 1] - s_[c]) * e) - xc;
      const Vec d_fwd = a_next * (u_ + (s_[c + 1] - s_[c]) * e) - xc;
      if (fwd) {
        next = from_x(c + 1, steps::bdia_forward<Vec>(spec_.gamma, to_x(c - 1, aux_), xc,
                                                      d_back, d_fwd));
      } else {
        next = from_x(c - 1, steps::bdia_backward<Vec>(spec_.gamma, to_x(c + 1, aux_), xc,
                                                       d_back, d_fwd));
      }
    }
    aux_ = u_;
    u_ = std::move(next);
  }
  neighbour_ = after;
  node_ = target;
}

void SolverSession::forward(const EpsFn& eps) {
  if (!started_) throw Error("session not started");
  if (node_ + 1 >= grid_.size()) throw OutOfRange("no grid node ahead of the current one");
  const std::size_t c = node_;
  const double s = s_[c];
  const double s1 = s_[c + 1];
  const double h = s1 - s;
  auto f = [&](double si, const Vec& y) { return rhs_at(eps, si, y); };
  auto psi = [&](double si, const Vec& y, double hi) { return increment(eps, si, y, hi); };
  switch (spec_.kind) {
    case SolverKind::ddim:
      u_ = u_ + h * rhs(eps, c, u_);
      break;
    case SolverKind::ees:
      u_ = u_ + increment(eps, s, u_, h);
      break;
    case SolverKind::edict: {
      auto st = steps::edict_forward<Vec>(f, {u_, aux_}, spec_.p, s, h);
      u_ = std::move(st.x);
      aux_ = std::move(st.x_hat);
      break;
    }
    case SolverKind::rex:
    case SolverKind::mccallum_foster: {
      auto st = steps::coupled_forward<Vec>(psi, {u_, aux_}, spec_.zeta, s, s1, h);
      u_ = std::move(st.x);
      aux_ = std::move(st.x_hat);
      break;
    }
    case SolverKind::reversible_heun: {
      auto st = steps::reversible_heun_forward<Vec>(f, {u_, aux_, k_}, s1, h);
      u_ = std::move(st.x);
      aux_ = std::move(st.x_hat);
      k_ = std::move(st.k);
      break;
    }
    case SolverKind::bdia:
    case SolverKind::obelm:
      two_step(eps, true);
      check_state();
      return;
  }
  node_ = c + 1;
  check_state();
}

void SolverSession::backward(const EpsFn& eps) {
  if (!started_) throw Error("session not started");
  if (node_ == 0) throw OutOfRange("no grid node behind the current one");
  const std::size_t c = node_;
  const double s0 = s_[c - 1];
  const double s1 = s_[c];
  const double h = s1 - s0;
  auto f = [&](double si, const Vec& y) { return rhs_at(eps, si, y); };
  auto psi = [&](double si, const Vec& y, double hi) { return increment(eps, si, y, hi); };
  switch (spec_.kind) {
    case SolverKind::ddim:
      u_ = u_ - h * rhs(eps, c, u_);
      break;
    case SolverKind::ees:
      u_ = u_ + increment(eps, s1, u_, -h);
      break;
    case SolverKind::edict: {
      auto st = steps::edict_backward<Vec>(f, {u_, aux_}, spec_.p, s0, h);
      u_ = std::move(st.x);
      aux_ = std::move(st.x_hat);
      break;
    }
    case SolverKind::rex:
    case SolverKind::mccallum_foster: {
      auto st = steps::coupled_backward<Vec>(psi, {u_, aux_}, spec_.zeta, s0, s1, h);
      u_ = std::move(st.x);
      aux_ = std::move(st.x_hat);
      break;
    }
    case SolverKind::reversible_heun: {
      auto st = steps::reversible_heun_backward<Vec>(f, {u_, aux_, k_}, s0, h);
      u_ = std::move(st.x);
      aux_ = std::move(st.x_hat);
      k_ = std::move(st.k);
      break;
    }
    case SolverKind::bdia:
    case SolverKind::obelm:
      two_step(eps, false);
      check_state();
      return;
  }
  node_ = c - 1;
  check_state();
}

Trajectory integrate(SolverSession& session, const EpsFn& eps, Direction dir,
                     std::optional<std::size_t> steps, bool record) {
  const std::size_t last = session.grid().size() - 1;
  const std::size_t available = dir == Direction::forward ? last - session.node() : session.node();
  const std::size_t n = steps.value_or(available);
  if (n > available) throw OutOfRange("not enough grid nodes for the requested steps");

  Trajectory tr;
  tr.solver = session.spec().label;
  tr.params = session.spec().params_string();
  tr.variable = session.grid().variable;
  const std::size_t evals0 = session.evaluations();

  auto push = [&](bool force) {
    Vec x = session.state();
    tr.max_norm = std::max(tr.max_norm, max_abs(x));
    if (!record && !force) return;
    tr.grid_values.push_back(session.grid().nodes[session.node()]);
    if (auto a = session.aux()) tr.aux.push_back(std::move(*a));
    tr.states.push_back(std::move(x));
  };
  push(true);

  for (std::size_t i = 0; i < n; ++i) {
    try {
      if (dir == Direction::forward)
        session.forward(eps);
      else
        session.backward(eps);
    } catch (const DivergenceError& e) {
      tr.diverged = true;
      tr.failed_step = static_cast<std::ptrdiff_t>(i);
      tr.message = "step " + std::to_string(i) + ": " + e.what();
      break;
    } catch (const StepError&) {
      throw;
    } catch (const std::exception& e) {
      throw StepError(i, e.what());
    }
    push(i + 1 == n);
  }
  tr.evaluations = session.evaluations() - evals0;
  tr.nfe = (tr.diverged ? static_cast<std::size_t>(tr.failed_step) : n) *
           static_cast<std::size_t>(nominal_cost(session.spec()));
  return tr;
}

void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
  const std::size_t d = tr.states.empty() ? 0 : static_cast<std::size_t>(tr.states[0].size());
  const bool has_aux = !tr.aux.empty() && tr.aux.size() == tr.states.size();
  os << "step,grid_value";
  for (std::size_t j = 0; j < d; ++j) os << ",state_" << j;
  if (has_aux)
    for (std::size_t j = 0; j < d; ++j) os << ",aux_" << j;
  os << "\n";
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    os << i << "," << fmt(tr.grid_values[i]);
    for (std::size_t j = 0; j < d; ++j) os << "," << fmt(tr.states[i][j]);
    if (has_aux)
      for (std::size_t j = 0; j < d; ++j) os << "," << fmt(tr.aux[i][j]);
    os << "\n";
  }
}

std::string trajectory_json(const Trajectory& tr) {
  nlohmann::ordered_json j;
  j["solver"] = tr.solver;
  j["params"] = tr.params;
  j["variable"] = std::string(to_string(tr.variable));
  j["steps"] = tr.states.empty() ? 0 : tr.states.size() - 1;
  j["evaluations"] = tr.evaluations;
  j["nfe"] = tr.nfe;
  j["diverged"] = tr.diverged;
  if (tr.diverged) {
    j["failed_step"] = tr.failed_step;
    j["message"] = tr.message;
  }
  j["max_norm"] = tr.max_norm;
  return j.dump(2);
}

}  // namespace revode
