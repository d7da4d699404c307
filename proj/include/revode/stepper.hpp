// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revode/field.hpp"
#include "revode/formulation.hpp"
#include "revode/schedule.hpp"
#include "revode/tableau.hpp"

namespace revode {

enum class SolverKind { ddim, edict, bdia, obelm, rex, reversible_heun, mccallum_foster, ees };

std::string_view to_string(SolverKind k);

/// True for schemes whose backward step is the exact algebraic inverse.
bool algebraically_reversible(SolverKind k);

/// Solver choice plus parameters. `tableau` is the scheme for ees and the base
/// solver for mccallum_foster / rex.
struct SolverSpec {
  SolverKind kind = SolverKind::ddim;
  std::string label;
  double p = 0.93;
  double gamma = 0.96;
  double zeta = 0.999;
  ButcherTableau tableau = euler_tableau();
  OdeFormulation formulation{Parametrisation::ratio_ddim, Treatment::black_box};
  Variable grid_variable = Variable::t;

  /// Throws InvalidParams for out-of-range parameters or unsupported formulations.
  void validate() const;
  std::string params_string() const;
};

/// Named presets: ddim, edict, bdia, obelm, rev-heun, mcf-euler, mcf-midpoint,
/// rex-euler, rex-midpoint, ees25, ees27, rk4.
SolverSpec solver_spec(std::string_view name);
std::vector<std::string> solver_names();
/// The solvers compared under the 48-evaluation budget.
std::vector<std::string> budget_solver_names();

/// Field evaluations charged per step when matching an evaluation budget.
int nominal_cost(const SolverSpec& spec);
/// Steps that spend exactly `budget` evaluations; InvalidParams if indivisible.
std::size_t steps_for_budget(const SolverSpec& spec, std::size_t budget);

/// Mutable stepping state of one solver on one grid. Node indices follow the
/// grid's traversal order; forward() moves to node + 1, backward() to node - 1.
class SolverSession {
 public:
  SolverSession(SolverSpec spec, const NoiseSchedule& schedule, TimeGrid grid,
                bool field_needs_time = false);

  /// Place state x at `node`; auxiliaries are initialised from x.
  void start(const Vec& x, std::size_t node, const EpsFn& eps);
  void forward(const EpsFn& eps);
  void backward(const EpsFn& eps);

  std::size_t node() const { return node_; }
  const TimeGrid& grid() const { return grid_; }
  const SolverSpec& spec() const { return spec_; }
  std::size_t evaluations() const { return evals_; }

  Vec state() const;
  /// Auxiliary state in x coordinates (EDICT y, coupled x_hat, two-step neighbour).
  std::optional<Vec> aux() const;

 private:
  enum class Neighbour { none, behind, ahead };

  Vec rhs(const EpsFn& eps, std::size_t node, const Vec& u);
  Vec rhs_at(const EpsFn& eps, double s, const Vec& u);
  Vec increment(const EpsFn& eps, double s, const Vec& u, double h);
  Vec to_x(std::size_t node, const Vec& u) const;
  Vec from_x(std::size_t node, const Vec& x) const;
  void two_step(const EpsFn& eps, bool forward);
  void check_state() const;

  SolverSpec spec_;
  const NoiseSchedule* schedule_;
  TimeGrid grid_;
  FormulationAdapter adapter_;
  std::vector<double> s_;  // formulation variable at each node
  std::size_t node_ = 0;
  std::size_t evals_ = 0;
  bool started_ = false;

  Vec u_;
  Vec aux_;  // EDICT y, coupled x_hat, Heun x_hat, two-step neighbour
  Vec k_;    // reversible Heun cached slope
  Neighbour neighbour_ = Neighbour::none;
};

enum class Direction { forward, backward };

struct Trajectory {
  std::string solver;
  std::string params;
  Variable variable = Variable::t;
  std::vector<double> grid_values;
  std::vector<Vec> states;
  std::vector<Vec> aux;
  std::size_t evaluations = 0;
  std::size_t nfe = 0;  // nominal, steps * nominal_cost
  bool diverged = false;
  std::ptrdiff_t failed_step = -1;
  std::string message;
  double max_norm = 0.0;

  const Vec& terminal() const { return states.back(); }
};

/// Run `steps` steps (default: to the end of the grid in that direction).
/// Divergence stops the run and is recorded; other field errors are rethrown
/// as StepError with the 0-based step index.
Trajectory integrate(SolverSession& session, const EpsFn& eps, Direction dir,
                     std::optional<std::size_t> steps = std::nullopt, bool record = true);

void write_trajectory_csv(const Trajectory& tr, std::ostream& os);
std::string trajectory_json(const Trajectory& tr);

}  // namespace revode
