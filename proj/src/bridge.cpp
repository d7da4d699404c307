// SPDX-License-Identifier: Apache-2.0
#include "revode/bridge.hpp"

#include "revode/config.hpp"
#include "revode/error.hpp"
#include "revode/stepper.hpp"

namespace revode::bridge {

FieldModel bind_field(FlatEpsFn fn, int dim) {
  if (!fn) throw InvalidParams("bind_field needs a callable");
  if (dim < 1) throw InvalidParams("bind_field needs dim >= 1");
  auto wrapped = [fn = std::move(fn), dim](const Vec& x, double t, const std::string& cond) {
    Vec out(dim);
    fn(x.data(), dim, t, cond.c_str(), out.data());
    return out;
  };
  return FieldModel::callback(std::move(wrapped), dim);
}

RunResult run(const RunRequest& req, const FieldModel& field) {
  RunResult res;
  try {
    SolverSpec spec = solver_from_json_text(req.solver, req.params_json);
    if (!req.grid_variable.empty()) spec.grid_variable = variable_from_string(req.grid_variable);
    spec.validate();
    const NoiseSchedule schedule = schedule_from_json_text(req.schedule_json);
    if (req.steps < 1) throw InvalidParams("steps must be >= 1");
    if (req.x0.size() != static_cast<std::size_t>(field.dim()))
      throw InvalidParams("x0 has " + std::to_string(req.x0.size()) + " values, field dimension is " +
                          std::to_string(field.dim()));

    GuidanceConfig guidance;
    guidance.scale = req.guidance;
    guidance.source = guidance.target = req.condition;
    guidance.validate(field);
    const Phase phase = req.backward ? Phase::inversion : Phase::sampling;
    const EpsFn eps = bind_eps(field, guidance, phase);

    const TimeGrid grid = build_grid(schedule, spec.grid_variable, req.steps, req.strength);
    SolverSession session(spec, schedule, grid, field.needs_time());
    const Vec x0 = Eigen::Map<const Vec>(req.x0.data(), static_cast<Eigen::Index>(req.x0.size()));
    session.start(x0, req.backward ? grid.steps() : 0, eps);
    const Trajectory tr =
        integrate(session, eps, req.backward ? Direction::backward : Direction::forward);

    res.grid_values = tr.grid_values;
    for (const Vec& s : tr.states) res.states.insert(res.states.end(), s.data(), s.data() + s.size());
    res.nfe = tr.nfe;
    res.evaluations = tr.evaluations;
    if (tr.diverged) {
      res.status = Status::diverged;
      res.message = tr.message;
      res.step = static_cast<long>(tr.failed_step);
    }
  } catch (const StepError& e) {
    res.status = Status::step_error;
    res.message = e.what();
    res.step = static_cast<long>(e.step());
  } catch (const std::exception& e) {
    res.status = Status::invalid;
    res.message = e.what();
  }
  return res;
}

}  // namespace revode::bridge
