// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <map>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "revode/error.hpp"
#include "revode/lab.hpp"
#include "revode/stepper.hpp"

using namespace revode;

namespace {

struct Setup {
  NoiseSchedule schedule = NoiseSchedule::linear_beta();
  FieldModel field = FieldModel::gaussian(4);
  Vec mu;
  double s0 = 0.5;
  Setup() {
    mu = Vec(4);
    mu << 1.0, -0.5, 0.25, 2.0;
    field.add_condition("c", mu, s0);
  }
  EpsFn eps() const {
    GuidanceConfig g;
    g.source = g.target = "c";
    return bind_eps(field, g, Phase::sampling);
  }
  Vec noise_sample(const TimeGrid& grid) const {
    Vec z(4);
    z << 0.3, -1.1, 0.8, 0.05;
    const auto& lv = grid.levels.front();
    return lv.alpha * mu + std::sqrt(lv.alpha * lv.alpha * s0 * s0 + lv.sigma * lv.sigma) * z;
  }
};

FieldModel rough_field() {
  LabField lf;
  lf.kind = FieldKind::rough;
  return make_lab_field(lf);
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("one DDIM step equals the x-space update") {
  Setup s;
  const auto grid = build_grid(s.schedule, Variable::t, 10);
  SolverSession sess(solver_spec("ddim"), s.schedule, grid);
  const auto eps = s.eps();
  const Vec x = s.noise_sample(grid);
  sess.start(x, 0, eps);
  sess.forward(eps);
  const auto &a = grid.levels[0], &b = grid.levels[1];
  const Vec e = oracle::gaussian_eps(x, a.alpha, a.sigma, s.mu, s.s0);
  const Vec ref = oracle::ddim_step(x, e, a.alpha, a.sigma, b.alpha, b.sigma);
  CHECK(rel(sess.state(), ref) < 1e-14);
  CHECK(sess.evaluations() == 1);
}

TEST_CASE("DDIM with a zero predictor rescales by alpha ratios") {
  const auto schedule = NoiseSchedule::linear_beta();
  FieldModel zero = FieldModel::callback([](const Vec& x, double, const std::string&) {
    return Vec(Vec::Zero(x.size()));
  }, 3);
  GuidanceConfig g;
  g.source = g.target = "c";
  const auto eps = bind_eps(zero, g, Phase::sampling);
  const auto grid = build_grid(schedule, Variable::t, 8);
  SolverSession sess(solver_spec("ddim"), schedule, grid, true);
  Vec x(3);
  x << 1.0, 2.0, -3.0;
  sess.start(x, 0, eps);
  const auto tr = integrate(sess, eps, Direction::forward);
  for (std::size_t i = 0; i + 1 < tr.states.size(); ++i) {
    const double r = grid.levels[i + 1].alpha / grid.levels[i].alpha;
    CHECK(rel(tr.states[i + 1], r * tr.states[i]) < 1e-15);
  }
}

TEST_CASE("budget table") {
  const std::map<std::string, std::size_t> expect = {
      {"ddim", 48},      {"edict", 24},    {"bdia", 48},         {"obelm", 48},
      {"rev-heun", 24},  {"ees25", 16},    {"ees27", 12},        {"mcf-euler", 24},
      {"mcf-midpoint", 12}, {"rex-euler", 24}, {"rex-midpoint", 12}, {"rk4", 12}};
  for (const auto& [name, n] : expect) {
    const auto spec = solver_spec(name);
    CHECK(steps_for_budget(spec, 48) == n);
    CHECK(n * nominal_cost(spec) == 48);
  }
  CHECK_THROWS_AS(steps_for_budget(solver_spec("ees25"), 50), InvalidParams);
  CHECK_THROWS_AS(solver_spec("heun3"), InvalidParams);
  CHECK(budget_solver_names().size() + 1 == solver_names().size());
}

TEST_CASE("actual evaluation counts per solver") {
  const auto schedule = NoiseSchedule::linear_beta();
  const FieldModel field = rough_field();
  GuidanceConfig g;
  g.source = g.target = "src";
  const auto eps = bind_eps(field, g, Phase::sampling);
  Rng rng(1);
  const Vec x = rng.normal_vec(field.dim());
  const std::map<std::string, std::size_t> expect_evals = {
      {"ddim", 48},  {"edict", 48}, {"bdia", 48},       {"obelm", 48},        {"rev-heun", 25},
      {"ees25", 48}, {"ees27", 48}, {"mcf-euler", 48}, {"mcf-midpoint", 48}, {"rex-euler", 48},
      {"rex-midpoint", 48}};
  for (const auto& [name, evals] : expect_evals) {
    const auto spec = solver_spec(name);
    const auto grid = build_grid(schedule, spec.grid_variable, steps_for_budget(spec, 48));
    SolverSession sess(spec, schedule, grid);
    sess.start(x, 0, eps);
    const auto tr = integrate(sess, eps, Direction::forward);
    CAPTURE(name);
    CHECK(tr.nfe == 48);
    CHECK(sess.evaluations() == evals);
  }
}

TEST_CASE("algebraically reversible solvers invert exactly on a rough field") {
  const auto schedule = NoiseSchedule::linear_beta();
  const FieldModel field = rough_field();
  GuidanceConfig g;
  g.scale = 3.0;
  g.source = g.target = "src";
  const auto eps = bind_eps(field, g, Phase::sampling);
  Rng rng(5);
  const Vec x = rng.normal_vec(field.dim());
  for (const auto& name : budget_solver_names()) {
    const auto spec = solver_spec(name);
    if (!algebraically_reversible(spec.kind)) continue;
    const auto grid = build_grid(schedule, spec.grid_variable, steps_for_budget(spec, 48));
    SolverSession sess(spec, schedule, grid);
    sess.start(x, 0, eps);
    const auto fwd = integrate(sess, eps, Direction::forward);
    REQUIRE_FALSE(fwd.diverged);
    const auto bwd = integrate(sess, eps, Direction::backward);
    CAPTURE(name);
    CHECK(sess.node() == 0);
    CHECK(rel(bwd.terminal(), x) < 1e-9);
  }
}

TEST_CASE("two-step solvers reverse mid-trajectory") {
  Setup s;
  const auto eps = s.eps();
  for (const char* name : {"bdia", "obelm", "edict", "rev-heun", "mcf-midpoint"}) {
    const auto spec = solver_spec(name);
    const auto grid = build_grid(s.schedule, spec.grid_variable, 20);
    const Vec x = s.noise_sample(grid);
    SolverSession a(spec, s.schedule, grid), b(spec, s.schedule, grid);
    a.start(x, 0, eps);
    b.start(x, 0, eps);
    integrate(a, eps, Direction::forward, 12);
    integrate(b, eps, Direction::forward, 12);
    integrate(b, eps, Direction::backward, 5);
    integrate(b, eps, Direction::forward, 5);
    CAPTURE(name);
    CHECK(b.node() == a.node());
    CHECK(rel(b.state(), a.state()) < 1e-12);
  }
}

TEST_CASE("inversion from the data end and re-sampling recovers the data") {
  Setup s;
  const auto eps = s.eps();
  for (const auto& name : budget_solver_names()) {
    const auto spec = solver_spec(name);
    const auto grid = build_grid(s.schedule, spec.grid_variable, steps_for_budget(spec, 48));
    const auto& lv = grid.levels.back();
    Vec z(4);
    z << -0.2, 0.4, 1.0, -1.3;
    const Vec x0 = lv.alpha * s.mu + std::sqrt(lv.alpha * lv.alpha * 0.25 + lv.sigma * lv.sigma) * z;
    SolverSession sess(spec, s.schedule, grid);
    sess.start(x0, grid.steps(), eps);
    integrate(sess, eps, Direction::backward);
    const auto tr = integrate(sess, eps, Direction::forward);
    CAPTURE(name);
    const double err = rel(tr.terminal(), x0);
    if (algebraically_reversible(spec.kind)) CHECK(err < 1e-9);
    else CHECK(err < 0.5);
  }
}

TEST_CASE("every formulation integrates the gaussian flow") {
  Setup s;
  const auto eps = s.eps();
  const std::vector<OdeFormulation> forms = {
      {Parametrisation::t_original, Treatment::black_box},
      {Parametrisation::lambda_eps, Treatment::black_box},
      {Parametrisation::lambda_eps, Treatment::semilinear},
      {Parametrisation::lambda_x0, Treatment::black_box},
      {Parametrisation::lambda_x0, Treatment::semilinear},
      {Parametrisation::ratio_ddim, Treatment::black_box}};
  for (const auto& form : forms) {
    for (Variable gv : {Variable::t, Variable::lambda}) {
      SolverSpec spec = solver_spec("rk4");
      spec.formulation = form;
      spec.grid_variable = gv;
      const auto grid = build_grid(s.schedule, gv, 400);
      const Vec x = s.noise_sample(grid);
      SolverSession sess(spec, s.schedule, grid);
      sess.start(x, 0, eps);
      const auto tr = integrate(sess, eps, Direction::forward);
      const auto &a = grid.levels.front(), &b = grid.levels.back();
      const Vec ref = oracle::gaussian_flow(x, a.alpha, a.sigma, b.alpha, b.sigma, s.mu, s.s0);
      CAPTURE(form.name());
      CAPTURE(to_string(gv));
      // x/sigma coordinates see O(1) growth per unit lambda near the data end,
      // where a uniform t-grid takes lambda steps of ~0.6.
      const bool coarse = form.param == Parametrisation::lambda_x0 &&
                          form.treatment == Treatment::semilinear && gv == Variable::t;
      CHECK(rel(tr.terminal(), ref) < (coarse ? 2e-3 : 1e-6));
    }
  }
}

TEST_CASE("formulation names round trip") {
  for (const char* n : {"t-original", "lambda-eps", "lambda-eps-semilinear", "lambda-x0-black-box",
                        "lambda-x0-semilinear", "ratio-ddim"}) {
    const auto f = formulation_from_string(n);
    CHECK(formulation_from_string(f.name()).param == f.param);
    CHECK(formulation_from_string(f.name()).treatment == f.treatment);
  }
  CHECK_THROWS_AS(formulation_from_string("t-original-semilinear").validate(), InvalidParams);
  CHECK_THROWS_AS(formulation_from_string("x0"), InvalidParams);
}

TEST_CASE("solver parameter validation") {
  auto e = solver_spec("edict");
  e.p = 0.0;
  CHECK_THROWS_AS(e.validate(), InvalidParams);
  auto b = solver_spec("bdia");
  b.gamma = 1.5;
  CHECK_THROWS_AS(b.validate(), InvalidParams);
  auto m = solver_spec("mcf-euler");
  m.zeta = 0.0;
  CHECK_THROWS_AS(m.validate(), InvalidParams);
  auto d = solver_spec("ddim");
  d.formulation = {Parametrisation::lambda_x0, Treatment::semilinear};
  CHECK_THROWS_AS(d.validate(), InvalidParams);
  CHECK(solver_spec("mcf-midpoint").params_string().find("zeta=0.999") != std::string::npos);
}

TEST_CASE("divergence is recorded with the failing step") {
  const auto schedule = NoiseSchedule::linear_beta();
  FieldModel blow = FieldModel::callback([](const Vec& x, double, const std::string&) {
    return Vec(1e8 * x);
  }, 2);
  GuidanceConfig g;
  g.source = g.target = "c";
  const auto eps = bind_eps(blow, g, Phase::sampling);
  const auto grid = build_grid(schedule, Variable::t, 20);
  SolverSession sess(solver_spec("ddim"), schedule, grid, true);
  sess.start(Vec::Ones(2), 0, eps);
  const auto tr = integrate(sess, eps, Direction::forward);
  CHECK(tr.diverged);
  CHECK(tr.failed_step >= 0);
  CHECK(tr.message.find("step") != std::string::npos);
  CHECK(tr.terminal().allFinite());
}

TEST_CASE("field errors carry the step index") {
  const auto schedule = NoiseSchedule::linear_beta();
  int calls = 0;
  FieldModel f = FieldModel::callback([&](const Vec& x, double, const std::string&) -> Vec {
    if (++calls == 4) throw std::runtime_error("host failure");
    return Vec(0.1 * x);
  }, 2);
  GuidanceConfig g;
  g.source = g.target = "c";
  const auto eps = bind_eps(f, g, Phase::sampling);
  const auto grid = build_grid(schedule, Variable::t, 10);
  SolverSession sess(solver_spec("ddim"), schedule, grid, true);
  sess.start(Vec::Ones(2), 0, eps);
  try {
    integrate(sess, eps, Direction::forward);
    FAIL("expected a StepError");
  } catch (const StepError& e) {
    CHECK(e.step() == 3);
    CHECK(std::string(e.what()).find("host failure") != std::string::npos);
  }
}

TEST_CASE("session boundaries") {
  Setup s;
  const auto eps = s.eps();
  const auto grid = build_grid(s.schedule, Variable::t, 3);
  SolverSession sess(solver_spec("ddim"), s.schedule, grid);
  CHECK_THROWS_AS(sess.forward(eps), Error);
  sess.start(s.noise_sample(grid), 0, eps);
  CHECK_THROWS_AS(sess.backward(eps), OutOfRange);
  CHECK_THROWS_AS(integrate(sess, eps, Direction::forward, 4), OutOfRange);
  CHECK_THROWS_AS(sess.start(Vec::Constant(4, NAN), 0, eps), InvalidParams);
}

TEST_CASE("trajectory recording and serialisation") {
  Setup s;
  const auto eps = s.eps();
  const auto grid = build_grid(s.schedule, Variable::t, 6);
  SolverSession a(solver_spec("edict"), s.schedule, grid);
  a.start(s.noise_sample(grid), 0, eps);
  const auto full = integrate(a, eps, Direction::forward);
  CHECK(full.states.size() == 7);
  CHECK(full.aux.size() == 7);
  CHECK(full.grid_values == grid.nodes);
  SolverSession b(solver_spec("edict"), s.schedule, grid);
  b.start(s.noise_sample(grid), 0, eps);
  const auto thin = integrate(b, eps, Direction::forward, std::nullopt, false);
  CHECK(thin.states.size() == 2);
  CHECK((thin.terminal() - full.terminal()).norm() == 0.0);
  CHECK(thin.max_norm == doctest::Approx(full.max_norm));

  std::ostringstream os;
  write_trajectory_csv(full, os);
  CHECK(os.str().rfind("step,grid_value", 0) == 0);
  const std::string j = trajectory_json(full);
  CHECK(j.find("\"solver\": \"edict\"") != std::string::npos);
  CHECK(j.find("\"nfe\": 12") != std::string::npos);
}
