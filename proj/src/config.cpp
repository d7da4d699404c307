// SPDX-License-Identifier: Apache-2.0
#include "revode/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

#include "revode/error.hpp"

namespace revode {

using nlohmann::json;

std::string_view to_string(StudyKind k) {
  switch (k) {
    case StudyKind::stability: return "stability";
    case StudyKind::convergence: return "convergence";
    case StudyKind::roundtrip: return "roundtrip";
    case StudyKind::reconstruct: return "reconstruct";
    case StudyKind::edit: return "edit";
    case StudyKind::latent: return "latent";
  }
  return "?";
}

StudyKind study_kind_from_string(std::string_view name) {
  for (StudyKind k : {StudyKind::stability, StudyKind::convergence, StudyKind::roundtrip,
                      StudyKind::reconstruct, StudyKind::edit, StudyKind::latent})
    if (name == to_string(k)) return k;
  throw InvalidParams("unknown study '" + std::string(name) + "'");
}

RunConfig default_run_config(StudyKind study) {
  RunConfig c;
  c.study = study;
  StudyConfig& l = c.lab;
  l.id = std::string(to_string(study));
  switch (study) {
    case StudyKind::stability:
      break;
    case StudyKind::convergence:
      l.field.kind = FieldKind::gaussian;
      l.solvers = parse_solver_list({"ddim", "obelm", "rev-heun", "mcf-midpoint", "ees25", "ees27"});
      l.steps = {8, 16, 32, 64, 128};
      break;
    case StudyKind::roundtrip:
      l.field.kind = FieldKind::rough;
      l.solvers = parse_solver_list({"budget"});
      break;
    case StudyKind::reconstruct:
      l.field.kind = FieldKind::rough;
      l.solvers = parse_solver_list({"budget"});
      l.guidance_scales = {1.0, 3.0, 7.0};
      l.smoothing = {1.0, 0.0};
      l.seeds = 20;
      l.strength = 0.8;
      break;
    case StudyKind::edit:
      l.field.kind = FieldKind::gaussian;
      l.solvers = parse_solver_list({"budget"});
      l.guidance_scales = {3.0};
      break;
    case StudyKind::latent:
      l.field.kind = FieldKind::gaussian;
      l.solvers = parse_solver_list({"budget"});
      l.seeds = 256;
      break;
  }
  return c;
}

SolverSpec parse_solver_name(std::string_view name) { return solver_spec(name); }

std::vector<SolverSpec> parse_solver_list(const std::vector<std::string>& names) {
  std::vector<SolverSpec> out;
  for (const auto& n : names) {
    if (n.empty()) continue;
    if (n == "all" || n == "budget") {
      for (const auto& m : n == "all" ? solver_names() : budget_solver_names())
        out.push_back(solver_spec(m));
    } else {
      out.push_back(parse_solver_name(n));
    }
  }
  return out;
}

namespace {

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidParams(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw InvalidParams("unknown key '" + path + "." + it.key() + "'");
  }
}

template <class T>
T get(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw InvalidParams(path + ": wrong type");
  }
}

template <class T>
void opt(const json& j, const char* key, T& dst, const std::string& path) {
  if (j.contains(key)) dst = get<T>(j.at(key), path + "." + key);
}

std::vector<double> number_list(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>()};
  return get<std::vector<double>>(j, path);
}

void apply_schedule(NoiseSchedule& s, const json& j) {
  check_keys(j, "schedule", {"kind", "beta_min", "beta_max", "offset", "horizon", "knots", "t_min"});
  const ScheduleKind kind = j.contains("kind")
                                ? schedule_kind_from_string(get<std::string>(j["kind"], "schedule.kind"))
                                : s.kind();
  double horizon = s.horizon();
  opt(j, "horizon", horizon, "schedule");
  switch (kind) {
    case ScheduleKind::linear_beta: {
      double b0 = 0.1, b1 = 20.0;
      if (s.kind() == ScheduleKind::linear_beta) b0 = s.beta_min(), b1 = s.beta_max();
      opt(j, "beta_min", b0, "schedule");
      opt(j, "beta_max", b1, "schedule");
      s = NoiseSchedule::linear_beta(b0, b1, horizon);
      break;
    }
    case ScheduleKind::cosine: {
      double off = 0.008;
      opt(j, "offset", off, "schedule");
      s = NoiseSchedule::cosine(off, horizon);
      break;
    }
    case ScheduleKind::discrete: {
      if (!j.contains("knots")) throw InvalidParams("schedule.knots: required for a discrete schedule");
      std::vector<NoiseSchedule::Knot> knots;
      for (const auto& k : j["knots"]) {
        const auto pair = get<std::vector<double>>(k, "schedule.knots");
        if (pair.size() != 2) throw InvalidParams("schedule.knots: entries are [t, log_alpha] pairs");
        knots.push_back({pair[0], pair[1]});
      }
      s = NoiseSchedule::discrete(std::move(knots));
      break;
    }
  }
  if (j.contains("t_min")) s.set_t_min(get<double>(j["t_min"], "schedule.t_min"));
}

void apply_field(LabField& f, const json& j) {
  check_keys(j, "field", {"kind", "dim", "s0", "mean_scale", "layout_seed", "amplitude", "frequency",
                          "time_frequency"});
  if (j.contains("kind")) f.kind = field_kind_from_string(get<std::string>(j["kind"], "field.kind"));
  opt(j, "dim", f.dim, "field");
  opt(j, "s0", f.s0, "field");
  opt(j, "mean_scale", f.mean_scale, "field");
  opt(j, "layout_seed", f.layout_seed, "field");
  opt(j, "amplitude", f.rough.amplitude, "field");
  opt(j, "frequency", f.rough.frequency, "field");
  opt(j, "time_frequency", f.rough.time_frequency, "field");
}

SolverSpec solver_from_json(const json& j) {
  if (j.is_string()) return parse_solver_name(j.get<std::string>());
  check_keys(j, "solvers[]", {"name", "label", "p", "gamma", "zeta", "x", "sign", "base", "formulation",
                              "grid"});
  if (!j.contains("name")) throw InvalidParams("solvers[]: missing 'name'");
  const std::string name = get<std::string>(j["name"], "solvers[].name");
  SolverSpec s = parse_solver_name(name);
  opt(j, "label", s.label, "solvers[]");
  opt(j, "p", s.p, "solvers[]");
  opt(j, "gamma", s.gamma, "solvers[]");
  opt(j, "zeta", s.zeta, "solvers[]");
  if (j.contains("x") || j.contains("sign")) {
    if (name != "ees25" && name != "ees27")
      throw InvalidParams("solvers[]: 'x' and 'sign' apply to ees25 and ees27 only");
    double x = std::nan("");
    int sign = +1;
    opt(j, "x", x, "solvers[]");
    opt(j, "sign", sign, "solvers[]");
    s.tableau = tableau_by_name(name, x, sign);
  }
  if (j.contains("base")) {
    if (s.kind != SolverKind::mccallum_foster && s.kind != SolverKind::rex)
      throw InvalidParams("solvers[]: 'base' applies to mcf and rex only");
    s.tableau = tableau_by_name(get<std::string>(j["base"], "solvers[].base"));
  }
  if (j.contains("formulation"))
    s.formulation = formulation_from_string(get<std::string>(j["formulation"], "solvers[].formulation"));
  if (j.contains("grid"))
    s.grid_variable = variable_from_string(get<std::string>(j["grid"], "solvers[].grid"));
  s.validate();
  return s;
}

void apply_stability(StabilitySettings& st, const json& j) {
  check_keys(j, "stability", {"methods", "window", "res", "empirical", "iterations", "growth_cap", "zeta",
                              "test"});
  if (j.contains("methods")) {
    st.methods = j["methods"].is_string()
                     ? std::vector<std::string>{j["methods"].get<std::string>()}
                     : get<std::vector<std::string>>(j["methods"], "stability.methods");
  }
  if (j.contains("window")) {
    const auto w = get<std::vector<double>>(j["window"], "stability.window");
    if (w.size() != 4) throw InvalidParams("stability.window: expected [re_min, re_max, im_min, im_max]");
    st.window = {w[0], w[1], w[2], w[3]};
  }
  if (j.contains("res")) {
    const auto r = j["res"].is_number() ? std::vector<int>{j["res"].get<int>()}
                                        : get<std::vector<int>>(j["res"], "stability.res");
    if (r.empty() || r.size() > 2) throw InvalidParams("stability.res: expected n or [nx, ny]");
    st.nx = r[0];
    st.ny = r.back();
  }
  opt(j, "empirical", st.empirical, "stability");
  opt(j, "iterations", st.iterations, "stability");
  opt(j, "growth_cap", st.growth_cap, "stability");
  opt(j, "zeta", st.zeta, "stability");
  if (j.contains("test")) {
    const auto t = get<std::string>(j["test"], "stability.test");
    if (t == "spectral") st.test = GammaTest::spectral;
    else if (t == "literal") st.test = GammaTest::literal;
    else throw InvalidParams("stability.test: expected 'spectral' or 'literal'");
  }
}

json parse_text(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidParams(std::string(what) + ": " + e.what());
  }
}

}  // namespace

SolverSpec solver_from_json_text(std::string_view name, std::string_view overrides) {
  json j = overrides.empty() ? json::object() : parse_text(overrides, "solver parameters");
  if (!j.is_object()) throw InvalidParams("solver parameters: expected an object");
  if (j.contains("name") && j["name"] != name) throw InvalidParams("solver parameters: conflicting name");
  j["name"] = name;
  return solver_from_json(j);
}

NoiseSchedule schedule_from_json_text(std::string_view text) {
  NoiseSchedule s = NoiseSchedule::linear_beta();
  if (!text.empty()) apply_schedule(s, parse_text(text, "schedule"));
  return s;
}

void apply_config_json(RunConfig& cfg, std::string_view json_text) {
  const json j = parse_text(json_text, "config");
  check_keys(j, "config", {"study", "out", "jobs", "seed", "seeds", "schedule", "field", "solvers",
                           "budget", "steps", "guidance", "smoothing", "separations", "strength",
                           "oracle", "reversible_tolerance", "stability"});
  if (j.contains("study")) {
    const StudyKind k = study_kind_from_string(get<std::string>(j["study"], "config.study"));
    if (k != cfg.study) {
      const std::string out = cfg.out;
      cfg = default_run_config(k);
      cfg.out = out;
    }
  }
  StudyConfig& l = cfg.lab;
  opt(j, "out", cfg.out, "config");
  opt(j, "jobs", l.jobs, "config");
  opt(j, "seed", l.seed, "config");
  opt(j, "seeds", l.seeds, "config");
  if (j.contains("schedule")) apply_schedule(l.schedule, j["schedule"]);
  if (j.contains("field")) apply_field(l.field, j["field"]);
  if (j.contains("solvers")) {
    if (!j["solvers"].is_array()) throw InvalidParams("config.solvers: expected a list");
    l.solvers.clear();
    for (const auto& s : j["solvers"]) {
      if (s.is_string() && (s == "all" || s == "budget")) {
        for (auto& e : parse_solver_list({s.get<std::string>()})) l.solvers.push_back(e);
      } else {
        l.solvers.push_back(solver_from_json(s));
      }
    }
  }
  if (j.contains("budget")) {
    l.nfe_budget = get<std::size_t>(j["budget"], "config.budget");
    if (!j.contains("steps")) l.steps.clear();
  }
  opt(j, "steps", l.steps, "config");
  if (j.contains("guidance")) {
    const json& g = j["guidance"];
    check_keys(g, "guidance", {"scales", "mode", "quantile"});
    if (g.contains("scales")) l.guidance_scales = number_list(g["scales"], "guidance.scales");
    if (g.contains("mode")) l.guidance_mode = guidance_mode_from_string(get<std::string>(g["mode"], "guidance.mode"));
    opt(g, "quantile", l.quantile, "guidance");
  }
  if (j.contains("smoothing")) l.smoothing = number_list(j["smoothing"], "config.smoothing");
  if (j.contains("separations")) l.separations = number_list(j["separations"], "config.separations");
  opt(j, "strength", l.strength, "config");
  if (j.contains("oracle")) {
    check_keys(j["oracle"], "oracle", {"refinement", "tolerance"});
    opt(j["oracle"], "refinement", l.oracle_refinement, "oracle");
    opt(j["oracle"], "tolerance", l.oracle_tolerance, "oracle");
  }
  opt(j, "reversible_tolerance", l.reversible_tolerance, "config");
  if (j.contains("stability")) apply_stability(cfg.stability, j["stability"]);
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParams("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_json(cfg, ss.str());
}

void finalize_config(RunConfig& cfg) {
  if (cfg.out.empty()) cfg.out = ".";
  cfg.out = std::filesystem::absolute(cfg.out).lexically_normal().string();
  StudyConfig& l = cfg.lab;
  if (l.jobs < 1) throw InvalidParams("jobs must be >= 1");
  if (cfg.study == StudyKind::stability) {
    if (cfg.stability.methods.empty()) throw InvalidParams("no stability methods given");
    if (cfg.stability.nx < 1 || cfg.stability.ny < 1) throw InvalidParams("raster resolution must be >= 1");
    const Window& w = cfg.stability.window;
    if (!(w.re_min < w.re_max) || !(w.im_min < w.im_max)) throw InvalidParams("empty stability window");
    return;
  }
  if (l.solvers.empty()) throw InvalidParams("empty solver list");
  if (l.seeds < 1) throw InvalidParams("seeds must be >= 1");
  if (l.guidance_scales.empty()) throw InvalidParams("empty guidance sweep");
  if (l.smoothing.empty()) throw InvalidParams("empty smoothing list");
  if (cfg.study == StudyKind::edit && l.separations.empty()) throw InvalidParams("empty separation list");
  if (!(l.strength > 0.0 && l.strength <= 1.0)) throw InvalidParams("strength must lie in (0, 1]");
  for (double rho : l.smoothing)
    if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidParams("smoothing factors must lie in [0, 1]");
  for (const auto& s : l.solvers) {
    s.validate();
    if (l.steps.empty()) steps_for_budget(s, l.nfe_budget);
  }
  for (std::size_t n : l.steps)
    if (n < 1) throw InvalidParams("step counts must be >= 1");
  if (cfg.study == StudyKind::convergence && l.steps.size() < 4)
    throw InvalidParams("convergence ladders need at least 4 step counts");
  make_lab_field(l.field);
}

}  // namespace revode
