// SPDX-License-Identifier: Apache-2.0
#include "revode/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "revode/config.hpp"
#include "revode/error.hpp"
#include "revode/lab.hpp"
#include "revode/stability.hpp"
#include "revode/svg.hpp"
#include "revode/tableau.hpp"

namespace revode {

namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::vector<std::string> solvers;
  std::optional<std::size_t> budget;
  std::vector<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::optional<int> jobs;
  std::string out;
  std::string field;
  std::optional<int> dim;
  std::vector<double> guidance;
  std::string guidance_mode;
  std::vector<double> smoothing;
  std::vector<double> separations;
  std::optional<double> strength;
  // stability
  std::vector<std::string> methods;
  std::vector<double> window;
  std::vector<int> res;
  bool empirical = false;
  std::optional<double> zeta;
  std::string test;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output directory (default: $REVODE_OUT or .)");
  cmd->add_option("--jobs", f.jobs, "worker threads");
  cmd->add_option("--seed", f.seed, "base seed (default 0)");
}

void add_study(CLI::App* cmd, Flags& f) {
  add_common(cmd, f);
  cmd->add_option("--solvers", f.solvers, "solver presets, or all / budget")->delimiter(',');
  cmd->add_option("--budget", f.budget, "evaluations per sample");
  cmd->add_option("--steps", f.steps, "explicit step ladder")->delimiter(',');
  cmd->add_option("--seeds", f.seeds, "samples per cell");
  cmd->add_option("--field", f.field, "gaussian, mixture or rough");
  cmd->add_option("--dim", f.dim, "field dimension");
  cmd->add_option("--g", f.guidance, "guidance scales")->delimiter(',');
  cmd->add_option("--guidance-mode", f.guidance_mode, "plain, npi or proximal");
  cmd->add_option("--smoothing", f.smoothing, "rough-field smoothing factors")->delimiter(',');
  cmd->add_option("--separations", f.separations, "condition separations")->delimiter(',');
  cmd->add_option("--strength", f.strength, "inversion strength in (0, 1]");
}

std::string env_out() {
  const char* v = std::getenv("REVODE_OUT");
  return v ? v : "";
}

RunConfig build_config(StudyKind kind, const Flags& f) {
  RunConfig cfg = default_run_config(kind);
  if (!f.config.empty()) {
    apply_config_file(cfg, f.config);
    if (cfg.study != kind)
      throw InvalidParams("config study '" + std::string(to_string(cfg.study)) + "' does not match command");
  }
  StudyConfig& l = cfg.lab;
  if (!f.out.empty()) cfg.out = f.out;
  if (cfg.out.empty()) cfg.out = env_out();
  if (f.jobs) l.jobs = *f.jobs;
  if (f.seed) l.seed = *f.seed;
  if (f.seeds) l.seeds = *f.seeds;
  if (!f.solvers.empty()) l.solvers = parse_solver_list(f.solvers);
  if (f.budget) {
    l.nfe_budget = *f.budget;
    l.steps.clear();
  }
  if (!f.steps.empty()) l.steps = f.steps;
  if (!f.field.empty()) l.field.kind = field_kind_from_string(f.field);
  if (f.dim) l.field.dim = *f.dim;
  if (!f.guidance.empty()) l.guidance_scales = f.guidance;
  if (!f.guidance_mode.empty()) l.guidance_mode = guidance_mode_from_string(f.guidance_mode);
  if (!f.smoothing.empty()) l.smoothing = f.smoothing;
  if (!f.separations.empty()) l.separations = f.separations;
  if (f.strength) l.strength = *f.strength;

  StabilitySettings& st = cfg.stability;
  if (!f.methods.empty()) st.methods = f.methods;
  if (!f.window.empty()) {
    if (f.window.size() != 4) throw InvalidParams("--window expects re_min,re_max,im_min,im_max");
    st.window = {f.window[0], f.window[1], f.window[2], f.window[3]};
  }
  if (!f.res.empty()) {
    if (f.res.size() > 2) throw InvalidParams("--res expects n or nx,ny");
    st.nx = f.res[0];
    st.ny = f.res.back();
  }
  if (f.empirical) st.empirical = true;
  if (f.zeta) st.zeta = *f.zeta;
  if (f.test == "literal") st.test = GammaTest::literal;
  else if (f.test == "spectral") st.test = GammaTest::spectral;
  else if (!f.test.empty()) throw InvalidParams("--test expects spectral or literal");
  finalize_config(cfg);
  return cfg;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write '" + p.string() + "'");
  os << content;
}

fs::path prepare_out(const RunConfig& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

// ---- tableau ----

int cmd_tableau(const std::string& name, std::optional<double> x, int sign, bool verify,
                std::ostream& out, std::ostream& err) {
  ButcherTableau tab;
  try {
    tab = tableau_by_name(name, x ? *x : std::nan(""), sign);
  } catch (const InvalidParams& e) {
    const std::string msg = e.what();
    const bool family = (name == "ees25" || name == "ees27") && x;
    if (family && msg.rfind("inadmissible parameter", 0) != 0) err << "inadmissible parameter: ";
    else if (!family) err << "error: ";
    err << msg << "\n";
    return 2;
  }
  out << describe(tab);
  if (verify) {
    try {
      tab.check_consistency();
      out << "verify: consistency identities hold\n";
    } catch (const InvalidParams& e) {
      err << "verify failed: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}

// ---- stability ----

bool is_tableau_name(const std::string& m) {
  for (const auto& n : tableau_names())
    if (n == m) return true;
  return m == "rk3" || m == "heun";
}

int cmd_stability(const RunConfig& cfg, std::ostream& out) {
  const StabilitySettings& st = cfg.stability;
  const fs::path dir = prepare_out(cfg);
  std::vector<StabilityRaster> layers;
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();

  for (const auto& m : st.methods) {
    nlohmann::ordered_json e;
    e["method"] = m;
    std::vector<StabilityRaster> own;
    SolverSpec probe_spec;
    if (is_tableau_name(m)) {
      const ButcherTableau tab = tableau_by_name(m);
      const StabilityPolynomial r = stability_polynomial(tab);
      own.push_back(polynomial_domain(r, st.window, st.nx, st.ny));
      e["real_axis_boundary"] = real_axis_boundary(r);
      probe_spec.kind = SolverKind::ees;
      probe_spec.tableau = tab;
      probe_spec.label = m;
    } else {
      probe_spec = solver_spec(m);
      if (probe_spec.kind == SolverKind::mccallum_foster) {
        probe_spec.zeta = st.zeta;
        own.push_back(mcf_gamma_region(stability_polynomial(probe_spec.tableau), st.zeta, st.window,
                                       st.nx, st.ny, st.test));
      }
    }
    if (st.empirical || own.empty())
      own.push_back(empirical_domain(probe_spec, st.window, st.nx, st.ny, st.iterations,
                                     st.growth_cap, cfg.lab.jobs));
    if (own.size() == 2) e["agreement"] = raster_agreement(own[0], own[1]);
    auto layers_json = nlohmann::ordered_json::array();
    for (auto& r : own) {
      r.label = m + " (" + std::string(to_string(r.source)) + ")";
      const std::string file = "stability_" + m + "_" + std::string(to_string(r.source)) + ".csv";
      std::ostringstream os;
      write_raster_csv(r, os);
      write_file(dir / file, os.str());
      nlohmann::ordered_json lj;
      lj["source"] = to_string(r.source);
      lj["file"] = file;
      lj["stable_cells"] = r.count(1);
      lj["indeterminate_cells"] = r.count(-1);
      layers_json.push_back(lj);
      layers.push_back(r);
    }
    e["layers"] = layers_json;
    summary.push_back(e);
    out << m << ":";
    for (const auto& r : own) out << " " << to_string(r.source) << " stable=" << r.count(1);
    if (e.contains("real_axis_boundary"))
      out << " real-axis boundary=" << e["real_axis_boundary"].get<double>();
    out << "\n";
  }
  nlohmann::ordered_json j;
  j["window"] = {st.window.re_min, st.window.re_max, st.window.im_min, st.window.im_max};
  j["resolution"] = {st.nx, st.ny};
  j["methods"] = summary;
  write_file(dir / "stability.json", j.dump(2) + "\n");
  write_file(dir / "stability.svg", raster_svg(layers));
  out << "wrote " << (dir / "stability.json").string() << "\n";
  return 0;
}

// ---- studies ----

std::string study_plot(const RunConfig& cfg, const ExperimentReport& r) {
  std::vector<svg::Series> series;
  svg::PlotOptions opts;
  if (cfg.study == StudyKind::reconstruct || cfg.study == StudyKind::edit) {
    const bool edit = cfg.study == StudyKind::edit;
    const std::string metric = edit ? "mse_vs_source" : "mse";
    opts.title = edit ? "re-sampled deviation from source" : "reconstruction error against guidance";
    opts.x_label = edit ? "separation" : "guidance scale g";
    opts.y_label = "median MSE";
    opts.log_x = edit;
    for (const auto& spec : cfg.lab.solvers) {
      std::map<double, std::vector<double>> by_x;
      for (const ReportRow* row : r.select(spec.label, metric)) {
        const auto rho = row->params.find(";rho=");
        if (rho != std::string::npos && std::stod(row->params.substr(rho + 5)) != cfg.lab.smoothing.front())
          continue;
        double x = row->g;
        if (edit) {
          const auto p = row->params.find(";separation=");
          x = std::stod(row->params.substr(p + 12));
        }
        if (std::isfinite(row->value)) by_x[x].push_back(row->value);
      }
      svg::Series s{spec.label, {}, {}};
      for (auto& [x, v] : by_x) {
        s.x.push_back(x);
        s.y.push_back(median(v));
      }
      series.push_back(std::move(s));
    }
  } else {
    const std::string metric = cfg.study == StudyKind::convergence ? "global_error" : "roundtrip_rel";
    opts.title = cfg.study == StudyKind::convergence ? "global error" : "round-trip error";
    opts.x_label = "h";
    opts.y_label = "relative error";
    for (const auto& spec : cfg.lab.solvers) {
      std::map<double, std::vector<double>> by_h;
      for (const ReportRow* row : r.select(spec.label, metric))
        if (std::isfinite(row->value)) by_h[row->h].push_back(row->value);
      svg::Series s{spec.label, {}, {}};
      for (auto& [h, v] : by_h) {
        s.x.push_back(h);
        s.y.push_back(median(v));
      }
      series.push_back(std::move(s));
    }
  }
  return svg::line_plot(series, opts);
}

int cmd_study(const RunConfig& cfg, std::ostream& out) {
  ExperimentReport r;
  switch (cfg.study) {
    case StudyKind::convergence: r = convergence_study(cfg.lab); break;
    case StudyKind::roundtrip: r = roundtrip_study(cfg.lab); break;
    case StudyKind::reconstruct: r = reconstruction_experiment(cfg.lab); break;
    case StudyKind::edit: r = edit_experiment(cfg.lab); break;
    case StudyKind::latent: r = latent_stats(cfg.lab); break;
    case StudyKind::stability: break;
  }
  const fs::path dir = prepare_out(cfg);
  const std::string stem(to_string(cfg.study));
  std::ostringstream csv;
  write_report_csv(r, csv);
  write_file(dir / (stem + ".csv"), csv.str());
  write_file(dir / (stem + ".json"), report_json(r) + "\n");
  if (cfg.study != StudyKind::latent) write_file(dir / (stem + ".svg"), study_plot(cfg, r));

  std::size_t diverged = 0;
  for (const auto& row : r.rows) diverged += row.flag == "diverged";
  for (const auto& s : r.slopes)
    out << s.solver << " " << s.metric << " slope " << s.fit.slope << " +/- " << s.fit.half_width << "\n";
  for (const auto& w : r.warnings) out << "warning: " << w << "\n";
  out << r.rows.size() << " rows (" << diverged << " diverged) written to " << dir.string() << "\n";
  if (!r.rows.empty() && diverged == r.rows.size()) return 1;
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"revode: reversible ODE solver lab"};
  app.require_subcommand(1);
  Flags f;

  std::string tab_name;
  std::optional<double> tab_x;
  int tab_sign = +1;
  bool tab_verify = false;
  auto* tab = app.add_subcommand("tableau", "print a Butcher tableau and its stability polynomial");
  tab->add_option("name", tab_name, "tableau name")->required();
  tab->add_option("--x", tab_x, "EES family parameter");
  tab->add_option("--sign", tab_sign, "EES(2,7) branch, +1 or -1");
  tab->add_flag("--verify", tab_verify, "re-check consistency identities");

  auto* stab = app.add_subcommand("stability", "linear stability rasters");
  add_common(stab, f);
  stab->add_option("--method", f.methods, "tableau or solver names")->delimiter(',');
  stab->add_option("--window", f.window, "re_min,re_max,im_min,im_max")->delimiter(',')->allow_extra_args(false);
  stab->add_option("--res", f.res, "n or nx,ny")->delimiter(',');
  stab->add_flag("--empirical", f.empirical, "add empirical boundedness rasters");
  stab->add_option("--zeta", f.zeta, "coupling for mcf methods");
  stab->add_option("--test", f.test, "Gamma test: spectral or literal");

  const std::pair<StudyKind, const char*> study_help[] = {
      {StudyKind::convergence, "global error against a fine RK4 oracle, with slope fits"},
      {StudyKind::roundtrip, "forward then backward from the noise end"},
      {StudyKind::reconstruct, "invert data samples and re-sample under guidance"},
      {StudyKind::edit, "invert under one condition, re-sample under another"},
      {StudyKind::latent, "moments of inverted latents"}};
  std::map<CLI::App*, StudyKind> studies;
  for (const auto& [k, help] : study_help) {
    auto* cmd = app.add_subcommand(std::string(to_string(k)), help);
    add_study(cmd, f);
    studies[cmd] = k;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (tab->parsed()) return cmd_tableau(tab_name, tab_x, tab_sign, tab_verify, out, err);
    if (stab->parsed()) return cmd_stability(build_config(StudyKind::stability, f), out);
    for (auto& [cmd, kind] : studies)
      if (cmd->parsed()) return cmd_study(build_config(kind, f), out);
  } catch (const InvalidParams& e) {
    err << "error: " << e.what() << "\n" << app.get_subcommands().front()->help();
    return 2;
  } catch (const OutOfRange& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "study failed: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace revode
