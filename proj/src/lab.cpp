// SPDX-License-Identifier: Apache-2.0
#include "revode/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <thread>

#include "revode/error.hpp"
#include "revode/stability.hpp"

namespace revode {

std::uint64_t Rng::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double th = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

Vec Rng::normal_vec(int dim) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal();
  return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  Rng r(base ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  return r.next();
}

FieldModel make_lab_field(const LabField& spec, double separation) {
  if (spec.dim < 1) throw InvalidParams("field dimension must be >= 1");
  if (!(spec.s0 > 0.0)) throw InvalidParams("field spread s0 must be positive");
  if (!(separation >= 0.0)) throw InvalidParams("separation must be >= 0");
  Rng rng(spec.layout_seed);
  const Vec src = spec.mean_scale * rng.normal_vec(spec.dim);
  Vec dir = rng.normal_vec(spec.dim);
  dir /= dir.norm();
  const Vec trg = src + separation * src.norm() * dir;
  const Vec null = Vec::Zero(spec.dim);
  const std::string null_id(kNullCondition);

  switch (spec.kind) {
    case FieldKind::gaussian: {
      FieldModel f = FieldModel::gaussian(spec.dim);
      f.add_condition("src", src, spec.s0).add_condition("trg", trg, spec.s0);
      f.add_condition(null_id, null, spec.s0);
      return f;
    }
    case FieldKind::rough: {
      FieldModel f = FieldModel::rough(spec.dim, spec.rough);
      f.add_condition("src", src, spec.s0).add_condition("trg", trg, spec.s0);
      f.add_condition(null_id, null, spec.s0);
      return f;
    }
    case FieldKind::mixture: {
      FieldModel f = FieldModel::mixture(spec.dim);
      const Vec off = 0.5 * spec.s0 * dir;
      for (const auto& [id, m] : {std::pair{std::string("src"), src}, std::pair{std::string("trg"), trg},
                                  std::pair{null_id, null}})
        f.add_mixture_condition(id, {{0.5, m + off, spec.s0}, {0.5, m - off, spec.s0}});
      return f;
    }
    case FieldKind::callback:
      break;
  }
  throw InvalidParams("lab studies need an analytic field (gaussian, mixture or rough)");
}

Vec gaussian_flow(const Vec& x, const Vec& mean, double s0, const NoiseLevel& from,
                  const NoiseLevel& to) {
  const double sd_from = std::sqrt(from.alpha * from.alpha * s0 * s0 + from.sigma * from.sigma);
  const double sd_to = std::sqrt(to.alpha * to.alpha * s0 * s0 + to.sigma * to.sigma);
  return to.alpha * mean + (sd_to / sd_from) * (x - from.alpha * mean);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidParams("spearman needs paired samples");
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

std::vector<std::size_t> study_steps(const StudyConfig& cfg, const SolverSpec& spec) {
  if (!cfg.steps.empty()) return cfg.steps;
  return {steps_for_budget(spec, cfg.nfe_budget)};
}

namespace {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; results are indexed,
/// so assembly order does not depend on scheduling.
template <class Fn>
std::vector<std::vector<ReportRow>> run_cells(std::size_t n, int jobs, Fn fn) {
  std::vector<std::vector<ReportRow>> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

ExperimentReport assemble(const std::string& study, std::vector<std::vector<ReportRow>> cells) {
  ExperimentReport r;
  r.study = study;
  for (auto& c : cells)
    for (auto& row : c) r.rows.push_back(std::move(row));
  return r;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double step_size(const TimeGrid& grid) {
  return std::abs(grid.nodes.back() - grid.nodes.front()) / static_cast<double>(grid.steps());
}

struct RowMaker {
  std::string study;
  const SolverSpec* spec;
  std::string extra;
  const TimeGrid* grid;
  double g = 1.0;
  std::uint64_t seed = 0;
  std::size_t nfe = 0;

  ReportRow operator()(const std::string& metric, double value, std::string flag = {}) const {
    ReportRow r;
    r.study = study;
    r.solver = spec->label;
    r.params = spec->params_string() + extra;
    r.variable = std::string(to_string(grid->variable));
    r.steps = grid->steps();
    r.nfe = nfe;
    r.h = step_size(*grid);
    r.g = g;
    r.seed = seed;
    r.metric = metric;
    r.value = value;
    r.flag = std::move(flag);
    return r;
  }
};

GuidanceConfig guidance_for(const StudyConfig& cfg, double g, const std::string& target) {
  GuidanceConfig gc;
  gc.scale = g;
  gc.mode = cfg.guidance_mode;
  gc.quantile = cfg.quantile;
  gc.source = "src";
  gc.target = target;
  return gc;
}

/// Sample from the marginal of the "src" condition at `level`.
Vec marginal_sample(const FieldModel& field, const NoiseLevel& lv, std::uint64_t seed) {
  const Condition& c = field.condition("src");
  Rng rng(seed);
  const Vec z = rng.normal_vec(field.dim());
  return lv.alpha * c.mean + std::sqrt(lv.alpha * lv.alpha * c.s0 * c.s0 + lv.sigma * lv.sigma) * z;
}

struct InvertResample {
  Vec latent;     // primary state at the noise end after inversion
  Vec recon;      // state at the data end after re-sampling
  bool diverged = false;
  std::string message;
  double max_norm = 0.0;
  std::size_t nfe = 0;
};

InvertResample invert_resample(const SolverSpec& spec, const NoiseSchedule& schedule,
                               const TimeGrid& grid, const FieldModel& field,
                               const GuidanceConfig& guidance, const Vec& x0) {
  const EpsFn inv = bind_eps(field, guidance, Phase::inversion);
  const EpsFn samp = bind_eps(field, guidance, Phase::sampling);
  SolverSession session(spec, schedule, grid, field.needs_time());
  session.start(x0, grid.steps(), inv);
  InvertResample out;
  Trajectory a = integrate(session, inv, Direction::backward, std::nullopt, false);
  out.max_norm = a.max_norm;
  out.latent = a.terminal();
  out.nfe = a.nfe;
  if (a.diverged) {
    out.diverged = true;
    out.message = a.message;
    out.recon = Vec::Constant(x0.size(), std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  Trajectory b = integrate(session, samp, Direction::forward, std::nullopt, false);
  out.max_norm = std::max(out.max_norm, b.max_norm);
  out.nfe += b.nfe;
  out.recon = b.terminal();
  if (b.diverged) {
    out.diverged = true;
    out.message = b.message;
    out.recon = Vec::Constant(x0.size(), std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

double expected_order(const SolverSpec& s) {
  switch (s.kind) {
    case SolverKind::ddim: return 1.0;
    case SolverKind::obelm:
    case SolverKind::reversible_heun: return 2.0;
    case SolverKind::ees:
    case SolverKind::rex:
    case SolverKind::mccallum_foster: return s.tableau.order;
    default: return std::numeric_limits<double>::quiet_NaN();
  }
}

double expected_antisymmetric_order(const SolverSpec& s) {
  if (s.kind == SolverKind::ddim) return 1.0;
  if (s.kind == SolverKind::ees) return s.tableau.antisymmetric_order;
  return std::numeric_limits<double>::quiet_NaN();
}

/// Fit slopes per solver on the per-N mean of `metric`, ignoring flagged rows
/// and values at or below `floor`.
void add_slopes(ExperimentReport& r, const StudyConfig& cfg, const std::string& metric,
                double floor, double (*expected)(const SolverSpec&), bool skip_reversible) {
  for (const auto& spec : cfg.solvers) {
    if (skip_reversible && algebraically_reversible(spec.kind)) continue;
    std::map<std::size_t, std::pair<double, std::vector<double>>> by_n;
    for (const ReportRow* row : r.select(spec.label, metric)) {
      if (!row->flag.empty() && row->flag != "reversible-fail") continue;
      auto& slot = by_n[row->steps];
      slot.first = row->h;
      slot.second.push_back(row->value);
    }
    std::vector<double> hs, es;
    for (auto& [n, slot] : by_n) {
      const double mean =
          std::accumulate(slot.second.begin(), slot.second.end(), 0.0) / slot.second.size();
      if (mean > floor) {
        hs.push_back(slot.first);
        es.push_back(mean);
      }
    }
    if (by_n.size() < 4) continue;
    try {
      r.slopes.push_back({spec.label, metric, fit_slope(hs, es), expected(spec)});
    } catch (const StudyError& e) {
      r.warnings.push_back(spec.label + " " + metric + ": " + e.what());
    }
  }
}

}  // namespace

ExperimentReport convergence_study(const StudyConfig& cfg) {
  if (cfg.steps.size() < 4) throw InvalidParams("convergence needs a ladder of at least 4 step counts");
  const FieldModel field = make_lab_field(cfg.field);
  const GuidanceConfig guidance = guidance_for(cfg, cfg.guidance_scales.front(), "src");
  const EpsFn eps = bind_eps(field, guidance, Phase::sampling);
  const std::size_t n_cells = cfg.solvers.size() * cfg.seeds;

  auto cells = run_cells(n_cells, cfg.jobs, [&](std::size_t i) {
    const SolverSpec& spec = cfg.solvers[i / cfg.seeds];
    const std::uint64_t seed = cfg.seed + i % cfg.seeds;
    const auto ladder = study_steps(cfg, spec);
    const std::size_t n_max = *std::max_element(ladder.begin(), ladder.end());

    SolverSpec oracle = spec;
    oracle.kind = SolverKind::ees;
    oracle.tableau = rk4_tableau();
    oracle.label = spec.label + "-oracle";
    auto solve = [&](const SolverSpec& s, std::size_t n) {
      TimeGrid grid = build_grid(cfg.schedule, s.grid_variable, n, cfg.strength);
      SolverSession session(s, cfg.schedule, grid, field.needs_time());
      const Vec x_t = marginal_sample(field, grid.levels.front(), derive_seed(cfg.seed, seed));
      session.start(x_t, 0, eps);
      return integrate(session, eps, Direction::forward, std::nullopt, false);
    };
    const std::size_t n_oracle = cfg.oracle_refinement * n_max;
    const Trajectory o1 = solve(oracle, n_oracle);
    const Trajectory o2 = solve(oracle, 2 * n_oracle);
    if (o1.diverged || o2.diverged) throw StudyError(spec.label + ": oracle diverged");
    const double drift = max_abs(Vec(o1.terminal() - o2.terminal())) / max_abs(o2.terminal());
    if (!(drift < cfg.oracle_tolerance))
      throw StudyError(spec.label + ": oracle not self-consistent (change " + fmt(drift) + ")");
    const Vec& ref = o2.terminal();

    std::vector<ReportRow> rows;
    for (std::size_t n : ladder) {
      const TimeGrid grid = build_grid(cfg.schedule, spec.grid_variable, n, cfg.strength);
      const Trajectory tr = solve(spec, n);
      RowMaker row{cfg.id, &spec, "", &grid, guidance.scale, seed, tr.nfe};
      if (tr.diverged) {
        rows.push_back(row("global_error", std::numeric_limits<double>::infinity(), "diverged"));
        continue;
      }
      rows.push_back(row("global_error", (tr.terminal() - ref).norm() / ref.norm()));
    }
    return rows;
  });
  ExperimentReport r = assemble(cfg.id, std::move(cells));
  add_slopes(r, cfg, "global_error", 0.0, expected_order, false);
  return r;
}

ExperimentReport roundtrip_study(const StudyConfig& cfg) {
  const std::size_t per_solver = cfg.smoothing.size() * cfg.guidance_scales.size() * cfg.seeds;
  auto cells = run_cells(cfg.solvers.size() * per_solver, cfg.jobs, [&](std::size_t i) {
    const SolverSpec& spec = cfg.solvers[i / per_solver];
    std::size_t rest = i % per_solver;
    const double rho = cfg.smoothing[rest / (cfg.guidance_scales.size() * cfg.seeds)];
    rest %= cfg.guidance_scales.size() * cfg.seeds;
    const double g = cfg.guidance_scales[rest / cfg.seeds];
    const std::uint64_t seed = cfg.seed + rest % cfg.seeds;

    FieldModel field = make_lab_field(cfg.field);
    std::string extra;
    if (field.kind() == FieldKind::rough) {
      field = field.with_smoothing(rho);
      extra = ";rho=" + fmt(rho);
    }
    const EpsFn eps = bind_eps(field, guidance_for(cfg, g, "src"), Phase::sampling);

    std::vector<ReportRow> rows;
    for (std::size_t n : study_steps(cfg, spec)) {
      const TimeGrid grid = build_grid(cfg.schedule, spec.grid_variable, n, cfg.strength);
      SolverSession session(spec, cfg.schedule, grid, field.needs_time());
      const Vec x_t = marginal_sample(field, grid.levels.front(), derive_seed(cfg.seed, seed));
      session.start(x_t, 0, eps);
      const Trajectory a = integrate(session, eps, Direction::forward, std::nullopt, false);
      RowMaker row{cfg.id, &spec, extra, &grid, g, seed, a.nfe};
      if (a.diverged) {
        rows.push_back(row("roundtrip_rel", std::numeric_limits<double>::infinity(), "diverged"));
        continue;
      }
      const Trajectory b = integrate(session, eps, Direction::backward, std::nullopt, false);
      if (b.diverged) {
        rows.push_back(row("roundtrip_rel", std::numeric_limits<double>::infinity(), "diverged"));
        continue;
      }
      double err = (b.terminal() - x_t).norm() / x_t.norm();
      const bool coupled = spec.kind == SolverKind::edict || spec.kind == SolverKind::rex ||
                           spec.kind == SolverKind::mccallum_foster ||
                           spec.kind == SolverKind::reversible_heun;
      if (coupled)
        if (auto aux = session.aux()) err = std::max(err, (*aux - x_t).norm() / x_t.norm());
      std::string flag;
      if (algebraically_reversible(spec.kind) && !(err <= cfg.reversible_tolerance))
        flag = "reversible-fail";
      rows.push_back(row("roundtrip_rel", err, flag));
    }
    return rows;
  });
  ExperimentReport r = assemble(cfg.id, std::move(cells));
  add_slopes(r, cfg, "roundtrip_rel", 1e-12, expected_antisymmetric_order, true);
  return r;
}

namespace {

ExperimentReport invert_resample_study(const StudyConfig& cfg, bool edit) {
  const std::vector<double> seps = edit ? cfg.separations : std::vector<double>{0.0};
  const std::size_t inner = seps.size() * cfg.smoothing.size() * cfg.guidance_scales.size() * cfg.seeds;
  auto cells = run_cells(cfg.solvers.size() * inner, cfg.jobs, [&](std::size_t i) {
    const SolverSpec& spec = cfg.solvers[i / inner];
    std::size_t rest = i % inner;
    std::size_t block = cfg.smoothing.size() * cfg.guidance_scales.size() * cfg.seeds;
    const double sep = seps[rest / block];
    rest %= block;
    block = cfg.guidance_scales.size() * cfg.seeds;
    const double rho = cfg.smoothing[rest / block];
    rest %= block;
    const double g = cfg.guidance_scales[rest / cfg.seeds];
    const std::uint64_t seed = cfg.seed + rest % cfg.seeds;

    FieldModel field = make_lab_field(cfg.field, sep);
    std::string extra;
    if (field.kind() == FieldKind::rough) {
      field = field.with_smoothing(rho);
      extra += ";rho=" + fmt(rho);
    }
    if (edit) extra += ";separation=" + fmt(sep);
    const GuidanceConfig guidance = guidance_for(cfg, g, edit ? "trg" : "src");

    std::vector<ReportRow> rows;
    for (std::size_t n : study_steps(cfg, spec)) {
      const TimeGrid grid = build_grid(cfg.schedule, spec.grid_variable, n, cfg.strength);
      const NoiseLevel& data_end = grid.levels.back();
      const Vec x0 = marginal_sample(field, data_end, derive_seed(cfg.seed, seed));
      const InvertResample res = invert_resample(spec, cfg.schedule, grid, field, guidance, x0);
      RowMaker row{cfg.id, &spec, extra, &grid, g, seed, res.nfe};
      const std::string div = res.diverged ? "diverged" : "";
      const double mse = res.diverged ? std::numeric_limits<double>::infinity()
                                      : (res.recon - x0).squaredNorm() / static_cast<double>(x0.size());
      if (!edit) {
        std::string flag = div;
        if (flag.empty() && algebraically_reversible(spec.kind) &&
            !(mse <= cfg.reversible_tolerance * cfg.reversible_tolerance))
          flag = "reversible-fail";
        rows.push_back(row("mse", mse, flag));
        continue;
      }
      rows.push_back(row("mse_vs_source", mse, div));
      const bool analytic = field.kind() == FieldKind::gaussian &&
                            cfg.guidance_mode == GuidanceMode::plain;
      if (!analytic) {
        rows.push_back(row("oracle_deviation", std::numeric_limits<double>::quiet_NaN(), "no-oracle"));
      } else if (res.diverged) {
        rows.push_back(row("oracle_deviation", std::numeric_limits<double>::infinity(), div));
      } else {
        const Condition& trg = field.condition("trg");
        const Condition& null = field.condition(kNullCondition);
        const Vec guided_mean = g * trg.mean + (1.0 - g) * null.mean;
        const Vec target = gaussian_flow(res.latent, guided_mean, trg.s0, grid.levels.front(), data_end);
        rows.push_back(row("oracle_deviation", (res.recon - target).norm() / target.norm()));
      }
      rows.push_back(row("max_norm", res.max_norm, div));
      rows.push_back(row("diverged", res.diverged ? 1.0 : 0.0, div));
    }
    return rows;
  });
  return assemble(cfg.id, std::move(cells));
}

}  // namespace

ExperimentReport reconstruction_experiment(const StudyConfig& cfg) {
  return invert_resample_study(cfg, false);
}

ExperimentReport edit_experiment(const StudyConfig& cfg) {
  ExperimentReport r = invert_resample_study(cfg, true);
  // Stiff linear test problem: y' = z y at z = -1.5 for 500 unit steps.
  const Complex z{-1.5, 0.0};
  for (const auto& spec : cfg.solvers) {
    const LinearProbe p = linear_probe(spec, z, 500, 1e6);
    const std::string flag = p.peak > 1e6 ? "diverged" : "";
    TimeGrid grid;
    grid.variable = spec.grid_variable;
    grid.nodes.resize(501);
    std::iota(grid.nodes.begin(), grid.nodes.end(), 0.0);
    RowMaker row{cfg.id, &spec, ";linear-z=-1.5", &grid, 1.0, cfg.seed, 500};
    row.nfe = 500 * static_cast<std::size_t>(nominal_cost(spec));
    r.rows.push_back(row("stiff_linear_peak", p.peak, flag));
    r.rows.push_back(row("stiff_linear_last", p.last, flag));
  }
  return r;
}

ExperimentReport latent_stats(const StudyConfig& cfg) {
  const FieldModel field = make_lab_field(cfg.field);
  const GuidanceConfig guidance = guidance_for(cfg, cfg.guidance_scales.front(), "src");
  if (cfg.seeds == 0) throw InvalidParams("latent statistics need at least one seed");

  struct Sample {
    Vec w;
    bool diverged;
  };
  // One cell per solver; samples inside a cell are independent of scheduling.
  ExperimentReport r;
  r.study = cfg.id;
  auto cells = run_cells(cfg.solvers.size(), cfg.jobs, [&](std::size_t i) {
    const SolverSpec& spec = cfg.solvers[i];
    std::vector<ReportRow> rows;
    for (std::size_t n : study_steps(cfg, spec)) {
      const TimeGrid grid = build_grid(cfg.schedule, spec.grid_variable, n, cfg.strength);
      const NoiseLevel& noise_end = grid.levels.front();
      const EpsFn inv = bind_eps(field, guidance, Phase::inversion);
      std::vector<Vec> samples;
      std::size_t diverged = 0, nfe = 0;
      for (std::size_t k = 0; k < cfg.seeds; ++k) {
        const std::uint64_t seed = cfg.seed + k;
        const Vec x0 = marginal_sample(field, grid.levels.back(), derive_seed(cfg.seed, seed));
        SolverSession session(spec, cfg.schedule, grid, field.needs_time());
        session.start(x0, grid.steps(), inv);
        const Trajectory tr = integrate(session, inv, Direction::backward, std::nullopt, false);
        nfe = tr.nfe;
        if (tr.diverged) {
          ++diverged;
          continue;
        }
        samples.push_back(tr.terminal() / noise_end.sigma);
      }
      RowMaker row{cfg.id, &spec, "", &grid, guidance.scale, cfg.seed, nfe};
      if (samples.empty()) {
        rows.push_back(row("diverged_fraction", 1.0, "diverged"));
        continue;
      }
      if (cfg.seeds == 1) {
        rows.push_back(row("norm", samples.front().norm(), "single-sample"));
        continue;
      }
      // Per-coordinate moments, averaged over coordinates.
      const double m = static_cast<double>(samples.size());
      const int d = field.dim();
      Vec mu = Vec::Zero(d);
      for (const Vec& w : samples) mu += w;
      mu /= m;
      Vec m2 = Vec::Zero(d), m4 = Vec::Zero(d);
      for (const Vec& w : samples) {
        const Eigen::ArrayXd c = (w - mu).array();
        m2.array() += c.square();
        m4.array() += c.square().square();
      }
      m2 /= m;
      m4 /= m;
      const double var_ratio = m2.mean() * m / std::max(m - 1.0, 1.0);
      const double kurt = (m4.array() / m2.array().square()).mean() - 3.0;
      const std::string anomalous = (var_ratio < 0.5 || var_ratio > 2.0) ? "anomalous" : "";
      rows.push_back(row("mean", mu.mean()));
      rows.push_back(row("var_ratio", var_ratio, anomalous));
      rows.push_back(row("excess_kurtosis", kurt));
      rows.push_back(row("diverged_fraction", static_cast<double>(diverged) / cfg.seeds,
                         diverged ? "diverged" : ""));
    }
    return rows;
  });
  r = assemble(cfg.id, std::move(cells));
  if (cfg.seeds == 1)
    r.warnings.push_back("latent statistics from a single sample: only its norm is reported");
  return r;
}

}  // namespace revode
