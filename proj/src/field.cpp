// SPDX-License-Identifier: Apache-2.0
#include "revode/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "revode/error.hpp"

namespace revode {

std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::gaussian: return "gaussian";
    case FieldKind::mixture: return "gaussian-mixture";
    case FieldKind::rough: return "rough-synthetic";
    case FieldKind::callback: return "callback";
  }
  return "?";
}

FieldKind field_kind_from_string(std::string_view name) {
  if (name == "gaussian") return FieldKind::gaussian;
  if (name == "mixture" || name == "gaussian-mixture") return FieldKind::mixture;
  if (name == "rough" || name == "rough-synthetic") return FieldKind::rough;
  if (name == "callback") return FieldKind::callback;
  throw InvalidParams("unknown field kind '" + std::string(name) + "'");
}

std::string_view to_string(GuidanceMode m) {
  switch (m) {
    case GuidanceMode::plain: return "plain";
    case GuidanceMode::npi_inversion: return "npi";
    case GuidanceMode::proximal: return "proximal";
  }
  return "?";
}

GuidanceMode guidance_mode_from_string(std::string_view name) {
  if (name == "plain" || name == "cfg") return GuidanceMode::plain;
  if (name == "npi" || name == "npi-inversion") return GuidanceMode::npi_inversion;
  if (name == "proximal" || name == "prox") return GuidanceMode::proximal;
  throw InvalidParams("unknown guidance mode '" + std::string(name) + "'");
}

namespace {

// Deterministic per-condition phase offsets for the rough field.
double condition_phase(std::string_view id, int coord) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : id) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  h ^= static_cast<std::uint64_t>(coord + 1) * 0x9E3779B97F4A7C15ULL;
  h ^= h >> 31;
  h *= 0xBF58476D1CE4E5B9ULL;
  h ^= h >> 29;
  return 2.0 * std::numbers::pi * static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

FieldModel FieldModel::gaussian(int dim) {
  if (dim < 1) throw InvalidParams("field dimension must be >= 1");
  return FieldModel(FieldKind::gaussian, dim);
}

FieldModel FieldModel::mixture(int dim) {
  if (dim < 1) throw InvalidParams("field dimension must be >= 1");
  return FieldModel(FieldKind::mixture, dim);
}

FieldModel FieldModel::rough(int dim, RoughParams params) {
  if (dim < 1) throw InvalidParams("field dimension must be >= 1");
  if (!(params.smoothing >= 0.0) || !(params.amplitude >= 0.0))
    throw InvalidParams("rough field amplitude and smoothing must be non-negative");
  FieldModel f(FieldKind::rough, dim);
  f.rough_ = params;
  return f;
}

FieldModel FieldModel::callback(EpsCallback fn, int dim) {
  if (dim < 1) throw InvalidParams("field dimension must be >= 1");
  if (!fn) throw InvalidParams("callback field needs a callable");
  FieldModel f(FieldKind::callback, dim);
  f.callback_ = std::move(fn);
  return f;
}

FieldModel& FieldModel::add_condition(std::string id, Vec mean, double s0) {
  if (kind_ == FieldKind::mixture) {
    return add_mixture_condition(std::move(id), {MixtureComponent{1.0, std::move(mean), s0}});
  }
  if (kind_ == FieldKind::callback) throw InvalidParams("callback fields have no condition table");
  if (has_condition(id)) throw InvalidParams("duplicate condition id '" + id + "'");
  if (mean.size() != dim_) throw InvalidParams("condition mean has wrong dimension");
  if (!(s0 >= 0.0)) throw InvalidParams("condition s0 must be >= 0");
  conditions_.push_back(Condition{std::move(id), std::move(mean), s0, {}});
  return *this;
}

FieldModel& FieldModel::add_mixture_condition(std::string id,
                                              std::vector<MixtureComponent> components) {
  if (kind_ != FieldKind::mixture) throw InvalidParams("mixture conditions need a mixture field");
  if (has_condition(id)) throw InvalidParams("duplicate condition id '" + id + "'");
  if (components.empty()) throw InvalidParams("mixture condition needs components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0)) throw InvalidParams("mixture weights must be positive");
    if (c.mean.size() != dim_) throw InvalidParams("mixture mean has wrong dimension");
    if (!(c.s0 >= 0.0)) throw InvalidParams("mixture s0 must be >= 0");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidParams("mixture weights must sum to 1");
  Condition cond;
  cond.id = std::move(id);
  cond.components = std::move(components);
  cond.mean = cond.components.front().mean;
  cond.s0 = cond.components.front().s0;
  conditions_.push_back(std::move(cond));
  return *this;
}

std::size_t FieldModel::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < conditions_.size(); ++i)
    if (conditions_[i].id == id) return i;
  return conditions_.size();
}

bool FieldModel::has_condition(std::string_view id) const {
  return kind_ == FieldKind::callback || index_of(id) < conditions_.size();
}

const Condition& FieldModel::condition(std::string_view id) const {
  std::size_t i = index_of(id);
  if (i == conditions_.size())
    throw InvalidParams("unknown condition id '" + std::string(id) + "'");
  return conditions_[i];
}

FieldModel FieldModel::with_smoothing(double rho) const {
  if (kind_ != FieldKind::rough) throw InvalidParams("smoothing applies to rough fields only");
  if (!(rho >= 0.0)) throw InvalidParams("smoothing factor must be >= 0");
  FieldModel copy = *this;
  copy.rough_.smoothing = rho;
  return copy;
}

Vec FieldModel::gaussian_eps(const Vec& x, const NoiseLevel& lv, const Vec& mean,
                             double s0) const {
  const double var = lv.alpha * lv.alpha * s0 * s0 + lv.sigma * lv.sigma;
  return (lv.sigma / var) * (x - lv.alpha * mean);
}

Vec FieldModel::eps(const Vec& x, const NoiseLevel& lv, std::string_view cond) const {
  if (x.size() != dim_) throw InvalidParams("state has wrong dimension for field");
  switch (kind_) {
    case FieldKind::gaussian: {
      const Condition& c = condition(cond);
      return gaussian_eps(x, lv, c.mean, c.s0);
    }
    case FieldKind::mixture: {
      const Condition& c = condition(cond);
      const std::size_t m = c.components.size();
      std::vector<double> logw(m);
      std::vector<double> var(m);
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < m; ++k) {
        const auto& comp = c.components[k];
        var[k] = lv.alpha * lv.alpha * comp.s0 * comp.s0 + lv.sigma * lv.sigma;
        const double r2 = (x - lv.alpha * comp.mean).squaredNorm();
        logw[k] = std::log(comp.weight) - 0.5 * dim_ * std::log(var[k]) - 0.5 * r2 / var[k];
        top = std::max(top, logw[k]);
      }
      double norm = 0.0;
      for (std::size_t k = 0; k < m; ++k) norm += std::exp(logw[k] - top);
      Vec out = Vec::Zero(dim_);
      for (std::size_t k = 0; k < m; ++k) {
        const double post = std::exp(logw[k] - top) / norm;
        out += (post * lv.sigma / var[k]) * (x - lv.alpha * c.components[k].mean);
      }
      return out;
    }
    case FieldKind::rough: {
      const Condition& c = condition(cond);
      Vec out = gaussian_eps(x, lv, c.mean, c.s0);
      const double amp = rough_.smoothing * rough_.amplitude;
      if (amp == 0.0) return out;
      for (int j = 0; j < dim_; ++j) {
        const double arg = rough_.frequency * (x[j] + x[(j + 1) % dim_]) +
                           rough_.time_frequency * lv.lambda + condition_phase(c.id, j);
        out[j] += amp * std::sin(arg);
      }
      return out;
    }
    case FieldKind::callback: {
      Vec out = callback_(x, lv.t, std::string(cond));
      if (out.size() != dim_)
        throw Error("callback returned " + std::to_string(out.size()) + " values, expected " +
                    std::to_string(dim_));
      if (!out.allFinite()) throw DivergenceError("callback returned non-finite values");
      return out;
    }
  }
  return {};
}

void GuidanceConfig::validate(const FieldModel& model) const {
  if (!(scale >= 0.0)) throw InvalidParams("guidance scale must be >= 0");
  if (!(quantile > 0.0) || !(quantile < 1.0)) throw InvalidParams("quantile must lie in (0,1)");
  if (mode != GuidanceMode::plain && source.empty())
    throw InvalidParams("guidance mode needs a source condition");
  for (const std::string* id : {&source, &target}) {
    if (!id->empty() && !model.has_condition(*id))
      throw InvalidParams("unknown condition id '" + *id + "'");
  }
  if (mode == GuidanceMode::plain && scale != 1.0 && !model.has_condition(null_id))
    throw InvalidParams("plain guidance needs the null condition '" + null_id + "'");
}

namespace {

double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Vec guided_eps(const FieldModel& model, const GuidanceConfig& g, const Vec& x,
               const NoiseLevel& level, Phase phase) {
  const double w = g.scale;
  switch (g.mode) {
    case GuidanceMode::plain: {
      const std::string& c = phase == Phase::inversion ? g.source : g.target;
      Vec cond = model.eps(x, level, c);
      if (w == 1.0) return cond;
      return w * cond + (1.0 - w) * model.eps(x, level, g.null_id);
    }
    case GuidanceMode::npi_inversion: {
      if (g.source.empty()) throw InvalidParams("NPI guidance needs a source condition");
      Vec src = model.eps(x, level, g.source);
      if (phase == Phase::inversion || w == 1.0) return src;
      return w * model.eps(x, level, g.target) + (1.0 - w) * src;
    }
    case GuidanceMode::proximal: {
      if (g.source.empty()) throw InvalidParams("proximal guidance needs a source condition");
      Vec src = model.eps(x, level, g.source);
      Vec trg = model.eps(x, level, g.target);
      const Vec& cond = phase == Phase::inversion ? src : trg;
      if (w == 1.0) return cond;
      Vec out = w * cond + (1.0 - w) * model.eps(x, level, g.null_id);
      std::vector<double> delta(static_cast<std::size_t>(x.size()));
      for (Eigen::Index j = 0; j < x.size(); ++j) delta[j] = std::abs(trg[j] - src[j]);
      const double cutoff = quantile_of(delta, g.quantile);
      for (Eigen::Index j = 0; j < x.size(); ++j)
        if (delta[j] < cutoff) out[j] = cond[j];
      return out;
    }
  }
  return {};
}

EpsFn bind_eps(const FieldModel& model, const GuidanceConfig& guidance, Phase phase) {
  guidance.validate(model);
  return [&model, guidance, phase](const Vec& x, const NoiseLevel& lv) {
    return guided_eps(model, guidance, x, lv, phase);
  };
}

namespace {
void check_level(const NoiseLevel& lv) {
  if (!(lv.alpha > 1e-300) || !(lv.sigma > 1e-300) || !std::isfinite(lv.alpha) ||
      !std::isfinite(lv.sigma))
    throw OutOfRange("alpha or sigma underflows at this time");
}
}  // namespace

Vec eps_to_x0(const NoiseLevel& lv, const Vec& x, const Vec& eps) {
  check_level(lv);
  return (x - lv.sigma * eps) / lv.alpha;
}

Vec x0_to_eps(const NoiseLevel& lv, const Vec& x, const Vec& x0) {
  check_level(lv);
  return (x - lv.alpha * x0) / lv.sigma;
}

}  // namespace revode
