// SPDX-License-Identifier: Apache-2.0
#include "revode/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "revode/error.hpp"
#include "revode/steps.hpp"
#include "revode/svg.hpp"

namespace revode {

namespace {
constexpr double kBoundaryTol = 1e-9;

// Centre of cell i out of n; written so that mirrored cells get exactly
// negated offsets from the window midpoint.
double axis_point(double lo, double hi, int i, int n) {
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  return mid + half * static_cast<double>(2 * i + 1 - n) / static_cast<double>(n);
}

void check_raster(const Window& w, int nx, int ny) {
  if (nx < 1 || ny < 1) throw InvalidParams("raster resolution must be positive");
  if (!(w.re_min < w.re_max && w.im_min < w.im_max))
    throw InvalidParams("window must have re_min < re_max and im_min < im_max");
}

std::int8_t verdict(double magnitude, double bound) {
  if (std::abs(magnitude - bound) < kBoundaryTol) return -1;
  return magnitude < bound ? 1 : 0;
}
}  // namespace

std::string_view to_string(RasterSource s) {
  switch (s) {
    case RasterSource::polynomial: return "polynomial";
    case RasterSource::empirical: return "empirical";
    case RasterSource::gamma_criterion: return "gamma-criterion";
  }
  return "?";
}

Complex StabilityRaster::point(int ix, int iy) const {
  return {axis_point(window.re_min, window.re_max, ix, nx),
          axis_point(window.im_min, window.im_max, iy, ny)};
}

std::size_t StabilityRaster::count(std::int8_t v) const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), v));
}

bool StabilityRaster::mirror_symmetric() const {
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      if (at(ix, iy) != at(ix, ny - 1 - iy)) return false;
  return true;
}

StabilityRaster polynomial_domain(const StabilityPolynomial& r, const Window& w, int nx, int ny) {
  check_raster(w, nx, ny);
  StabilityRaster out{w, nx, ny, RasterSource::polynomial, {}, {}};
  out.cells.resize(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix)
      out.cells[static_cast<std::size_t>(iy) * nx + ix] = verdict(std::abs(r(out.point(ix, iy))), 1.0);
  return out;
}

LinearProbe linear_probe(const SolverSpec& spec, Complex z, int n_iters, double growth_cap) {
  auto f = [z](double, const Complex& y) { return z * y; };
  auto psi = [&](double s, const Complex& y, double h) {
    return steps::rk_increment<Complex>(spec.tableau, f, s, y, h);
  };
  LinearProbe out;
  auto track = [&](const Complex& a, const Complex& b) {
    const double m = std::max(std::abs(a), std::abs(b));
    ++out.iterations;
    out.last = std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
    out.peak = std::max(out.peak, out.last);
    return out.peak > growth_cap;
  };

  Complex x = 1.0;
  switch (spec.kind) {
    case SolverKind::ddim:
    case SolverKind::ees: {
      const ButcherTableau tab = spec.kind == SolverKind::ddim ? euler_tableau() : spec.tableau;
      for (int n = 0; n < n_iters; ++n) {
        x = steps::rk_step<Complex>(tab, f, 0.0, x, 1.0);
        if (track(x, x)) break;
      }
      break;
    }
    case SolverKind::edict: {
      steps::CoupledState<Complex> st{x, x};
      for (int n = 0; n < n_iters; ++n) {
        st = steps::edict_forward<Complex>(f, st, spec.p, 0.0, 1.0);
        if (track(st.x, st.x_hat)) break;
      }
      break;
    }
    case SolverKind::reversible_heun: {
      steps::HeunState<Complex> st{x, x, z * x};
      for (int n = 0; n < n_iters; ++n) {
        st = steps::reversible_heun_forward<Complex>(f, st, 0.0, 1.0);
        if (track(st.x, st.x_hat)) break;
      }
      break;
    }
    case SolverKind::rex:
    case SolverKind::mccallum_foster: {
      steps::CoupledState<Complex> st{x, x};
      for (int n = 0; n < n_iters; ++n) {
        st = steps::coupled_forward<Complex>(psi, st, spec.zeta, 0.0, 0.0, 1.0);
        if (track(st.x, st.x_hat)) break;
      }
      break;
    }
    case SolverKind::bdia:
    case SolverKind::obelm: {
      // Unit steps with alpha = 1: the DDIM increment from x_c to a neighbour
      // at distance +-1 is +-z x_c. The first step is a DDIM bootstrap.
      Complex prev = x;
      Complex cur = x + z * x;
      if (track(cur, prev)) break;
      const auto k = steps::obelm_coefficients(1.0, 1.0);
      for (int n = 1; n < n_iters; ++n) {
        const Complex e = z * cur;
        const Complex next = spec.kind == SolverKind::obelm
                                 ? steps::obelm_forward<Complex>(k, prev, cur, e)
                                 : steps::bdia_forward<Complex>(spec.gamma, prev, cur, -e, e);
        prev = cur;
        cur = next;
        if (track(cur, prev)) break;
      }
      break;
    }
  }
  return out;
}

bool empirical_boundedness(const SolverSpec& spec, Complex z, int n_iters, double growth_cap) {
  return linear_probe(spec, z, n_iters, growth_cap).peak <= growth_cap;
}

StabilityRaster empirical_domain(const SolverSpec& spec, const Window& w, int nx, int ny,
                                 int n_iters, double growth_cap, int jobs) {
  check_raster(w, nx, ny);
  StabilityRaster out{w, nx, ny, RasterSource::empirical, spec.label, {}};
  out.cells.resize(static_cast<std::size_t>(nx) * ny);
  auto run_rows = [&](int first, int stride) {
    for (int iy = first; iy < ny; iy += stride)
      for (int ix = 0; ix < nx; ++ix)
        out.cells[static_cast<std::size_t>(iy) * nx + ix] =
            empirical_boundedness(spec, out.point(ix, iy), n_iters, growth_cap) ? 1 : 0;
  };
  const int n_threads = std::max(1, std::min(jobs, ny));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(run_rows, t, n_threads);
  run_rows(0, n_threads);
  for (auto& th : pool) th.join();
  return out;
}

Complex mcf_gamma(const StabilityPolynomial& base, double zeta, Complex z) {
  const Complex rp = base(z) - 1.0;
  const Complex rm = base(-z) - 1.0;
  return 1.0 + zeta - (1.0 - zeta) * rm - rm * rp;
}

double mcf_spectral_radius(const StabilityPolynomial& base, double zeta, Complex z) {
  // The coupled linear map has trace Gamma(z) and determinant zeta.
  const Complex g = mcf_gamma(base, zeta, z);
  const Complex d = std::sqrt(g * g - 4.0 * zeta);
  return std::max(std::abs(0.5 * (g + d)), std::abs(0.5 * (g - d)));
}

StabilityRaster mcf_gamma_region(const StabilityPolynomial& base, double zeta, const Window& w,
                                 int nx, int ny, GammaTest test) {
  check_raster(w, nx, ny);
  if (!(zeta > 0.0 && zeta <= 1.0)) throw InvalidParams("zeta must lie in (0, 1]");
  StabilityRaster out{w, nx, ny, RasterSource::gamma_criterion, {}, {}};
  out.cells.resize(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const Complex z = out.point(ix, iy);
      out.cells[static_cast<std::size_t>(iy) * nx + ix] =
          test == GammaTest::literal
              ? verdict(std::abs(mcf_gamma(base, zeta, z)), 1.0 + zeta)
              : verdict(mcf_spectral_radius(base, zeta, z), 1.0);
    }
  return out;
}

double raster_agreement(const StabilityRaster& a, const StabilityRaster& b, bool interior_only) {
  if (a.nx != b.nx || a.ny != b.ny) throw InvalidParams("raster shapes differ");
  std::size_t same = 0, total = 0;
  for (int iy = 0; iy < a.ny; ++iy)
    for (int ix = 0; ix < a.nx; ++ix) {
      if (interior_only && (ix == 0 || iy == 0 || ix == a.nx - 1 || iy == a.ny - 1)) continue;
      const auto va = a.at(ix, iy), vb = b.at(ix, iy);
      if (va < 0 || vb < 0) continue;
      ++total;
      same += va == vb;
    }
  return total ? static_cast<double>(same) / static_cast<double>(total) : 1.0;
}

ZeroStability zero_stability(const std::vector<double>& coeffs) {
  std::vector<double> c = coeffs;
  while (!c.empty() && c.back() == 0.0) c.pop_back();
  if (c.size() < 2) throw InvalidParams("characteristic polynomial needs degree >= 1");
  const int n = static_cast<int>(c.size()) - 1;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);

  ZeroStability out;
  for (int i = 0; i < n; ++i) out.roots.push_back(es.eigenvalues()[i]);
  std::sort(out.roots.begin(), out.roots.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  out.bounded_roots = std::all_of(out.roots.begin(), out.roots.end(),
                                  [](Complex r) { return std::abs(r) <= 1.0 + 1e-9; });
  out.root_condition = out.bounded_roots;
  for (std::size_t i = 0; i < out.roots.size(); ++i) {
    if (std::abs(std::abs(out.roots[i]) - 1.0) > 1e-9) continue;
    for (std::size_t j = i + 1; j < out.roots.size(); ++j)
      if (std::abs(out.roots[i] - out.roots[j]) < 1e-6) out.root_condition = false;
  }
  return out;
}

std::vector<double> ddim_characteristic() { return {-1.0, 1.0}; }
std::vector<double> obelm_uniform_characteristic() { return {-1.0, 0.0, 1.0}; }
std::vector<double> bdia_characteristic(double gamma) { return {-gamma, -(1.0 - gamma), 1.0}; }

double real_axis_boundary(const StabilityPolynomial& r, double lower) {
  auto inside = [&](double x) { return std::abs(r(x)) < 1.0; };
  const double step = 1e-3;
  double x = -step;
  if (!inside(x)) throw InvalidParams("method is not stable just left of the origin");
  while (x - step > lower && inside(x - step)) x -= step;
  if (x - step <= lower) return lower;
  double a = x - step, b = x;  // a outside, b inside
  for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
    const double m = 0.5 * (a + b);
    (inside(m) ? b : a) = m;
  }
  return 0.5 * (a + b);
}

void write_raster_csv(const StabilityRaster& r, std::ostream& os) {
  os << "re,im,stable\n";
  char buf[96];
  for (int iy = 0; iy < r.ny; ++iy)
    for (int ix = 0; ix < r.nx; ++ix) {
      const Complex z = r.point(ix, iy);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", z.real(), z.imag(), int(r.at(ix, iy)));
      os << buf;
    }
}

std::string raster_svg(const std::vector<StabilityRaster>& layers) {
  if (layers.empty()) throw InvalidParams("no raster layers");
  const Window& w = layers.front().window;
  const double W = 560, H = 560 * (w.im_max - w.im_min) / (w.re_max - w.re_min) + 60;
  const double L = 40, T = 30, pw = W - 2 * L + 40, ph = H - T - 40;
  auto px = [&](double re) { return L + (re - w.re_min) / (w.re_max - w.re_min) * (pw - 40); };
  auto py = [&](double im) { return T + (w.im_max - im) / (w.im_max - w.im_min) * ph; };

  svg::Canvas c(W + 140, H);
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& r = layers[li];
    const double cw = (w.re_max - w.re_min) / r.nx;
    const double ch = (w.im_max - w.im_min) / r.ny;
    const std::string col = svg::palette(li);
    for (int iy = 0; iy < r.ny; ++iy)
      for (int ix = 0; ix < r.nx; ++ix) {
        if (r.at(ix, iy) != 1) continue;
        const Complex z = r.point(ix, iy);
        c.rect(px(z.real() - cw / 2), py(z.imag() + ch / 2), px(z.real() + cw / 2) - px(z.real() - cw / 2),
               py(z.imag() - ch / 2) - py(z.imag() + ch / 2), col, 0.35);
      }
    const double ly = T + 18.0 * static_cast<double>(li);
    c.rect(W + 10, ly - 9, 12, 12, col, 0.6);
    c.text(W + 28, ly + 2, r.label.empty() ? std::string(to_string(r.source)) : r.label, 11);
  }
  if (w.re_min < 0 && w.re_max > 0) c.line(px(0), py(w.im_max), px(0), py(w.im_min), "black", 0.8);
  if (w.im_min < 0 && w.im_max > 0) c.line(px(w.re_min), py(0), px(w.re_max), py(0), "black", 0.8);
  char buf[128];
  std::snprintf(buf, sizeof buf, "Re [%g, %g]  Im [%g, %g]", w.re_min, w.re_max, w.im_min, w.im_max);
  c.text(L, H - 10, buf, 11);
  return c.str();
}

}  // namespace revode
