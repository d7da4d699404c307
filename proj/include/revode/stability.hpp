// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "revode/stepper.hpp"
#include "revode/tableau.hpp"

namespace revode {

using Complex = std::complex<double>;

struct Window {
  double re_min = -4.0, re_max = 1.0, im_min = -3.0, im_max = 3.0;
};

enum class RasterSource { polynomial, empirical, gamma_criterion };
std::string_view to_string(RasterSource s);

/// Cell verdicts: 1 stable, 0 unstable, -1 indeterminate (on the boundary).
struct StabilityRaster {
  Window window;
  int nx = 0, ny = 0;
  RasterSource source = RasterSource::polynomial;
  std::string label;
  std::vector<std::int8_t> cells;  // row-major, iy * nx + ix

  /// Centre of cell (ix, iy).
  Complex point(int ix, int iy) const;
  std::int8_t at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * nx + ix]; }
  std::size_t count(std::int8_t verdict) const;
  /// cells[z] == cells[conj z] for a window symmetric about the real axis.
  bool mirror_symmetric() const;
};

StabilityRaster polynomial_domain(const StabilityPolynomial& r, const Window& w, int nx, int ny);

/// Linear test equation y' = z y with h = 1 driven through the step rules of
/// `spec`, starting from y0 = 1. Bounded iff the iterate magnitude stays below
/// growth_cap over n_iters steps.
bool empirical_boundedness(const SolverSpec& spec, Complex z, int n_iters = 10000,
                           double growth_cap = 1e6);

struct LinearProbe {
  double peak = 1.0;   // largest iterate magnitude seen
  double last = 1.0;   // magnitude after the final iteration run
  int iterations = 0;  // stops early once the peak passes the cap
};

/// Same probe, reporting magnitudes.
LinearProbe linear_probe(const SolverSpec& spec, Complex z, int n_iters, double growth_cap);

StabilityRaster empirical_domain(const SolverSpec& spec, const Window& w, int nx, int ny,
                                 int n_iters = 10000, double growth_cap = 1e6, int jobs = 1);

/// Gamma(z) = 1 + zeta - (1 - zeta) R(-z) - R(-z) R(z) with R the base
/// solver's increment transfer function R_full(z) - 1.
Complex mcf_gamma(const StabilityPolynomial& base, double zeta, Complex z);

/// Largest root modulus of mu^2 - Gamma(z) mu + zeta, the characteristic
/// polynomial of the coupled linear map.
double mcf_spectral_radius(const StabilityPolynomial& base, double zeta, Complex z);

/// literal: |Gamma(z)| < 1 + zeta, exact for real z.
/// spectral: both roots of mu^2 - Gamma mu + zeta inside the unit disk, which
/// coincides with the literal test whenever Gamma(z) is real.
enum class GammaTest { spectral, literal };

StabilityRaster mcf_gamma_region(const StabilityPolynomial& base, double zeta, const Window& w,
                                 int nx, int ny, GammaTest test = GammaTest::spectral);

/// Fraction of cells with equal verdicts, skipping cells indeterminate in either.
double raster_agreement(const StabilityRaster& a, const StabilityRaster& b,
                        bool interior_only = true);

struct ZeroStability {
  std::vector<Complex> roots;
  bool bounded_roots = false;   // every |root| <= 1
  bool root_condition = false;  // additionally, unit-modulus roots are simple
  bool verdicts_differ() const { return bounded_roots != root_condition; }
};

/// Root condition for the polynomial sum_k coeffs[k] zeta^k.
ZeroStability zero_stability(const std::vector<double>& coeffs);

/// First-characteristic polynomials (ascending coefficients) on y' = 0.
std::vector<double> ddim_characteristic();
std::vector<double> obelm_uniform_characteristic();
std::vector<double> bdia_characteristic(double gamma);

/// Point on the negative real axis where |R| first reaches 1.
double real_axis_boundary(const StabilityPolynomial& r, double lower = -20.0);

void write_raster_csv(const StabilityRaster& r, std::ostream& os);
std::string raster_svg(const std::vector<StabilityRaster>& layers);

}  // namespace revode
