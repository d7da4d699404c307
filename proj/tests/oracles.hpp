// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reference values and closed forms written out independently of the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using cplx = std::complex<double>;

inline const double kSqrt2 = std::sqrt(2.0);

// Linear-beta VP schedule: log alpha(t) = -(b1 - b0) t^2 / 4 - b0 t / 2.
inline double linear_beta_log_alpha(double t, double b0 = 0.1, double b1 = 20.0) {
  return -0.25 * t * t * (b1 - b0) - 0.5 * t * b0;
}

inline double linear_beta_alpha(double t) { return std::exp(linear_beta_log_alpha(t)); }

inline double linear_beta_sigma(double t) {
  return std::sqrt(-std::expm1(2.0 * linear_beta_log_alpha(t)));
}

// Cosine schedule: alpha(t) = cos(pi/2 (t + s)/(1 + s)) / cos(pi/2 s/(1 + s)).
inline double cosine_alpha(double t, double s = 0.008) {
  const double half_pi = std::acos(0.0);
  return std::cos(half_pi * (t + s) / (1.0 + s)) / std::cos(half_pi * s / (1.0 + s));
}

// Noise prediction of N(mean, s0^2 I) at level (alpha, sigma).
inline Vec gaussian_eps(const Vec& x, double alpha, double sigma, const Vec& mean, double s0) {
  const double var = alpha * alpha * s0 * s0 + sigma * sigma;
  return sigma * (x - alpha * mean) / var;
}

// Probability-flow map of N(mean, s0^2 I) between two levels.
inline Vec gaussian_flow(const Vec& x, double a0, double sg0, double a1, double sg1, const Vec& mean,
                         double s0) {
  const double sd0 = std::sqrt(a0 * a0 * s0 * s0 + sg0 * sg0);
  const double sd1 = std::sqrt(a1 * a1 * s0 * s0 + sg1 * sg1);
  return a1 * mean + (sd1 / sd0) * (x - a0 * mean);
}

// DDIM step written in x-space.
inline Vec ddim_step(const Vec& x, const Vec& eps, double a0, double sg0, double a1, double sg1) {
  return a1 * (x - sg0 * eps) / a0 + sg1 * eps;
}

struct Tableau {
  std::vector<std::vector<double>> a;
  std::vector<double> b, c;
};

// Displayed EES(2,5;1/10) tableau.
inline Tableau ees25_displayed() {
  return {{{}, {1.0 / 3}, {-5.0 / 48, 15.0 / 16}}, {1.0 / 10, 1.0 / 2, 2.0 / 5}, {0, 1.0 / 3, 5.0 / 6}};
}

// EES(2,5;x) family.
inline Tableau ees25_family(double x) {
  const double a21 = (1 + 2 * x) / (4 * (1 - x));
  const double a31 = (4 * x - 1) * (4 * x - 1) / (4 * (x - 1) * (1 - 4 * x * x));
  const double a32 = (1 - x) / (1 - 4 * x * x);
  return {{{}, {a21}, {a31, a32}}, {x, 0.5, 0.5 - x}, {0, a21, 3.0 / (4 * (1 - x))}};
}

// Displayed EES(2,7;(5 - 3 sqrt 2)/14) tableau.
inline Tableau ees27_displayed() {
  const double r = kSqrt2;
  return {{{},
           {(2 - r) / 3},
           {(-4 + r) / 24, (4 + r) / 8},
           {(-176 + 145 * r) / 168, 3 * (8 - 5 * r) / 56, 3 * (3 - r) / 7}},
          {(5 - 3 * r) / 14, (3 + r) / 14, 3 * (-1 + 2 * r) / 14, (9 - 4 * r) / 14},
          {0, (2 - r) / 3, (2 + r) / 6, (4 + r) / 6}};
}

// One explicit RK step of y' = z y from y = 1, stage by stage.
inline cplx rk_linear_step(const Tableau& t, cplx z) {
  std::vector<cplx> k(t.b.size());
  cplx y1 = 1.0;
  for (std::size_t i = 0; i < t.b.size(); ++i) {
    cplx yi = 1.0;
    for (std::size_t j = 0; j < i; ++j) yi += t.a[i][j] * k[j];
    k[i] = z * yi;
    y1 += t.b[i] * k[i];
  }
  return y1;
}

// Stability polynomial coefficients stated for the EES families.
inline std::vector<double> ees25_R() { return {1, 1, 0.5, 0.125}; }
inline std::vector<double> ees27_R() {
  return {1, 1, 0.5, (2 - kSqrt2) / 4, (3 - 2 * kSqrt2) / 8};
}

// Reversible Heun on y' = z y, h = 1, y0 = 1: largest state magnitude
// max(|y_n|, |yhat_n|) before the cap.
inline double reversible_heun_peak(cplx z, int n, double cap) {
  cplx x = 1.0, xh = 1.0, k = z * xh;
  double peak = 1.0;
  for (int i = 0; i < n && peak <= cap; ++i) {
    const cplx xh1 = 2.0 * x - xh + k;
    const cplx k1 = z * xh1;
    x = x + 0.5 * (k + k1);
    xh = xh1;
    k = k1;
    peak = std::max({peak, std::abs(x), std::abs(xh)});
  }
  return peak;
}

// Roots of c0 + c1 z + c2 z^2.
inline std::vector<cplx> quadratic_roots(double c0, double c1, double c2) {
  const cplx d = std::sqrt(cplx(c1 * c1 - 4 * c2 * c0));
  return {(-c1 + d) / (2 * c2), (-c1 - d) / (2 * c2)};
}

}  // namespace oracle
