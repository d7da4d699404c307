// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "revode/linalg.hpp"

namespace revode {

/// Explicit Runge-Kutta scheme. `order` is the classical order n and
/// `antisymmetric_order` the order m at which Phi_{-h} o Phi_h departs from the
/// identity.
struct ButcherTableau {
  std::string label;
  Eigen::MatrixXd a;
  Vec b;
  Vec c;
  int order = 1;
  int antisymmetric_order = 1;

  int stages() const { return static_cast<int>(b.size()); }
  bool is_explicit() const;
  /// Throws InvalidParams when sum(b) != 1 or c_i != sum_j a_ij beyond tolerance.
  void check_consistency(double b_tol = 1e-13, double c_tol = 1e-13) const;
};

/// Default members of the two families.
double ees25_default_x();
double ees27_default_x();

/// EES(2,5;x). Rejects x in {1, 1/2, -1/2}.
ButcherTableau ees25_tableau(double x = 0.1);

/// EES(2,7;x). `sign` = +1 uses the +sqrt(2) branch, -1 the -sqrt(2) branch.
ButcherTableau ees27_tableau(double x, int sign = +1);
ButcherTableau ees27_tableau();

/// True when ees27_tableau(x, sign) would be rejected.
bool ees27_excluded(double x, int sign);

ButcherTableau euler_tableau();
ButcherTableau midpoint_tableau();
ButcherTableau heun2_tableau();
ButcherTableau kutta3_tableau();
ButcherTableau rk4_tableau();
std::vector<ButcherTableau> classical_tableaux();

/// Look up by name: euler, midpoint, heun2, rk3, rk4, ees25, ees27.
/// `x` is NaN for the family default.
ButcherTableau tableau_by_name(std::string_view name, double x = std::nan(""), int sign = +1);
std::vector<std::string> tableau_names();

/// R(z) = sum_k coeffs[k] z^k with coeffs[0] = 1.
struct StabilityPolynomial {
  std::vector<double> coeffs;

  std::complex<double> operator()(std::complex<double> z) const;
  double operator()(double z) const;
  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

/// r_k = b^T A^{k-1} e for an explicit tableau.
StabilityPolynomial stability_polynomial(const ButcherTableau& tab);

/// Short rational form "p/q" when v is a ratio of small integers, else %.17g.
std::string format_coefficient(double v);

/// Human-readable dump: label, order pair, A, b, c, R(z) coefficients.
std::string describe(const ButcherTableau& tab);

}  // namespace revode
