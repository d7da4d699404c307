// SPDX-License-Identifier: Apache-2.0
#include "revode/tableau.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "revode/error.hpp"

namespace revode {

namespace {

ButcherTableau make(std::string label, int stages, int order, int anti) {
  ButcherTableau t;
  t.label = std::move(label);
  t.a = Eigen::MatrixXd::Zero(stages, stages);
  t.b = Vec::Zero(stages);
  t.c = Vec::Zero(stages);
  t.order = order;
  t.antisymmetric_order = anti;
  return t;
}

void fill_nodes(ButcherTableau& t) {
  for (int i = 0; i < t.stages(); ++i) t.c[i] = t.a.row(i).sum();
}

bool near(double v, double target) { return std::abs(v - target) < 1e-12; }

}  // namespace

bool ButcherTableau::is_explicit() const {
  for (int i = 0; i < stages(); ++i)
    for (int j = i; j < stages(); ++j)
      if (a(i, j) != 0.0) return false;
  return true;
}

void ButcherTableau::check_consistency(double b_tol, double c_tol) const {
  if (a.rows() != stages() || a.cols() != stages() || c.size() != stages())
    throw InvalidParams(label + ": tableau shape mismatch");
  if (std::abs(b.sum() - 1.0) > b_tol) throw InvalidParams(label + ": weights do not sum to 1");
  for (int i = 0; i < stages(); ++i)
    if (std::abs(a.row(i).sum() - c[i]) > c_tol)
      throw InvalidParams(label + ": node " + std::to_string(i) + " differs from its row sum");
}

double ees25_default_x() { return 0.1; }
double ees27_default_x() { return (5.0 - 3.0 * std::numbers::sqrt2) / 14.0; }

ButcherTableau ees25_tableau(double x) {
  if (!std::isfinite(x) || near(x, 1.0) || near(x, 0.5) || near(x, -0.5))
    throw InvalidParams("inadmissible parameter x for EES(2,5)");
  ButcherTableau t = make("EES(2,5;" + format_coefficient(x) + ")", 3, 2, 5);
  t.a(1, 0) = (1.0 + 2.0 * x) / (4.0 * (1.0 - x));
  t.a(2, 0) = (4.0 * x - 1.0) * (4.0 * x - 1.0) / (4.0 * (x - 1.0) * (1.0 - 4.0 * x * x));
  t.a(2, 1) = (1.0 - x) / (1.0 - 4.0 * x * x);
  t.b << x, 0.5, 0.5 - x;
  t.c << 0.0, (1.0 + 2.0 * x) / (4.0 * (1.0 - x)), 3.0 / (4.0 * (1.0 - x));
  return t;
}

bool ees27_excluded(double x, int sign) {
  if (!std::isfinite(x) || (sign != 1 && sign != -1)) return true;
  const double r2 = std::numbers::sqrt2;
  const double r3 = std::sqrt(3.0);
  for (double bad : {1.0, 0.5, r2 / 2.0, -r2 / 2.0, 2.0 + r3, 2.0 - r3, (1.0 - r2) / 2.0,
                     (2.0 - r2) / 2.0})
    if (near(x, bad)) return true;
  const double s = sign * r2;
  for (double d : {x - 1.0, 2.0 * x - 1.0, 1.0 - s - 2.0 * x, 2.0 - s - 2.0 * x,
                   2.0 * x * x - 1.0, 2.0 * x * x - 4.0 * x + 1.0})
    if (std::abs(d) < 1e-12) return true;
  return false;
}

ButcherTableau ees27_tableau(double x, int sign) {
  if (ees27_excluded(x, sign)) throw InvalidParams("inadmissible parameter x for EES(2,7)");
  const double s = sign * std::numbers::sqrt2;
  const double x2 = x * x;
  const double al = (2.0 * x + s) / ((2.0 * x - 1.0) * (1.0 - 2.0 * x - s));
  const double be = 1.0 / ((2.0 * x - 1.0) * (1.0 - s - 2.0 * x) * (2.0 - s - 2.0 * x));

  ButcherTableau t = make(std::string("EES(2,7;") + format_coefficient(x) +
                              (sign > 0 ? ",+)" : ",-)"),
                          4, 2, 7);
  t.a(1, 0) = (-2.0 + s * (1.0 - 2.0 * x)) / (4.0 * (x - 1.0));
  t.a(2, 0) = (2.0 * x + s - 2.0) * (4.0 * x + s - 2.0) / (4.0 * s * (x - 1.0)) * al;
  t.a(2, 1) = 0.5 * (s - 1.0) * al;
  const double poly = -40.0 * x2 * x2 + (80.0 - 40.0 * s) * x2 * x - (88.0 - 60.0 * s) * x2 +
                      (48.0 - 34.0 * s) * x + 7.0 * s - 10.0;
  t.a(3, 0) = (2.0 * x - s) * poly / (4.0 * (x - 1.0) * (2.0 * x2 - 1.0)) * be;
  t.a(3, 1) = (2.0 - s) * x * (x - 1.0) * (4.0 * x + s - 2.0) * be;
  t.a(3, 2) = (2.0 - s) * (2.0 * x - s) * (2.0 + s - 2.0 * x) * (x - 1.0) * (2.0 * x - 1.0) /
              (4.0 * (2.0 * x2 - 1.0) * (2.0 * x2 - 4.0 * x + 1.0));
  t.b << x, 0.5 * (2.0 - s) - (1.0 - s) * x, (1.0 - s) * (x - 1.0), 0.5 * (2.0 - s) - x;
  fill_nodes(t);
  return t;
}

ButcherTableau ees27_tableau() { return ees27_tableau(ees27_default_x(), +1); }

ButcherTableau euler_tableau() {
  ButcherTableau t = make("Euler", 1, 1, 1);
  t.b << 1.0;
  return t;
}

ButcherTableau midpoint_tableau() {
  ButcherTableau t = make("Midpoint", 2, 2, 2);
  t.a(1, 0) = 0.5;
  t.b << 0.0, 1.0;
  fill_nodes(t);
  return t;
}

ButcherTableau heun2_tableau() {
  ButcherTableau t = make("Heun2", 2, 2, 2);
  t.a(1, 0) = 1.0;
  t.b << 0.5, 0.5;
  fill_nodes(t);
  return t;
}

ButcherTableau kutta3_tableau() {
  ButcherTableau t = make("Kutta-RK3", 3, 3, 3);
  t.a(1, 0) = 0.5;
  t.a(2, 0) = -1.0;
  t.a(2, 1) = 2.0;
  t.b << 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0;
  fill_nodes(t);
  return t;
}

ButcherTableau rk4_tableau() {
  ButcherTableau t = make("RK4", 4, 4, 4);
  t.a(1, 0) = 0.5;
  t.a(2, 1) = 0.5;
  t.a(3, 2) = 1.0;
  t.b << 1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0;
  fill_nodes(t);
  return t;
}

std::vector<ButcherTableau> classical_tableaux() {
  return {euler_tableau(), midpoint_tableau(), heun2_tableau(), kutta3_tableau(), rk4_tableau()};
}

std::vector<std::string> tableau_names() {
  return {"euler", "midpoint", "heun2", "rk3", "rk4", "ees25", "ees27"};
}

ButcherTableau tableau_by_name(std::string_view name, double x, int sign) {
  const bool has_x = !std::isnan(x);
  if (name == "ees25") return ees25_tableau(has_x ? x : ees25_default_x());
  if (name == "ees27") return ees27_tableau(has_x ? x : ees27_default_x(), sign);
  if (has_x) throw InvalidParams("tableau '" + std::string(name) + "' takes no parameter x");
  if (name == "euler") return euler_tableau();
  if (name == "midpoint") return midpoint_tableau();
  if (name == "heun2" || name == "heun") return heun2_tableau();
  if (name == "rk3" || name == "kutta3") return kutta3_tableau();
  if (name == "rk4") return rk4_tableau();
  throw InvalidParams("unknown tableau '" + std::string(name) + "'");
}

std::complex<double> StabilityPolynomial::operator()(std::complex<double> z) const {
  std::complex<double> acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

double StabilityPolynomial::operator()(double z) const {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + *it;
  return acc;
}

StabilityPolynomial stability_polynomial(const ButcherTableau& tab) {
  if (!tab.is_explicit()) throw InvalidParams("stability polynomial needs an explicit tableau");
  StabilityPolynomial p;
  p.coeffs.push_back(1.0);
  Vec v = Vec::Ones(tab.stages());
  for (int k = 1; k <= tab.stages(); ++k) {
    p.coeffs.push_back(tab.b.dot(v));
    v = tab.a * v;
  }
  while (p.coeffs.size() > 1 && p.coeffs.back() == 0.0) p.coeffs.pop_back();
  return p;
}

std::string format_coefficient(double v) {
  if (v == 0.0) return "0";
  if (std::isfinite(v)) {
    // Continued-fraction convergents up to a small denominator.
    double rem = std::abs(v);
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int iter = 0; iter < 20; ++iter) {
      const double whole = std::floor(rem);
      if (whole > 1e9) break;
      const auto a = static_cast<long long>(whole);
      const long long p2 = a * p1 + p0;
      const long long q2 = a * q1 + q0;
      if (q2 > 10000) break;
      p0 = p1, q0 = q1, p1 = p2, q1 = q2;
      const double approx = static_cast<double>(p1) / static_cast<double>(q1);
      if (std::abs(approx - std::abs(v)) <= 4e-16 * std::max(1.0, std::abs(v))) {
        std::string out = v < 0 ? "-" : "";
        out += std::to_string(p1);
        if (q1 != 1) out += "/" + std::to_string(q1);
        return out;
      }
      const double frac = rem - whole;
      if (frac < 1e-300) break;
      rem = 1.0 / frac;
    }
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string describe(const ButcherTableau& tab) {
  std::ostringstream os;
  os << tab.label << "\n";
  os << "stages " << tab.stages() << ", order " << tab.order << ", anti-symmetric order "
     << tab.antisymmetric_order << "\n";
  for (int i = 0; i < tab.stages(); ++i) {
    os << format_coefficient(tab.c[i]) << " |";
    for (int j = 0; j < i; ++j) os << " " << format_coefficient(tab.a(i, j));
    os << "\n";
  }
  os << "b:";
  for (int i = 0; i < tab.stages(); ++i) os << " " << format_coefficient(tab.b[i]);
  os << "\nR(z) coefficients:";
  for (double r : stability_polynomial(tab).coeffs) os << " " << format_coefficient(r);
  os << "\n";
  return os.str();
}

}  // namespace revode
