// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "revode/error.hpp"
#include "revode/steps.hpp"
#include "revode/tableau.hpp"

using namespace revode;

namespace {

double max_entry_diff(const ButcherTableau& t, const oracle::Tableau& ref) {
  double d = 0.0;
  for (int i = 0; i < t.stages(); ++i) {
    d = std::max(d, std::abs(t.b[i] - ref.b[i]));
    d = std::max(d, std::abs(t.c[i] - ref.c[i]));
    for (int j = 0; j < i; ++j) d = std::max(d, std::abs(t.a(i, j) - ref.a[i][j]));
    for (int j = i; j < t.stages(); ++j) d = std::max(d, std::abs(t.a(i, j)));
  }
  return d;
}

double local_antisymmetric_error(const ButcherTableau& tab, double h) {
  auto f = [](double s, double y) { return std::cos(y) - 0.3 * y * y + 0.2 * std::sin(s); };
  const double y0 = 0.4, s0 = 0.1;
  const double y1 = steps::rk_step<double>(tab, f, s0, y0, h);
  const double back = steps::rk_step<double>(tab, f, s0 + h, y1, -h);
  return std::abs(back - y0);
}

double local_error(const ButcherTableau& tab, double h) {
  auto f = [](double, double y) { return -y * y; };  // y = 1 / (1 + t)
  return std::abs(steps::rk_step<double>(tab, f, 0.0, 1.0, h) - 1.0 / (1.0 + h));
}

// Away from the excluded parameters, where tableau entries blow up.
bool well_conditioned_ees27(double x) {
  const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0);
  for (double bad : {1.0, 0.5, r2 / 2, -r2 / 2, 2 + r3, 2 - r3, 0.5 * (1 - r2), 0.5 * (2 - r2)})
    if (std::abs(x - bad) < 1e-2) return false;
  return true;
}

}  // namespace

TEST_CASE("EES(2,5;1/10) reproduces the displayed tableau") {
  const auto t = ees25_tableau(0.1);
  CHECK(t.stages() == 3);
  CHECK(t.order == 2);
  CHECK(t.antisymmetric_order == 5);
  CHECK(max_entry_diff(t, oracle::ees25_displayed()) < 1e-14);
}

TEST_CASE("default EES(2,7) reproduces the displayed tableau") {
  const auto t = ees27_tableau();
  CHECK(t.stages() == 4);
  CHECK(t.antisymmetric_order == 7);
  CHECK(ees27_default_x() == doctest::Approx((5 - 3 * std::sqrt(2.0)) / 14).epsilon(1e-15));
  CHECK(max_entry_diff(t, oracle::ees27_displayed()) < 1e-14);
}

TEST_CASE("EES(2,5;x) matches the family formulas and is consistent") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  int checked = 0;
  while (checked < 50) {
    const double x = u(gen);
    if (std::abs(x - 1) < 1e-2 || std::abs(std::abs(x) - 0.5) < 1e-2) continue;
    const auto t = ees25_tableau(x);
    CHECK(max_entry_diff(t, oracle::ees25_family(x)) < 1e-12);
    CHECK_NOTHROW(t.check_consistency(1e-13, 1e-12));
    CHECK((t.b.array() * t.c.array()).sum() == doctest::Approx(0.5).epsilon(1e-12));
    ++checked;
  }
}

TEST_CASE("EES(2,7;x) is consistent for admissible x on both branches") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int sign : {+1, -1}) {
    int checked = 0;
    while (checked < 50) {
      const double x = u(gen);
      if (ees27_excluded(x, sign)) continue;
      const auto t = ees27_tableau(x, sign);
      // near-singular parameters give large entries; scale the tolerance
      const double scale = 1.0 + t.a.cwiseAbs().maxCoeff();
      CHECK_NOTHROW(t.check_consistency(1e-12 * scale, 1e-12 * scale));
      CHECK((t.b.array() * t.c.array()).sum() == doctest::Approx(0.5).epsilon(1e-10 * scale));
      ++checked;
    }
  }
}

TEST_CASE("excluded parameters are rejected") {
  for (double x : {1.0, 0.5, -0.5}) CHECK_THROWS_AS(ees25_tableau(x), InvalidParams);
  const double r2 = std::sqrt(2.0);
  for (double x : {1.0, 0.5, r2 / 2, -r2 / 2, 2 + std::sqrt(3.0), 2 - std::sqrt(3.0), 0.5 * (1 - r2),
                   0.5 * (2 - r2)}) {
    CHECK(ees27_excluded(x, +1));
    CHECK_THROWS_AS(ees27_tableau(x, +1), InvalidParams);
  }
  CHECK_THROWS_AS(ees27_tableau(0.1, 0), InvalidParams);
  CHECK_THROWS_AS(tableau_by_name("rk4", 0.2), InvalidParams);
  CHECK_THROWS_AS(tableau_by_name("dopri"), InvalidParams);
}

TEST_CASE("stability polynomials are independent of x") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    double x = u(gen);
    if (std::abs(x - 1) > 1e-2 && std::abs(std::abs(x) - 0.5) > 1e-2) {
      const auto p = stability_polynomial(ees25_tableau(x));
      REQUIRE(p.coeffs.size() == 4);
      for (int k = 0; k < 4; ++k) CHECK(std::abs(p.coeffs[k] - oracle::ees25_R()[k]) < 1e-12);
    }
    x = u(gen);
    if (well_conditioned_ees27(x)) {
      const auto p = stability_polynomial(ees27_tableau(x, +1));
      REQUIRE(p.coeffs.size() == 5);
      for (int k = 0; k < 5; ++k) CHECK(std::abs(p.coeffs[k] - oracle::ees27_R()[k]) < 1e-12);
    }
  }
}

TEST_CASE("stability polynomial agrees with a direct linear step") {
  const std::vector<std::pair<ButcherTableau, oracle::Tableau>> cases = {
      {ees25_tableau(0.1), oracle::ees25_displayed()}, {ees27_tableau(), oracle::ees27_displayed()}};
  for (const auto& [tab, ref] : cases) {
    const auto p = stability_polynomial(tab);
    for (auto z : {oracle::cplx(-1.5, 0), oracle::cplx(-0.3, 2.0), oracle::cplx(0.5, -1.0)})
      CHECK(std::abs(p(z) - oracle::rk_linear_step(ref, z)) < 1e-13);
  }
  const auto rk4 = stability_polynomial(rk4_tableau());
  const std::vector<double> expect{1, 1, 0.5, 1.0 / 6, 1.0 / 24};
  for (int k = 0; k < 5; ++k) CHECK(rk4.coeffs[k] == doctest::Approx(expect[k]).epsilon(1e-15));
}

TEST_CASE("measured local orders") {
  for (const auto& tab : {ees25_tableau(0.1), ees27_tableau(), rk4_tableau(), midpoint_tableau()}) {
    const double e1 = local_error(tab, 0.02), e2 = local_error(tab, 0.01);
    CHECK(std::log2(e1 / e2) == doctest::Approx(tab.order + 1).epsilon(0.1));
  }
  for (const auto& tab : {ees25_tableau(0.1), ees27_tableau(), ees25_tableau(-1.3)}) {
    const double e1 = local_antisymmetric_error(tab, 0.1), e2 = local_antisymmetric_error(tab, 0.05);
    CAPTURE(tab.label);
    CHECK(std::log2(e1 / e2) == doctest::Approx(tab.antisymmetric_order + 1).epsilon(0.08));
  }
}

TEST_CASE("coefficients are printed as short fractions when exact") {
  CHECK(format_coefficient(0.1) == "1/10");
  CHECK(format_coefficient(-5.0 / 48) == "-5/48");
  CHECK(format_coefficient(1.0) == "1");
  CHECK(format_coefficient(0.0) == "0");
  CHECK(format_coefficient(std::sqrt(2.0)).find('/') == std::string::npos);
  const std::string d = describe(ees25_tableau(0.1));
  CHECK(d.find("b: 1/10 1/2 2/5") != std::string::npos);
  CHECK(d.find("R(z) coefficients: 1 1 1/2 1/8") != std::string::npos);
}

TEST_CASE("classical tableaux are consistent and explicit") {
  for (const auto& t : classical_tableaux()) {
    CHECK(t.is_explicit());
    CHECK_NOTHROW(t.check_consistency());
  }
  for (const auto& n : tableau_names()) CHECK_NOTHROW(tableau_by_name(n));
}
