// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "revode/error.hpp"
#include "revode/field.hpp"

using namespace revode;

namespace {

Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

NoiseLevel lvl(double lambda) { return level_from_lambda(lambda); }

}  // namespace

TEST_CASE("gaussian field matches the closed-form denoiser") {
  FieldModel f = FieldModel::gaussian(3);
  const Vec mu = v3(1.0, -2.0, 0.5);
  f.add_condition("c", mu, 0.7);
  const Vec x = v3(0.3, 0.1, -1.2);
  for (double l : {-4.0, 0.0, 3.0}) {
    const auto lv = lvl(l);
    const Vec ref = oracle::gaussian_eps(x, lv.alpha, lv.sigma, mu, 0.7);
    CHECK((f.eps(x, lv, "c") - ref).norm() < 1e-14 * (1 + ref.norm()));
  }
}

TEST_CASE("gaussian eps of a marginal sample is the scaled noise") {
  FieldModel f = FieldModel::gaussian(3);
  const Vec mu = v3(2.0, 0.0, -1.0);
  f.add_condition("c", mu, 0.4);
  const auto lv = lvl(0.7);
  const Vec z = v3(0.2, -0.9, 1.4);
  const double sd = std::sqrt(lv.alpha * lv.alpha * 0.16 + lv.sigma * lv.sigma);
  const Vec x = lv.alpha * mu + sd * z;
  CHECK((f.eps(x, lv, "c") - (lv.sigma / sd) * z).norm() < 1e-14);
}

TEST_CASE("single-component mixture equals the gaussian") {
  const Vec mu = v3(1.0, 1.0, -1.0);
  FieldModel g = FieldModel::gaussian(3);
  g.add_condition("c", mu, 0.5);
  FieldModel m = FieldModel::mixture(3);
  m.add_mixture_condition("c", {{1.0, mu, 0.5}});
  const Vec x = v3(-0.4, 2.0, 0.3);
  for (double l : {-3.0, 0.0, 4.0}) CHECK((g.eps(x, lvl(l), "c") - m.eps(x, lvl(l), "c")).norm() < 1e-14);
}

TEST_CASE("symmetric mixture at the midpoint averages the components") {
  const Vec a = v3(1.0, 0.0, 0.0), b = v3(-1.0, 0.0, 0.0);
  FieldModel m = FieldModel::mixture(3);
  m.add_mixture_condition("c", {{0.5, a, 0.3}, {0.5, b, 0.3}});
  const auto lv = lvl(1.0);
  const Vec x = v3(0.0, 0.4, -0.2);
  const Vec ref = 0.5 * (oracle::gaussian_eps(x, lv.alpha, lv.sigma, a, 0.3) +
                         oracle::gaussian_eps(x, lv.alpha, lv.sigma, b, 0.3));
  CHECK((m.eps(x, lv, "c") - ref).norm() < 1e-14);
}

TEST_CASE("mixture posterior weights stay finite far from both modes") {
  FieldModel m = FieldModel::mixture(3);
  m.add_mixture_condition("c", {{0.3, v3(5, 0, 0), 0.01}, {0.7, v3(-5, 0, 0), 0.01}});
  const Vec x = v3(400.0, -300.0, 250.0);
  const Vec e = m.eps(x, lvl(6.0), "c");
  CHECK(e.allFinite());
}

TEST_CASE("rough field: zero smoothing is the gaussian, amplitude scales linearly") {
  RoughParams p;
  p.amplitude = 0.2;
  FieldModel r = FieldModel::rough(3, p);
  FieldModel g = FieldModel::gaussian(3);
  const Vec mu = v3(0.5, -0.5, 1.0);
  r.add_condition("c", mu, 0.5);
  g.add_condition("c", mu, 0.5);
  const Vec x = v3(0.1, 0.2, 0.3);
  const auto lv = lvl(0.5);
  const Vec full = r.eps(x, lv, "c") - g.eps(x, lv, "c");
  const Vec half = r.with_smoothing(0.5).eps(x, lv, "c") - g.eps(x, lv, "c");
  CHECK(full.norm() > 1e-3);
  CHECK((half - 0.5 * full).norm() < 1e-15);
  CHECK((r.with_smoothing(0.0).eps(x, lv, "c") - g.eps(x, lv, "c")).norm() == 0.0);
  CHECK(full.cwiseAbs().maxCoeff() <= 0.2 + 1e-15);
  // deterministic and time dependent
  CHECK((r.eps(x, lv, "c") - r.eps(x, lv, "c")).norm() == 0.0);
  CHECK((r.eps(x, lvl(1.5), "c") - g.eps(x, lvl(1.5), "c") - full).norm() > 1e-6);
  CHECK_THROWS_AS(g.with_smoothing(0.5), InvalidParams);
}

TEST_CASE("classifier-free guidance combines conditional and null predictions") {
  FieldModel f = FieldModel::gaussian(3);
  f.add_condition("a", v3(1, 2, 3), 0.5).add_condition("b", v3(-1, 0, 1), 0.5);
  f.add_condition("null", v3(0, 0, 0), 0.5);
  const Vec x = v3(0.2, 0.2, 0.2);
  const auto lv = lvl(0.0);
  GuidanceConfig g;
  g.scale = 3.0;
  g.source = "a";
  g.target = "b";
  const Vec ea = f.eps(x, lv, "a"), eb = f.eps(x, lv, "b"), en = f.eps(x, lv, "null");
  CHECK((guided_eps(f, g, x, lv, Phase::inversion) - (3 * ea - 2 * en)).norm() < 1e-14);
  CHECK((guided_eps(f, g, x, lv, Phase::sampling) - (3 * eb - 2 * en)).norm() < 1e-14);

  SUBCASE("g = 1 is the conditional prediction") {
    g.scale = 1.0;
    CHECK((guided_eps(f, g, x, lv, Phase::sampling) - eb).norm() == 0.0);
  }
  SUBCASE("NPI replaces the null prediction by the source during inversion") {
    g.mode = GuidanceMode::npi_inversion;
    CHECK((guided_eps(f, g, x, lv, Phase::inversion) - ea).norm() < 1e-15);
    CHECK((guided_eps(f, g, x, lv, Phase::sampling) - (3 * eb - 2 * ea)).norm() < 1e-14);
  }
  SUBCASE("proximal guidance falls back to the conditional where src and trg agree") {
    g.mode = GuidanceMode::proximal;
    g.quantile = 0.5;
    const Vec out = guided_eps(f, g, x, lv, Phase::sampling);
    const Vec full = 3 * eb - 2 * en;
    const Vec d = (eb - ea).cwiseAbs();
    std::vector<double> ds(d.data(), d.data() + 3);
    std::sort(ds.begin(), ds.end());
    const double cutoff = ds[1];  // median of three
    for (int j = 0; j < 3; ++j) CHECK(out[j] == doctest::Approx(d[j] < cutoff ? eb[j] : full[j]));
  }
}

TEST_CASE("guidance validation") {
  FieldModel f = FieldModel::gaussian(2);
  Vec m(2);
  m << 1, 1;
  f.add_condition("a", m, 0.5);
  GuidanceConfig g;
  g.source = g.target = "a";
  g.scale = 2.0;
  CHECK_THROWS_AS(g.validate(f), InvalidParams);  // no null condition
  g.scale = 1.0;
  CHECK_NOTHROW(g.validate(f));
  g.target = "zzz";
  CHECK_THROWS_AS(g.validate(f), InvalidParams);
  g.target = "a";
  g.quantile = 1.0;
  CHECK_THROWS_AS(g.validate(f), InvalidParams);
  CHECK_THROWS_AS(f.add_condition("a", m, 0.5), InvalidParams);
  CHECK_THROWS_AS(f.add_condition("b", Vec::Zero(3), 0.5), InvalidParams);
  CHECK_THROWS_AS(f.eps(Vec::Zero(3), lvl(0), "a"), InvalidParams);
}

TEST_CASE("callback field forwards time and condition and checks its output") {
  std::string seen;
  double seen_t = -1;
  FieldModel f = FieldModel::callback(
      [&](const Vec& x, double t, const std::string& c) {
        seen = c;
        seen_t = t;
        return Vec(2 * x);
      },
      2);
  CHECK(f.needs_time());
  NoiseLevel lv = lvl(0.0);
  lv.t = 0.25;
  Vec x(2);
  x << 1, 2;
  CHECK((f.eps(x, lv, "cond") - 2 * x).norm() == 0.0);
  CHECK(seen == "cond");
  CHECK(seen_t == 0.25);

  FieldModel bad = FieldModel::callback([](const Vec&, double, const std::string&) { return Vec(3); }, 2);
  CHECK_THROWS_AS(bad.eps(x, lv, "c"), Error);
  FieldModel nan = FieldModel::callback(
      [](const Vec& v, double, const std::string&) { return Vec(Vec::Constant(v.size(), NAN)); }, 2);
  CHECK_THROWS_AS(nan.eps(x, lv, "c"), DivergenceError);
}

TEST_CASE("eps and x0 conversions are inverse and guard underflow") {
  const auto lv = lvl(0.3);
  const Vec x = v3(1, 2, 3), e = v3(-1, 0.5, 0.25);
  const Vec x0 = eps_to_x0(lv, x, e);
  CHECK((x0_to_eps(lv, x, x0) - e).norm() < 1e-14);
  NoiseLevel dead;
  dead.alpha = 0.0;
  dead.sigma = 1.0;
  CHECK_THROWS_AS(eps_to_x0(dead, x, e), OutOfRange);
}
