// SPDX-License-Identifier: Apache-2.0
#pragma once

// Single-step update rules, generic over the state type V (Vec or a complex
// scalar for the linear test equation). F is callable as F(s, y) -> V.

#include <utility>
#include <vector>

#include "revode/error.hpp"
#include "revode/linalg.hpp"
#include "revode/tableau.hpp"

namespace revode::steps {

/// h * sum_i b_i k_i for an explicit tableau.
template <class V, class F>
V rk_increment(const ButcherTableau& tab, F&& f, double s, const V& y, double h) {
  const int n = tab.stages();
  std::vector<V> k;
  k.reserve(n);
  V acc = zeros_like(y);
  for (int i = 0; i < n; ++i) {
    V yi = y;
    for (int j = 0; j < i; ++j)
      if (tab.a(i, j) != 0.0) yi += (h * tab.a(i, j)) * k[j];
    k.push_back(f(s + tab.c[i] * h, yi));
    if (!is_finite(k.back())) throw DivergenceError("non-finite stage value", i);
    if (tab.b[i] != 0.0) acc += (h * tab.b[i]) * k.back();
  }
  return acc;
}

template <class V, class F>
V rk_step(const ButcherTableau& tab, F&& f, double s, const V& y, double h) {
  V inc = rk_increment<V>(tab, f, s, y, h);
  return V(y + inc);
}

/// Reversible Heun state (x, x_hat, k).
template <class V>
struct HeunState {
  V x, x_hat, k;
};

template <class V, class F>
HeunState<V> reversible_heun_forward(F&& f, const HeunState<V>& st, double s_next, double h) {
  HeunState<V> out;
  out.x_hat = 2.0 * st.x - st.x_hat + h * st.k;
  out.k = f(s_next, out.x_hat);
  out.x = st.x + (0.5 * h) * (st.k + out.k);
  return out;
}

template <class V, class F>
HeunState<V> reversible_heun_backward(F&& f, const HeunState<V>& st, double s_prev, double h) {
  HeunState<V> out;
  out.x_hat = 2.0 * st.x - st.x_hat - h * st.k;
  out.k = f(s_prev, out.x_hat);
  out.x = st.x - (0.5 * h) * (st.k + out.k);
  return out;
}

/// Coupled pair (x, x_hat) of the McCallum-Foster construction; psi(s, y, h)
/// is the base-solver increment.
template <class V>
struct CoupledState {
  V x, x_hat;
};

template <class V, class Psi>
CoupledState<V> coupled_forward(Psi&& psi, const CoupledState<V>& st, double zeta, double s,
                                double s_next, double h) {
  CoupledState<V> out;
  out.x = zeta * st.x + (1.0 - zeta) * st.x_hat + psi(s, st.x_hat, h);
  out.x_hat = st.x_hat - psi(s_next, out.x, -h);
  return out;
}

template <class V, class Psi>
CoupledState<V> coupled_backward(Psi&& psi, const CoupledState<V>& st, double zeta, double s,
                                 double s_next, double h) {
  CoupledState<V> out;
  out.x_hat = st.x_hat + psi(s_next, st.x, -h);
  out.x = (st.x - (1.0 - zeta) * out.x_hat - psi(s, out.x_hat, h)) / zeta;
  return out;
}

/// EDICT pair; each inner line is an Euler step of the ratio-form ODE.
template <class V, class F>
CoupledState<V> edict_forward(F&& f, const CoupledState<V>& st, double p, double s, double h) {
  V x_inter = st.x + h * f(s, st.x_hat);
  V y_inter = st.x_hat + h * f(s, x_inter);
  CoupledState<V> out;
  out.x = p * x_inter + (1.0 - p) * y_inter;
  out.x_hat = p * y_inter + (1.0 - p) * out.x;
  return out;
}

template <class V, class F>
CoupledState<V> edict_backward(F&& f, const CoupledState<V>& st, double p, double s, double h) {
  V y_inter = (st.x_hat - (1.0 - p) * st.x) / p;
  V x_inter = (st.x - (1.0 - p) * y_inter) / p;
  CoupledState<V> out;
  out.x_hat = y_inter - h * f(s, x_inter);
  out.x = x_inter - h * f(s, out.x_hat);
  return out;
}

/// BDIA recursion x_next = g x_prev + (1-g) x_cur - g d_back + d_fwd, where
/// d_back and d_fwd are the one-step DDIM increments from x_cur.
template <class V>
V bdia_forward(double gamma, const V& x_prev, const V& x_cur, const V& d_back, const V& d_fwd) {
  return V(gamma * x_prev + (1.0 - gamma) * x_cur - gamma * d_back + d_fwd);
}

template <class V>
V bdia_backward(double gamma, const V& x_next, const V& x_cur, const V& d_back, const V& d_fwd) {
  if (gamma == 0.0) throw InvalidParams("BDIA with gamma = 0 is not invertible");
  return V((x_next - (1.0 - gamma) * x_cur + gamma * d_back - d_fwd) / gamma);
}

/// Coefficients of the variable-step O-BELM recursion
/// x_next = a1 x_cur + a2 x_prev + b * eps(x_cur), with signed steps
/// h_prev = s_cur - s_prev and h_next = s_next - s_cur.
struct ObelmCoefficients {
  double a1, a2, b;
};

inline ObelmCoefficients obelm_coefficients(double h_prev, double h_next) {
  if (h_prev == 0.0 || h_next == 0.0) throw InvalidParams("O-BELM needs non-zero steps");
  const double hp2 = h_prev * h_prev;
  return {(hp2 - h_next * h_next) / hp2, h_next * h_next / hp2,
          (h_next + h_prev) / h_prev * h_next};
}

template <class V>
V obelm_forward(const ObelmCoefficients& k, const V& x_prev, const V& x_cur, const V& eps) {
  return V(k.a1 * x_cur + k.a2 * x_prev + k.b * eps);
}

template <class V>
V obelm_backward(const ObelmCoefficients& k, const V& x_next, const V& x_cur, const V& eps) {
  return V((x_next - k.a1 * x_cur - k.b * eps) / k.a2);
}

}  // namespace revode::steps
