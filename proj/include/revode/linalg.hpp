// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cmath>

namespace revode {

using Vec = Eigen::VectorXd;

inline bool is_finite(const Vec& v) { return v.allFinite(); }
inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const std::complex<double>& v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

inline double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(double v) { return std::abs(v); }
inline double max_abs(const std::complex<double>& v) { return std::abs(v); }

inline Vec zeros_like(const Vec& v) { return Vec::Zero(v.size()); }
inline double zeros_like(double) { return 0.0; }
inline std::complex<double> zeros_like(const std::complex<double>&) { return {}; }

}  // namespace revode
