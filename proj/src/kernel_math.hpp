#pragma once

// Shared constants and the scalar form of the kernel arithmetic. Every
// vector kernel mirrors these expressions operation for operation.

#include <cmath>
#include <cstddef>

#include "geoproto/kernels.hpp"

namespace geoproto::kernels::detail {
// Internal linkage: this header is compiled under different target flags.
namespace {

// atan on [0, 1] after Cephes: argument reduction at 0.66 through
// atan(t) = pi/4 + atan((t - 1) / (t + 1)), then a 4/5 rational in u^2.
inline constexpr double kAtanP0 = -8.750608600031904122785e-1;
inline constexpr double kAtanP1 = -1.615753718733365076637e1;
inline constexpr double kAtanP2 = -7.500855792314704667340e1;
inline constexpr double kAtanP3 = -1.228866684490136173410e2;
inline constexpr double kAtanP4 = -6.485021904942025371773e1;
inline constexpr double kAtanQ0 = 2.485846490142306297962e1;
inline constexpr double kAtanQ1 = 1.650270098316988542046e2;
inline constexpr double kAtanQ2 = 4.328810604912902668951e2;
inline constexpr double kAtanQ3 = 4.853903996359136964868e2;
inline constexpr double kAtanQ4 = 1.945506571482613964425e2;
inline constexpr double kReduceAbove = 0.66;
inline constexpr double kPiO4 = 7.85398163397448309616e-1;
inline constexpr double kPiO2 = 1.57079632679489661923e0;
inline constexpr double kPi = 3.14159265358979323846e0;
// Low-order part of pi/2.
inline constexpr double kMoreBits = 6.123233995736765886130e-17;

inline double atan2_nonneg(double y, double x) {
  const double ay = y;
  const double ax = std::fabs(x);
  const bool swap = ay > ax;
  const double num = swap ? ax : ay;
  double den = swap ? ay : ax;
  if (den == 0.0) den = 1.0;
  const double t = num / den;
  const bool big = t > kReduceAbove;
  const double u = big ? (t - 1.0) / (t + 1.0) : t;
  const double base = big ? kPiO4 : 0.0;
  const double z = u * u;
  double p = kAtanP0;
  p = p * z + kAtanP1;
  p = p * z + kAtanP2;
  p = p * z + kAtanP3;
  p = p * z + kAtanP4;
  double q = z + kAtanQ0;
  q = q * z + kAtanQ1;
  q = q * z + kAtanQ2;
  q = q * z + kAtanQ3;
  q = q * z + kAtanQ4;
  const double w = (z * p) / q;
  double r = u * w + u;
  r = r + (big ? 0.5 * kMoreBits : 0.0);
  r = base + r;
  const double a = swap ? (kPiO2 - r) + kMoreBits : r;
  return x < 0.0 ? (kPi - a) + 2.0 * kMoreBits : a;
}

inline double angle_between(double ax, double ay, double az, const double b[3]) {
  const double cx = ay * b[2] - az * b[1];
  const double cy = az * b[0] - ax * b[2];
  const double cz = ax * b[1] - ay * b[0];
  const double cross = std::sqrt((cx * cx + cy * cy) + cz * cz);
  const double dot = (ax * b[0] + ay * b[1]) + az * b[2];
  return atan2_nonneg(cross, dot);
}

inline double distance_one(const RecordColumns& r, std::size_t i, const Target& t,
                           const Scale& s) {
  double num = 0.0;
  for (std::size_t j = 0; j < r.numerical_count; ++j) {
    const double diff = r.numerical[j][i] - t.numerical[j];
    num = num + diff * diff;
  }
  double mismatches = 0.0;
  for (std::size_t j = 0; j < r.categorical_count; ++j) {
    mismatches = mismatches + (r.categorical[j][i] != t.categorical[j] ? 1.0 : 0.0);
  }
  double total = num + s.lambda1 * mismatches;
  if (t.has_spatial) {
    const double theta = angle_between(r.unit_x[i], r.unit_y[i], r.unit_z[i], t.unit);
    total = total + s.lambda2 * (s.radius_m * theta);
  }
  return total;
}

}  // namespace
}  // namespace geoproto::kernels::detail
