#include "kernel_math.hpp"

namespace geoproto::kernels {

void distances_scalar(const RecordColumns& r, std::size_t begin, std::size_t end, const Target& t,
                      const Scale& s, double* out) {
  for (std::size_t i = begin; i < end; ++i) out[i - begin] = detail::distance_one(r, i, t, s);
}

void angles_scalar(const double* ux, const double* uy, const double* uz, std::size_t n,
                   const double target[3], double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::angle_between(ux[i], uy[i], uz[i], target);
}

double kernel_atan2(double y, double x) { return detail::atan2_nonneg(y, x); }

double kernel_angle(const double a[3], const double b[3]) {
  return detail::angle_between(a[0], a[1], a[2], b);
}

}  // namespace geoproto::kernels
