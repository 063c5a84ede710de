#pragma once

// Batched distance kernels over the column layout of a Dataset. The scalar
// kernel is the reference; vector kernels perform the same IEEE operations
// in the same order and must agree with it bit for bit.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "geoproto/distance.hpp"

namespace geoproto::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

/// Column pointers for the records [0, size).
struct RecordColumns {
  const double* const* numerical = nullptr;  // numerical_count column pointers
  std::size_t numerical_count = 0;
  const std::int32_t* const* categorical = nullptr;
  std::size_t categorical_count = 0;
  const double* unit_x = nullptr;  // null when there is no spatial pair
  const double* unit_y = nullptr;
  const double* unit_z = nullptr;
  std::size_t size = 0;
};

/// The point every record is measured against.
struct Target {
  const double* numerical = nullptr;
  const std::int32_t* categorical = nullptr;
  bool has_spatial = false;
  double unit[3] = {0.0, 0.0, 1.0};
};

struct Scale {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double radius_m = EarthModel{}.effective_radius_m();
};

/// out[i - begin] = mixed distance of record i to the target, i in [begin, end).
using DistanceFn = void (*)(const RecordColumns&, std::size_t begin, std::size_t end,
                            const Target&, const Scale&, double* out);

/// out[i] = central angle between unit vector i and the target vector.
using AngleFn = void (*)(const double* ux, const double* uy, const double* uz, std::size_t n,
                         const double target[3], double* out);

void distances_scalar(const RecordColumns&, std::size_t, std::size_t, const Target&, const Scale&,
                      double*);
void angles_scalar(const double*, const double*, const double*, std::size_t, const double[3],
                   double*);
#if defined(GEOPROTO_HAVE_AVX2)
void distances_avx2(const RecordColumns&, std::size_t, std::size_t, const Target&, const Scale&,
                    double*);
void angles_avx2(const double*, const double*, const double*, std::size_t, const double[3],
                 double*);
#endif

/// atan2(y, x) for y >= 0, as evaluated by every kernel (rational
/// approximation, ~1 ulp). Exposed for testing.
double kernel_atan2(double y, double x);

/// Central angle between two unit vectors via atan2(|a x b|, a . b).
double kernel_angle(const double a[3], const double b[3]);

/// True if this build and CPU can run the given ISA.
bool isa_available(Isa isa);

/// Best available ISA, unless GEOPROTO_KERNEL=scalar|avx2 overrides it.
Isa detect_isa();

/// Currently selected ISA (detect_isa() on first use).
Isa active_isa();

/// Forces an ISA; throws ValidationError when unavailable.
void set_active_isa(Isa isa);

DistanceFn distance_fn(Isa isa);
AngleFn angle_fn(Isa isa);

inline void distances(const RecordColumns& r, std::size_t begin, std::size_t end, const Target& t,
                      const Scale& s, double* out) {
  distance_fn(active_isa())(r, begin, end, t, s, out);
}

inline void angles(const double* ux, const double* uy, const double* uz, std::size_t n,
                   const double target[3], double* out) {
  angle_fn(active_isa())(ux, uy, uz, n, target, out);
}

}  // namespace geoproto::kernels
