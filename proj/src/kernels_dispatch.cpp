#include <atomic>
#include <cstdlib>
#include <string>

#include "geoproto/error.hpp"
#include "geoproto/kernel_view.hpp"
#include "geoproto/kernels.hpp"

namespace geoproto::kernels {

namespace {

std::atomic<int> g_active{-1};

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(GEOPROTO_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() {
  if (const char* env = std::getenv("GEOPROTO_KERNEL"); env != nullptr && *env != '\0') {
    const std::string name(env);
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2" && isa_available(Isa::Avx2)) return Isa::Avx2;
  }
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

Isa active_isa() {
  int v = g_active.load(std::memory_order_relaxed);
  if (v < 0) {
    v = static_cast<int>(detect_isa());
    g_active.store(v, std::memory_order_relaxed);
  }
  return static_cast<Isa>(v);
}

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw ValidationError("kernel ISA '" + std::string(to_string(isa)) + "' is not available");
  }
  g_active.store(static_cast<int>(isa), std::memory_order_relaxed);
}

DistanceFn distance_fn(Isa isa) {
#if defined(GEOPROTO_HAVE_AVX2)
  if (isa == Isa::Avx2) return &distances_avx2;
#endif
  (void)isa;
  return &distances_scalar;
}

AngleFn angle_fn(Isa isa) {
#if defined(GEOPROTO_HAVE_AVX2)
  if (isa == Isa::Avx2) return &angles_avx2;
#endif
  (void)isa;
  return &angles_scalar;
}

}  // namespace geoproto::kernels

namespace geoproto {

KernelView::KernelView(const Dataset& data) {
  const Schema& schema = data.schema();
  for (std::size_t j = 0; j < schema.numerical_count(); ++j) {
    numerical_.push_back(data.numerical(j).data());
  }
  for (std::size_t j = 0; j < schema.categorical_count(); ++j) {
    categorical_.push_back(data.categorical(j).data());
  }
  columns_.numerical = numerical_.data();
  columns_.numerical_count = numerical_.size();
  columns_.categorical = categorical_.data();
  columns_.categorical_count = categorical_.size();
  if (data.has_spatial()) {
    columns_.unit_x = data.unit_x().data();
    columns_.unit_y = data.unit_y().data();
    columns_.unit_z = data.unit_z().data();
  }
  columns_.size = data.size();
}

kernels::Target make_target(const MixedPoint& p) {
  kernels::Target t;
  t.numerical = p.numerical.data();
  t.categorical = p.categorical.data();
  if (p.spatial) {
    t.has_spatial = true;
    t.unit[0] = p.spatial->unit[0];
    t.unit[1] = p.spatial->unit[1];
    t.unit[2] = p.spatial->unit[2];
  }
  return t;
}

kernels::Scale make_scale(const Weights& w, const EarthModel& earth) {
  return {w.lambda1, w.lambda2, earth.effective_radius_m()};
}

}  // namespace geoproto
