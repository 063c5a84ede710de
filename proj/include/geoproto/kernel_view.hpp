#pragma once

#include <vector>

#include "geoproto/kernels.hpp"
#include "geoproto/schema.hpp"

namespace geoproto {

/// Owns the pointer arrays that expose a Dataset to the batch kernels.
/// The Dataset must outlive the view.
class KernelView {
 public:
  explicit KernelView(const Dataset& data);

  const kernels::RecordColumns& columns() const { return columns_; }

 private:
  std::vector<const double*> numerical_;
  std::vector<const std::int32_t*> categorical_;
  kernels::RecordColumns columns_;
};

/// Kernel target referencing p's storage; p must outlive the target.
kernels::Target make_target(const MixedPoint& p);

kernels::Scale make_scale(const Weights& w, const EarthModel& earth);

}  // namespace geoproto
