#pragma once

#include <cstddef>

#include "ulsa/grid.hpp"
#include "ulsa/tensor.hpp"

namespace ulsa {

/// Bilinear remap of a polar2d frame [n_ax, n_lat] onto an out_size x out_size
/// Cartesian image. The probe apex sits at the top centre; pixels outside the
/// imaged sector are set to `background`. Display only.
Tensor scan_convert(const Tensor& frame, const Grid& grid, std::size_t out_size,
                    double background = -1.0);

}  // namespace ulsa
