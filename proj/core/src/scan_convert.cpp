#include "ulsa/scan_convert.hpp"

#include <algorithm>
#include <cmath>

#include "ulsa/errors.hpp"

namespace ulsa {

Tensor scan_convert(const Tensor& frame, const Grid& grid, std::size_t out_size,
                    double background) {
  grid.validate();
  ULSA_REQUIRE(grid.kind == GridKind::polar2d,
               "scan_convert: needs a polar2d grid, got " + to_string(grid.kind));
  ULSA_REQUIRE(frame.shape() == grid.frame_shape(),
               "scan_convert: frame shape does not match grid");
  ULSA_REQUIRE(out_size >= 2, "scan_convert: out_size must be >= 2");

  const auto& geo = grid.geometry;
  const double half = geo.opening_angle / 2.0;
  const double x_extent = geo.depth_max * std::sin(std::min(half, std::numbers::pi / 2));
  const double z_min = half < std::numbers::pi / 2 ? 0.0 : geo.depth_max * std::cos(half);
  const double n_ax = static_cast<double>(grid.n_ax);
  const double n_lat = static_cast<double>(grid.n_lat);

  auto sample = [&](double a, double l) {
    a = std::clamp(a, 0.0, n_ax - 1.0);
    l = std::clamp(l, 0.0, n_lat - 1.0);
    const auto a0 = static_cast<std::size_t>(std::floor(a));
    const auto l0 = static_cast<std::size_t>(std::floor(l));
    const std::size_t a1 = std::min(a0 + 1, grid.n_ax - 1);
    const std::size_t l1 = std::min(l0 + 1, grid.n_lat - 1);
    const double fa = a - static_cast<double>(a0);
    const double fl = l - static_cast<double>(l0);
    auto at = [&](std::size_t i, std::size_t j) { return frame[i * grid.n_lat + j]; };
    return (1 - fa) * ((1 - fl) * at(a0, l0) + fl * at(a0, l1)) +
           fa * ((1 - fl) * at(a1, l0) + fl * at(a1, l1));
  };

  Tensor out({out_size, out_size}, background);
  const double step = 1.0 / static_cast<double>(out_size);
  for (std::size_t i = 0; i < out_size; ++i) {
    const double z = z_min + (static_cast<double>(i) + 0.5) * step * (geo.depth_max - z_min);
    for (std::size_t j = 0; j < out_size; ++j) {
      const double x = -x_extent + (static_cast<double>(j) + 0.5) * step * 2.0 * x_extent;
      const double r = std::hypot(x, z);
      const double theta = std::atan2(x, z);
      if (r < geo.depth_min || r > geo.depth_max || std::abs(theta) > half) continue;
      const double a = (r - geo.depth_min) / (geo.depth_max - geo.depth_min) * n_ax - 0.5;
      const double l = (theta + half) / geo.opening_angle * n_lat - 0.5;
      out[i * out_size + j] = sample(a, l);
    }
  }
  return out;
}

}  // namespace ulsa
