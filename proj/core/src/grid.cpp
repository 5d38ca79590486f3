#include "ulsa/grid.hpp"

#include <cmath>

#include "ulsa/errors.hpp"

namespace ulsa {

std::string to_string(GridKind kind) {
  switch (kind) {
    case GridKind::polar2d:
      return "polar2d";
    case GridKind::cartesian2d:
      return "cartesian2d";
    case GridKind::polar3d:
      return "polar3d";
  }
  return "unknown";
}

GridKind grid_kind_from_string(const std::string& name) {
  if (name == "polar2d") return GridKind::polar2d;
  if (name == "cartesian2d") return GridKind::cartesian2d;
  if (name == "polar3d") return GridKind::polar3d;
  throw InvalidInput("unknown grid kind '" + name + "'");
}

Grid Grid::polar(std::size_t n_ax, std::size_t n_lat) {
  Grid g;
  g.kind = GridKind::polar2d;
  g.n_ax = n_ax;
  g.n_lat = n_lat;
  g.validate();
  return g;
}

Grid Grid::cartesian(std::size_t n_ax, std::size_t n_lat) {
  Grid g = polar(n_ax, n_lat);
  g.kind = GridKind::cartesian2d;
  return g;
}

Grid Grid::volume(std::size_t n_ax, std::size_t n_el, std::size_t n_lat) {
  Grid g;
  g.kind = GridKind::polar3d;
  g.n_ax = n_ax;
  g.n_el = n_el;
  g.n_lat = n_lat;
  g.validate();
  return g;
}

void Grid::validate() const {
  ULSA_REQUIRE(n_ax >= 1 && n_lat >= 1 && n_el >= 1,
               "grid: all pixel counts must be >= 1");
  if (is_3d()) {
    ULSA_REQUIRE(n_el >= 2, "grid: polar3d needs at least 2 elevation planes");
  } else {
    ULSA_REQUIRE(n_el == 1, "grid: 2D grids must have n_el == 1");
  }
  auto angle_ok = [](double a) { return a > 0.0 && a <= std::numbers::pi; };
  ULSA_REQUIRE(angle_ok(geometry.opening_angle),
               "grid: opening angle must lie in (0, pi]");
  if (is_3d()) {
    ULSA_REQUIRE(angle_ok(geometry.elevation_angle),
                 "grid: elevation angle must lie in (0, pi]");
  }
  ULSA_REQUIRE(geometry.depth_min >= 0.0 &&
                   geometry.depth_max > geometry.depth_min,
               "grid: depth range must satisfy 0 <= min < max");
}

Shape Grid::frame_shape() const {
  if (is_3d()) return {n_ax, n_el, n_lat};
  return {n_ax, n_lat};
}

FrameSequence::FrameSequence(Grid grid, Tensor frames, double frame_period)
    : grid_(grid), frames_(std::move(frames)), frame_period_(frame_period) {
  grid_.validate();
  ULSA_REQUIRE(frames_.rank() >= 1 && frames_.slice_count() >= 1,
               "frame sequence: needs at least one frame");
  ULSA_REQUIRE(frames_.slice_shape() == grid_.frame_shape(),
               "frame sequence: frame shape " +
                   shape_string(frames_.slice_shape()) +
                   " does not match grid " + shape_string(grid_.frame_shape()));
  for (double v : frames_.values()) {
    ULSA_REQUIRE(std::isfinite(v) && v >= -1.0 && v <= 1.0,
                 "frame sequence: intensities must lie in [-1, 1]");
  }
}

Tensor FrameSequence::frame(std::size_t t) const {
  ULSA_REQUIRE(t < size(), "frame sequence: frame index " + std::to_string(t) +
                               " out of range (T = " + std::to_string(size()) +
                               ")");
  return frames_.slice(t);
}

}  // namespace ulsa
