#pragma once

#include <cstddef>
#include <numbers>
#include <string>

#include "ulsa/tensor.hpp"

namespace ulsa {

enum class GridKind { polar2d, cartesian2d, polar3d };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& name);

/// Scan-conversion geometry. Only consulted for display; inference runs on
/// the native pixel grid.
struct Geometry {
  double opening_angle = std::numbers::pi / 3.0;  // azimuth sector, radians
  double elevation_angle = std::numbers::pi / 6.0;  // polar3d only
  double depth_min = 0.1;  // normalized depth of the first axial sample
  double depth_max = 1.0;
};

/// Pixel grid of one frame.
///
/// 2D frames are laid out [n_ax, n_lat]; 3D frames [n_ax, n_el, n_lat]. A
/// scan line is a full axial column (2D) or a full elevation plane (3D).
struct Grid {
  GridKind kind = GridKind::polar2d;
  std::size_t n_ax = 1;
  std::size_t n_lat = 1;
  std::size_t n_el = 1;
  Geometry geometry{};

  static Grid polar(std::size_t n_ax, std::size_t n_lat);
  static Grid cartesian(std::size_t n_ax, std::size_t n_lat);
  static Grid volume(std::size_t n_ax, std::size_t n_el, std::size_t n_lat);

  /// Throws InvalidInput when any invariant is violated.
  void validate() const;

  bool is_3d() const noexcept { return kind == GridKind::polar3d; }
  bool is_polar() const noexcept { return kind != GridKind::cartesian2d; }
  Shape frame_shape() const;
  std::size_t frame_size() const noexcept { return n_ax * n_lat * n_el; }
  /// Number of selectable actions L (lateral lines, or elevation planes in 3D).
  std::size_t line_count() const noexcept { return is_3d() ? n_el : n_lat; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.kind == b.kind && a.n_ax == b.n_ax && a.n_lat == b.n_lat &&
           a.n_el == b.n_el;
  }
};

/// T frames on one grid, intensities in [-1, 1].
class FrameSequence {
 public:
  FrameSequence() = default;
  /// frames has shape [T, ...grid.frame_shape()].
  FrameSequence(Grid grid, Tensor frames, double frame_period = 0.0);

  const Grid& grid() const noexcept { return grid_; }
  const Tensor& frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.slice_count(); }
  double frame_period() const noexcept { return frame_period_; }

  Tensor frame(std::size_t t) const;

 private:
  Grid grid_{};
  Tensor frames_;
  double frame_period_ = 0.0;
};

}  // namespace ulsa
