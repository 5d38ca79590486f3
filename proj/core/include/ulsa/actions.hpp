#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "ulsa/grid.hpp"
#include "ulsa/tensor.hpp"

namespace ulsa {

/// Binary measurement mask over a frame or a W-stack of frames.
class Mask {
 public:
  Mask() = default;
  /// Throws InvalidInput unless every value is exactly 0 or 1.
  explicit Mask(Tensor values);

  static Mask zeros(const Shape& shape);
  static Mask ones(const Shape& shape);
  static Mask stack(const std::vector<Mask>& slices);

  const Tensor& values() const noexcept { return values_; }
  const Shape& shape() const noexcept { return values_.shape(); }
  std::size_t count() const;
  Mask slice(std::size_t i) const { return Mask(values_.slice(i)); }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Tensor values_;
};

/// Elementwise maximum (set union) of two masks.
Mask mask_union(const Mask& a, const Mask& b);

/// Selected line indices, in selection order. Indices are distinct.
class ActionSet {
 public:
  ActionSet() = default;
  explicit ActionSet(std::vector<std::size_t> lines);
  ActionSet(std::initializer_list<std::size_t> lines)
      : ActionSet(std::vector<std::size_t>(lines)) {}

  const std::vector<std::size_t>& lines() const noexcept { return lines_; }
  std::size_t size() const noexcept { return lines_.size(); }
  bool empty() const noexcept { return lines_.empty(); }
  bool contains(std::size_t line) const;
  /// Indices in ascending order.
  std::vector<std::size_t> sorted() const;

  friend bool operator==(const ActionSet&, const ActionSet&) = default;

 private:
  std::vector<std::size_t> lines_;
};

/// Pixel index sets A^l measured by each focused transmit l.
class LineActionSpace {
 public:
  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return lines_.size(); }
  const std::vector<std::size_t>& line(std::size_t l) const { return lines_.at(l); }
  const std::vector<std::vector<std::size_t>>& lines() const noexcept {
    return lines_;
  }

 private:
  friend LineActionSpace make_line_action_space(const Grid& grid);
  Grid grid_{};
  std::vector<std::vector<std::size_t>> lines_;
};

/// One action per lateral column (2D) or per elevation plane (polar3d).
LineActionSpace make_line_action_space(const Grid& grid);

Mask mask_from_actions(const ActionSet& actions, const LineActionSpace& space);

/// x ⊙ m. The mask either matches x exactly or matches one slice of x, in
/// which case it is applied to every slice.
Tensor apply_mask(const Tensor& x, const Mask& m);

}  // namespace ulsa
