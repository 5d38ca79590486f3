#pragma once

#include <vector>

#include "ulsa/actions.hpp"
#include "ulsa/grid.hpp"

namespace ulsa {

/// W most recent masked frames and their masks, oldest first.
class MeasurementBuffer {
 public:
  MeasurementBuffer() = default;
  explicit MeasurementBuffer(std::size_t window);

  std::size_t window() const noexcept { return window_; }
  /// Real (non-padded) slices, at most W.
  std::size_t filled() const noexcept { return filled_; }
  bool empty() const noexcept { return filled_ == 0; }

  const std::vector<Tensor>& y_slices() const noexcept { return y_; }
  const std::vector<Mask>& m_slices() const noexcept { return m_; }

  /// [W, ...frame] stacks. Throws InvalidInput on an empty buffer.
  Tensor y_stack() const;
  Mask m_stack() const;

  friend MeasurementBuffer push(const MeasurementBuffer& buf, const Tensor& y, const Mask& m);

 private:
  std::size_t window_ = 0;
  std::size_t filled_ = 0;
  std::vector<Tensor> y_;
  std::vector<Mask> m_;
};

/// New buffer with (y, m) appended and the oldest slice dropped. While fewer
/// than W real slices exist, the earliest real slice fills the gap.
MeasurementBuffer push(const MeasurementBuffer& buf, const Tensor& y, const Mask& m);

/// Noiseless line acquisition: frame t of source, masked by the actions.
Tensor acquire(const FrameSequence& source, std::size_t t, const ActionSet& actions,
               const LineActionSpace& space);

}  // namespace ulsa
