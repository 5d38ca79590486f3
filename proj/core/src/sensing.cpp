#include "ulsa/sensing.hpp"

#include "ulsa/errors.hpp"

namespace ulsa {

MeasurementBuffer::MeasurementBuffer(std::size_t window) : window_(window) {
  ULSA_REQUIRE(window >= 1, "measurement buffer: window must be >= 1");
}

Tensor MeasurementBuffer::y_stack() const {
  ULSA_REQUIRE(!empty(), "measurement buffer: no measurements yet");
  return stack(y_);
}

Mask MeasurementBuffer::m_stack() const {
  ULSA_REQUIRE(!empty(), "measurement buffer: no measurements yet");
  return Mask::stack(m_);
}

MeasurementBuffer push(const MeasurementBuffer& buf, const Tensor& y, const Mask& m) {
  ULSA_REQUIRE(buf.window_ >= 1, "push: buffer has no window");
  ULSA_REQUIRE(y.shape() == m.shape(), "push: measurement shape " + shape_string(y.shape()) +
                                           " does not match mask " + shape_string(m.shape()));
  if (!buf.empty()) {
    ULSA_REQUIRE(y.shape() == buf.y_.front().shape(), "push: frame shape changed");
  }
  MeasurementBuffer out = buf;
  const Tensor masked = apply_mask(y, m);
  if (out.empty()) {
    out.y_.assign(out.window_, masked);
    out.m_.assign(out.window_, m);
    out.filled_ = 1;
    return out;
  }
  out.y_.erase(out.y_.begin());
  out.m_.erase(out.m_.begin());
  out.y_.push_back(masked);
  out.m_.push_back(m);
  out.filled_ = std::min(out.filled_ + 1, out.window_);
  return out;
}

Tensor acquire(const FrameSequence& source, std::size_t t, const ActionSet& actions,
               const LineActionSpace& space) {
  ULSA_REQUIRE(source.grid() == space.grid(), "acquire: source grid differs from action space");
  return apply_mask(source.frame(t), mask_from_actions(actions, space));
}

}  // namespace ulsa
