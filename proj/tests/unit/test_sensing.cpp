#include <gtest/gtest.h>

#include "helpers.hpp"

#include "ulsa/errors.hpp"
#include "ulsa/sensing.hpp"

using namespace ulsa;

namespace {

Tensor frame_of(double v) { return Tensor({2, 2}, v); }
Mask mask_of(double v) { return Mask(Tensor({2, 2}, v)); }

}  // namespace

TEST(MeasurementBuffer, FirstPushPadsWindow) {
  const MeasurementBuffer b = push(MeasurementBuffer(3), frame_of(1), mask_of(1));
  EXPECT_EQ(b.filled(), 1u);
  ASSERT_EQ(b.y_slices().size(), 3u);
  for (const auto& y : b.y_slices()) EXPECT_EQ(y, frame_of(1));
  EXPECT_EQ(b.y_stack().shape(), (Shape{3, 2, 2}));
  EXPECT_EQ(b.m_stack().shape(), (Shape{3, 2, 2}));
}

TEST(MeasurementBuffer, FifoOrderOldestFirst) {
  MeasurementBuffer b(3);
  for (int t = 1; t <= 5; ++t) b = push(b, frame_of(t), mask_of(1));
  EXPECT_EQ(b.filled(), 3u);
  EXPECT_EQ(b.y_slices()[0], frame_of(3));
  EXPECT_EQ(b.y_slices()[1], frame_of(4));
  EXPECT_EQ(b.y_slices()[2], frame_of(5));
}

TEST(MeasurementBuffer, StoresMaskedFrames) {
  const MeasurementBuffer b = push(MeasurementBuffer(2), frame_of(0.5), mask_of(0));
  EXPECT_EQ(b.y_slices()[1], frame_of(0));
  EXPECT_EQ(b.m_slices()[1], mask_of(0));
}

TEST(MeasurementBuffer, PartialFillKeepsNewestLast) {
  MeasurementBuffer b = push(MeasurementBuffer(4), frame_of(1), mask_of(1));
  b = push(b, frame_of(2), mask_of(1));
  EXPECT_EQ(b.filled(), 2u);
  EXPECT_EQ(b.y_slices().back(), frame_of(2));
  EXPECT_EQ(b.y_slices().front(), frame_of(1));
}

TEST(MeasurementBuffer, PushIsPure) {
  const MeasurementBuffer a = push(MeasurementBuffer(2), frame_of(1), mask_of(1));
  const MeasurementBuffer b = push(a, frame_of(2), mask_of(1));
  EXPECT_EQ(a.y_slices()[1], frame_of(1));
  EXPECT_EQ(a.filled(), 1u);
  EXPECT_EQ(b.y_slices()[1], frame_of(2));
}

TEST(MeasurementBuffer, RejectsMisuse) {
  EXPECT_THROW(MeasurementBuffer(0), InvalidInput);
  EXPECT_THROW(MeasurementBuffer(2).y_stack(), InvalidInput);
  const MeasurementBuffer a = push(MeasurementBuffer(2), frame_of(1), mask_of(1));
  EXPECT_THROW(push(a, Tensor({3, 2}), Mask(Tensor({3, 2}, 1.0))), InvalidInput);
}

TEST(Acquire, MasksSourceFrame) {
  const Grid g = Grid::polar(2, 3);
  const FrameSequence src(g, Tensor({2, 2, 3}, std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6,
                                                                     -0.1, -0.2, -0.3, -0.4, -0.5, -0.6}));
  const auto space = make_line_action_space(g);
  EXPECT_EQ(as_vec(acquire(src, 1, ActionSet{2}, space)), (std::vector<double>{0, 0, -0.3, 0, 0, -0.6}));
  EXPECT_THROW(acquire(src, 2, ActionSet{0}, space), InvalidInput);
}
