#include <gtest/gtest.h>

#include "helpers.hpp"

#include <filesystem>
#include <fstream>

#include "ulsa/actions.hpp"
#include "ulsa/errors.hpp"
#include "ulsa/random.hpp"
#include "ulsa/scan_convert.hpp"
#include "ulsa/ulsa_io.hpp"

namespace fs = std::filesystem;
using namespace ulsa;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ulsa_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Grid, ValidatesDimensions) {
  EXPECT_NO_THROW(Grid::polar(4, 8));
  EXPECT_THROW(Grid::polar(0, 8), InvalidInput);
  EXPECT_THROW(Grid::volume(4, 1, 8), InvalidInput);
  Grid g = Grid::polar(4, 4);
  g.geometry.depth_max = 0.05;
  EXPECT_THROW(g.validate(), InvalidInput);
}

TEST(Grid, LineCount) {
  EXPECT_EQ(Grid::polar(16, 8).line_count(), 8u);
  EXPECT_EQ(Grid::volume(8, 6, 10).line_count(), 6u);
  EXPECT_EQ(Grid::volume(8, 6, 10).frame_shape(), (Shape{8, 6, 10}));
}

TEST(FrameSequence, RejectsOutOfRange) {
  const Grid g = Grid::polar(2, 2);
  EXPECT_THROW(FrameSequence(g, Tensor({1, 2, 2}, 1.5)), InvalidInput);
  EXPECT_THROW(FrameSequence(g, Tensor({1, 2, 3}, 0.0)), InvalidInput);
  EXPECT_NO_THROW(FrameSequence(g, Tensor({3, 2, 2}, -1.0)));
}

TEST(LineActionSpace, DisjointCover2D) {
  const auto space = make_line_action_space(Grid::polar(5, 7));
  std::vector<int> hits(35, 0);
  for (const auto& line : space.lines()) {
    EXPECT_EQ(line.size(), 5u);
    for (auto i : line) ++hits[i];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(LineActionSpace, DisjointCover3D) {
  const auto space = make_line_action_space(Grid::volume(3, 4, 5));
  ASSERT_EQ(space.size(), 4u);
  std::vector<int> hits(60, 0);
  for (const auto& line : space.lines()) {
    EXPECT_EQ(line.size(), 15u);
    for (auto i : line) ++hits[i];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Mask, FromActionsSelectsColumns) {
  const auto space = make_line_action_space(Grid::polar(2, 4));
  const Mask m = mask_from_actions(ActionSet{0, 2}, space);
  EXPECT_EQ(as_vec(m.values()), (std::vector<double>{1, 0, 1, 0, 1, 0, 1, 0}));
  EXPECT_EQ(m.count(), 4u);
  EXPECT_THROW(mask_from_actions(ActionSet{4}, space), InvalidInput);
}

TEST(Mask, RejectsNonBinary) { EXPECT_THROW(Mask(Tensor({2}, 0.5)), InvalidInput); }

TEST(ActionSet, RejectsDuplicates) { EXPECT_THROW((ActionSet{1, 1}), InvalidInput); }

TEST(Mask, ApplyIsIdempotent) {
  Rng rng(1, Stream::test);
  const auto space = make_line_action_space(Grid::polar(6, 8));
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = rng.normal_tensor({6, 8});
    const Mask m = mask_from_actions(ActionSet{rng.index(8)}, space);
    const Tensor once = apply_mask(x, m);
    EXPECT_EQ(apply_mask(once, m), once);
  }
}

TEST(Mask, UnionMatchesUnionOfLines) {
  Rng rng(2, Stream::test);
  const auto space = make_line_action_space(Grid::polar(3, 10));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> a, b, ab;
    for (std::size_t l = 0; l < 10; ++l) {
      const bool in_a = rng.uniform() < 0.3, in_b = rng.uniform() < 0.3;
      if (in_a) a.push_back(l);
      if (in_b) b.push_back(l);
      if (in_a || in_b) ab.push_back(l);
    }
    EXPECT_EQ(mask_union(mask_from_actions(ActionSet(a), space), mask_from_actions(ActionSet(b), space)),
              mask_from_actions(ActionSet(ab), space));
  }
}

TEST(Mask, BroadcastsOverStack) {
  const Mask m(Tensor({2}, std::vector<double>{1, 0}));
  const Tensor x({3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(as_vec(apply_mask(x, m)), (std::vector<double>{1, 0, 3, 0, 5, 0}));
  EXPECT_THROW(apply_mask(Tensor({3}), m), InvalidInput);
}

TEST(ScanConvert, ShapeAndConstantSector) {
  const Grid g = Grid::polar(16, 12);
  const Tensor img = scan_convert(Tensor(g.frame_shape(), 0.25), g, 40);
  EXPECT_EQ(img.shape(), (Shape{40, 40}));
  std::size_t inside = 0;
  for (double v : img.values()) {
    EXPECT_TRUE(v == 0.25 || v == -1.0);
    inside += v == 0.25 ? 1 : 0;
  }
  EXPECT_GT(inside, 100u);
  EXPECT_LT(inside, 1600u);
}

TEST(ScanConvert, RejectsVolumes) {
  const Grid g = Grid::volume(4, 2, 4);
  EXPECT_THROW(scan_convert(Tensor(g.frame_shape()), g, 8), InvalidInput);
}

TEST(UlsaIo, RoundTripFloat) {
  UlsaArray a;
  a.dtype = DType::float32;
  a.dims = {2, 3};
  a.f32 = {0.f, 1.f, -2.5f, 3.f, 4.f, 5.f};
  const auto bytes = encode_ulsa(a);
  EXPECT_EQ(bytes.size(), 4u + 1u + 1u + 1u + 8u + 24u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ULSA");
  const UlsaArray b = decode_ulsa(bytes);
  EXPECT_EQ(b.dims, a.dims);
  EXPECT_EQ(b.f32, a.f32);
}

TEST(UlsaIo, RoundTripBytes) {
  UlsaArray a;
  a.dtype = DType::uint8;
  a.dims = {4};
  a.u8 = {0, 1, 2, 255};
  EXPECT_EQ(decode_ulsa(encode_ulsa(a)).u8, a.u8);
}

TEST(UlsaIo, RejectsMalformed) {
  UlsaArray a;
  a.dtype = DType::float32;
  a.dims = {2};
  a.f32 = {1.f, 2.f};
  auto bytes = encode_ulsa(a);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_ulsa(bad_magic), IoError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_ulsa(bad_version), IoError);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_ulsa(truncated), IoError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_ulsa(trailing), IoError);
  EXPECT_THROW(decode_ulsa(std::vector<std::uint8_t>{}), IoError);
  EXPECT_THROW(read_ulsa("/nonexistent/x.ulsa"), IoError);
}

TEST(UlsaIo, SequenceRoundTrip) {
  const fs::path dir = temp_dir("seq");
  Rng rng(3, Stream::test);
  Tensor frames({3, 4, 5});
  for (double& v : frames.values()) v = 2.0 * rng.uniform() - 1.0;
  const FrameSequence seq(Grid::polar(4, 5), frames);
  write_sequence(dir / "s.ulsa", seq);
  const FrameSequence back = read_sequence(dir / "s.ulsa");
  EXPECT_EQ(back.grid(), seq.grid());
  EXPECT_LT(max_abs_diff(back.frames(), frames), 1e-6);
}

TEST(UlsaIo, VolumeSequenceRoundTrip) {
  const fs::path dir = temp_dir("vol");
  const Grid g = Grid::volume(3, 2, 4);
  const FrameSequence seq(g, Tensor({2, 3, 2, 4}, 0.5));
  write_sequence(dir / "v.ulsa", seq);
  EXPECT_EQ(read_sequence(dir / "v.ulsa").grid(), g);
}

TEST(UlsaIo, LabelsRoundTrip) {
  const fs::path dir = temp_dir("labels");
  LabelSequence l;
  l.grid = Grid::polar(2, 2);
  l.frames = 2;
  l.codes = {0, 1, 2, 1, 0, 0, 2, 2};
  write_labels(dir / "l.ulsa", l);
  const LabelSequence back = read_labels(dir / "l.ulsa");
  EXPECT_EQ(back.codes, l.codes);
  EXPECT_EQ(back.frames, 2u);
}

TEST(Random, DerivedStreamsAreIndependentAndStable) {
  EXPECT_EQ(derive_seed(1, Stream::particles, {2, 3}), derive_seed(1, Stream::particles, {2, 3}));
  EXPECT_NE(derive_seed(1, Stream::particles, {2, 3}), derive_seed(1, Stream::particles, {3, 2}));
  EXPECT_NE(derive_seed(1, Stream::particles), derive_seed(1, Stream::policy));
  EXPECT_NE(derive_seed(1, Stream::test), derive_seed(2, Stream::test));
  Rng a(5, Stream::test, {1}), b(5, Stream::test, {1});
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Random, IndexInRange) {
  Rng r(9, Stream::test);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.index(7), 7u);
}
