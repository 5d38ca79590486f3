#include "ulsa/ulsa_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ulsa/errors.hpp"

namespace ulsa {
namespace {

constexpr char kMagic[4] = {'U', 'L', 'S', 'A'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

std::vector<std::uint32_t> dims_of(std::size_t frames, const Grid& grid) {
  std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(frames)};
  for (auto d : grid.frame_shape()) dims.push_back(static_cast<std::uint32_t>(d));
  return dims;
}

Grid grid_from_dims(const std::vector<std::uint32_t>& dims, const Grid* tmpl) {
  Grid g = tmpl ? *tmpl : Grid{};
  if (dims.size() == 3) {
    if (!tmpl || tmpl->is_3d()) g.kind = GridKind::polar2d;
    g.n_ax = dims[1];
    g.n_lat = dims[2];
    g.n_el = 1;
  } else if (dims.size() == 4) {
    g.kind = GridKind::polar3d;
    g.n_ax = dims[1];
    g.n_el = dims[2];
    g.n_lat = dims[3];
  } else {
    throw InvalidInput("sequence container must have 3 or 4 dims, got " +
                       std::to_string(dims.size()));
  }
  g.validate();
  return g;
}

}  // namespace

std::size_t UlsaArray::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_ulsa(const UlsaArray& array) {
  ULSA_REQUIRE(array.dims.size() <= 255, "ulsa: too many dims");
  const std::size_t n = array.element_count();
  const bool f32 = array.dtype == DType::float32;
  ULSA_REQUIRE((f32 ? array.f32.size() : array.u8.size()) == n,
               "ulsa: payload size does not match dims");

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kUlsaVersion);
  out.push_back(static_cast<std::uint8_t>(array.dtype));
  out.push_back(static_cast<std::uint8_t>(array.dims.size()));
  for (auto d : array.dims) put_u32(out, d);
  if (f32) {
    out.reserve(out.size() + 4 * n);
    for (float v : array.f32) put_u32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    out.insert(out.end(), array.u8.begin(), array.u8.end());
  }
  return out;
}

UlsaArray decode_ulsa(std::span<const std::uint8_t> b) {
  auto fail = [](const std::string& why) { throw IoError("malformed ULSA container", why); };
  if (b.size() < 7 || std::memcmp(b.data(), kMagic, 4) != 0) fail("bad magic");
  if (b[4] != kUlsaVersion) fail("unsupported version " + std::to_string(b[4]));
  UlsaArray a;
  if (b[5] > 1) fail("unknown dtype " + std::to_string(b[5]));
  a.dtype = static_cast<DType>(b[5]);
  const std::size_t ndim = b[6];
  std::size_t at = 7;
  if (b.size() < at + 4 * ndim) fail("truncated header");
  for (std::size_t i = 0; i < ndim; ++i, at += 4) a.dims.push_back(get_u32(b, at));
  const std::size_t n = a.element_count();
  const std::size_t width = a.dtype == DType::float32 ? 4 : 1;
  if (b.size() != at + width * n) fail("payload size mismatch");
  if (a.dtype == DType::float32) {
    a.f32.resize(n);
    for (std::size_t i = 0; i < n; ++i, at += 4) {
      a.f32[i] = std::bit_cast<float>(get_u32(b, at));
    }
  } else {
    a.u8.assign(b.begin() + static_cast<std::ptrdiff_t>(at), b.end());
  }
  return a;
}

void write_ulsa(const std::filesystem::path& path, const UlsaArray& array) {
  const auto bytes = encode_ulsa(array);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing", path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed", path.string());
}

UlsaArray read_ulsa(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading", path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_ulsa(bytes);
  } catch (const IoError& e) {
    throw IoError(e.what(), path.string());
  }
}

UlsaArray to_ulsa(const Tensor& t) {
  UlsaArray a;
  a.dtype = DType::float32;
  for (auto d : t.shape()) a.dims.push_back(static_cast<std::uint32_t>(d));
  a.f32.assign(t.values().begin(), t.values().end());
  return a;
}

Tensor tensor_from_ulsa(const UlsaArray& array) {
  ULSA_REQUIRE(array.dtype == DType::float32, "ulsa: expected float32 payload");
  Shape shape(array.dims.begin(), array.dims.end());
  return Tensor(shape, std::vector<double>(array.f32.begin(), array.f32.end()));
}

void write_sequence(const std::filesystem::path& path, const FrameSequence& seq) {
  UlsaArray a;
  a.dtype = DType::float32;
  a.dims = dims_of(seq.size(), seq.grid());
  a.f32.reserve(seq.frames().size());
  for (double v : seq.frames().values()) a.f32.push_back(static_cast<float>((v + 1.0) * 0.5));
  write_ulsa(path, a);
}

FrameSequence read_sequence(const std::filesystem::path& path, const Grid* grid_template) {
  const auto a = read_ulsa(path);
  if (a.dtype != DType::float32) throw IoError("sequence must be float32", path.string());
  const Grid grid = grid_from_dims(a.dims, grid_template);
  Shape shape(a.dims.begin(), a.dims.end());
  std::vector<double> values(a.f32.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::clamp(2.0 * static_cast<double>(a.f32[i]) - 1.0, -1.0, 1.0);
  }
  return FrameSequence(grid, Tensor(shape, std::move(values)));
}

std::span<const std::uint8_t> LabelSequence::frame(std::size_t t) const {
  ULSA_REQUIRE(t < frames, "labels: frame index out of range");
  const std::size_t n = grid.frame_size();
  return std::span<const std::uint8_t>(codes).subspan(t * n, n);
}

void write_labels(const std::filesystem::path& path, const LabelSequence& labels) {
  UlsaArray a;
  a.dtype = DType::uint8;
  a.dims = dims_of(labels.frames, labels.grid);
  a.u8 = labels.codes;
  write_ulsa(path, a);
}

LabelSequence read_labels(const std::filesystem::path& path, const Grid* grid_template) {
  const auto a = read_ulsa(path);
  if (a.dtype != DType::uint8) throw IoError("labels must be uint8", path.string());
  LabelSequence l;
  l.grid = grid_from_dims(a.dims, grid_template);
  l.frames = a.dims.at(0);
  l.codes = a.u8;
  return l;
}

}  // namespace ulsa
