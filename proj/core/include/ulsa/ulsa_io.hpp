#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ulsa/grid.hpp"
#include "ulsa/tensor.hpp"

namespace ulsa {

/// ULSA tensor container, little-endian:
///   "ULSA" | u8 version (1) | u8 dtype | u8 ndim | ndim x u32 dims | payload
/// dtype 0 = float32, 1 = uint8. Payload is row-major.
enum class DType : std::uint8_t { float32 = 0, uint8 = 1 };

inline constexpr std::uint8_t kUlsaVersion = 1;

struct UlsaArray {
  DType dtype = DType::float32;
  std::vector<std::uint32_t> dims;
  std::vector<float> f32;
  std::vector<std::uint8_t> u8;

  std::size_t element_count() const;
};

std::vector<std::uint8_t> encode_ulsa(const UlsaArray& array);
/// Throws IoError on a malformed container.
UlsaArray decode_ulsa(std::span<const std::uint8_t> bytes);

void write_ulsa(const std::filesystem::path& path, const UlsaArray& array);
UlsaArray read_ulsa(const std::filesystem::path& path);

/// Raw float32 round trip (no intensity mapping); used for parameters.
UlsaArray to_ulsa(const Tensor& t);
Tensor tensor_from_ulsa(const UlsaArray& array);

/// Frame sequences are stored with intensities mapped [-1, 1] -> [0, 1].
/// Dims [T, n_ax, n_lat] (2D) or [T, n_ax, n_el, n_lat] (3D).
void write_sequence(const std::filesystem::path& path, const FrameSequence& seq);
/// The grid kind is inferred from rank (polar2d / polar3d) unless given.
FrameSequence read_sequence(const std::filesystem::path& path,
                            const Grid* grid_template = nullptr);

/// Per-pixel class codes for each frame, stored as a uint8 container with the
/// same dims as the matching sequence.
struct LabelSequence {
  Grid grid{};
  std::size_t frames = 0;
  std::vector<std::uint8_t> codes;  // [T, ...frame], row-major

  std::span<const std::uint8_t> frame(std::size_t t) const;
};

void write_labels(const std::filesystem::path& path, const LabelSequence& labels);
LabelSequence read_labels(const std::filesystem::path& path,
                          const Grid* grid_template = nullptr);

}  // namespace ulsa
