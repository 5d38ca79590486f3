#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "ulsa/tensor.hpp"

namespace ulsa {

/// Named substreams. Every random draw in the library is keyed by one of
/// these plus a tuple of integer ids (frame, particle, ...).
enum class Stream : std::uint64_t {
  phantom = 1,
  particles = 2,
  policy = 3,
  training = 4,
  validation = 5,
  test = 6,
};

/// splitmix64 fold of (seed, stream, ids...) into a 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                          std::initializer_list<std::uint64_t> ids = {});

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> ids = {})
      : engine_(derive_seed(seed, stream, ids)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  Tensor normal_tensor(const Shape& shape);
  void fill_normal(Tensor& t);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace ulsa
