#include "ulsa/random.hpp"

namespace ulsa {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                          std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  for (auto id : ids) h = splitmix64(h ^ id);
  return h;
}

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

Tensor Rng::normal_tensor(const Shape& shape) {
  Tensor t(shape);
  fill_normal(t);
  return t;
}

void Rng::fill_normal(Tensor& t) {
  for (double& v : t.values()) v = normal_(engine_);
}

}  // namespace ulsa
