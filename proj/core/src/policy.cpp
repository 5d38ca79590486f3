#include "ulsa/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ulsa/errors.hpp"
#include "ulsa/random.hpp"

namespace ulsa {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::active:
      return "active";
    case PolicyKind::random:
      return "random";
    case PolicyKind::equispaced:
      return "equispaced";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& name) {
  if (name == "active") return PolicyKind::active;
  if (name == "random") return PolicyKind::random;
  if (name == "equispaced") return PolicyKind::equispaced;
  throw InvalidInput("unknown policy '" + name + "' (expected active, random or equispaced)");
}

double PolicyConfig::resolved_width(std::size_t n_lines) const {
  if (rbf_width > 0.0) return rbf_width;
  const double r = static_cast<double>(n_lines) / (4.0 * static_cast<double>(lines_per_frame));
  return std::max(1.0, r * r);
}

void PolicyConfig::validate(std::size_t n_lines) const {
  ULSA_REQUIRE(lines_per_frame >= 1, "policy: lines per frame must be >= 1");
  ULSA_REQUIRE(lines_per_frame <= n_lines,
               "policy: lines per frame K = " + std::to_string(lines_per_frame) +
                   " exceeds the " + std::to_string(n_lines) + " available lines");
  ULSA_REQUIRE(sigma_x2 > 0.0, "policy: sigma_x2 must be > 0");
  ULSA_REQUIRE(std::isfinite(rbf_width), "policy: rbf width must be finite");
}

Tensor entropy_map(const Tensor& beliefs, double sigma_x2) {
  ULSA_REQUIRE(sigma_x2 > 0.0, "entropy_map: sigma_x2 must be > 0");
  ULSA_REQUIRE(beliefs.rank() >= 2 && beliefs.slice_count() >= 2,
               "entropy_map: need at least 2 particles");
  const std::size_t n = beliefs.slice_count();
  const std::size_t px = beliefs.slice_size();
  const double inv = 1.0 / (2.0 * sigma_x2);
  const double log_n = std::log(static_cast<double>(n));
  const double* x = beliefs.data();
  Tensor h(beliefs.slice_shape(), 0.0);
  for (std::size_t p = 0; p < px; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x[i * px + p];
      double inner = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = xi - x[j * px + p];
        inner += std::exp(-d * d * inv);
      }
      acc += std::log(inner) - log_n;
    }
    h[p] = std::max(0.0, -acc / static_cast<double>(n));
  }
  return h;
}

Tensor entropy_map(const ParticleStack& particles, double sigma_x2) {
  return entropy_map(particles.beliefs(), sigma_x2);
}

std::vector<double> linewise_entropy(const Tensor& h, const LineActionSpace& space) {
  ULSA_REQUIRE(h.shape() == space.grid().frame_shape(),
               "linewise_entropy: map shape " + shape_string(h.shape()) +
                   " does not match grid " + shape_string(space.grid().frame_shape()));
  std::vector<double> out(space.size(), 0.0);
  for (std::size_t l = 0; l < space.size(); ++l) {
    for (std::size_t i : space.line(l)) out[l] += h[i];
  }
  return out;
}

ActionSet k_greedy_select(std::vector<double> h, std::size_t k, double w) {
  ULSA_REQUIRE(k <= h.size(), "k_greedy_select: K = " + std::to_string(k) +
                                  " exceeds L = " + std::to_string(h.size()));
  ULSA_REQUIRE(w > 0.0, "k_greedy_select: rbf width must be > 0");
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  for (std::size_t round = 0; round < k; ++round) {
    // max_element returns the first maximum, i.e. the lowest index on ties.
    const auto best = static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin());
    chosen.push_back(best);
    for (std::size_t l = 0; l < h.size(); ++l) {
      const double d = static_cast<double>(l) - static_cast<double>(best);
      h[l] *= 1.0 - std::exp(-d * d / w);
    }
    // Exhausted lines may all be zero; never let a chosen line win again.
    for (std::size_t c : chosen) h[c] = -std::numeric_limits<double>::infinity();
  }
  return ActionSet(std::move(chosen));
}

ActionSet equispaced_policy(std::size_t t, std::size_t n_lines, std::size_t k) {
  ULSA_REQUIRE(k >= 1 && k <= n_lines, "equispaced_policy: need 1 <= K <= L");
  ULSA_REQUIRE(t >= 1, "equispaced_policy: frame index is 1-based");
  const std::size_t stride = n_lines / k;
  const std::size_t offset = (t - 1) % stride;
  std::vector<std::size_t> lines;
  for (std::size_t j = 0; j < k; ++j) lines.push_back((offset + j * stride) % n_lines);
  return ActionSet(std::move(lines));
}

ActionSet random_policy(std::size_t n_lines, std::size_t k, std::uint64_t seed, std::size_t t) {
  ULSA_REQUIRE(k <= n_lines, "random_policy: K exceeds L");
  Rng rng(seed, Stream::policy, {t});
  std::vector<std::size_t> all(n_lines);
  std::iota(all.begin(), all.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(n_lines - i);
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  return ActionSet(std::move(all));
}

Tensor azimuth_average(const Tensor& h3d) {
  ULSA_REQUIRE(h3d.rank() == 3, "azimuth_average: expected a [n_ax, n_el, n_lat] map, got " +
                                    shape_string(h3d.shape()));
  const std::size_t ax = h3d.shape()[0], el = h3d.shape()[1], lat = h3d.shape()[2];
  Tensor out(Shape{ax, el}, 0.0);
  for (std::size_t a = 0; a < ax; ++a) {
    for (std::size_t e = 0; e < el; ++e) {
      double s = 0.0;
      for (std::size_t l = 0; l < lat; ++l) s += h3d[(a * el + e) * lat + l];
      out[a * el + e] = s / static_cast<double>(lat);
    }
  }
  return out;
}

std::vector<double> elevation_entropy(const Tensor& h2d) {
  ULSA_REQUIRE(h2d.rank() == 2, "elevation_entropy: expected a [n_ax, n_el] map");
  const std::size_t ax = h2d.shape()[0], el = h2d.shape()[1];
  std::vector<double> out(el, 0.0);
  for (std::size_t a = 0; a < ax; ++a) {
    for (std::size_t e = 0; e < el; ++e) out[e] += h2d[a * el + e];
  }
  return out;
}

}  // namespace ulsa
