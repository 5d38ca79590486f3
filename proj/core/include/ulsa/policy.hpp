#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ulsa/actions.hpp"
#include "ulsa/posterior.hpp"

namespace ulsa {

enum class PolicyKind { active, random, equispaced };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::active;
  std::size_t lines_per_frame = 4;  // K
  double sigma_x2 = 0.04;
  /// RBF width w. Non-positive means auto: max(1, (L/(4K))²).
  double rbf_width = 0.0;
  std::uint64_t seed = 0;

  double resolved_width(std::size_t n_lines) const;
  void validate(std::size_t n_lines) const;
};

/// Per-pixel Hershey entropy estimate over the particles' beliefs:
/// Ĥ = −(1/N_p) Σ_i log (1/N_p) Σ_j exp(−(x_i − x_j)²/(2σ_x²)).
/// Input is [N_p, ...frame]; output has the frame shape.
Tensor entropy_map(const Tensor& beliefs, double sigma_x2);
Tensor entropy_map(const ParticleStack& particles, double sigma_x2);

/// Ĥ^ℓ = Σ_{i∈A^ℓ} Ĥ[i].
std::vector<double> linewise_entropy(const Tensor& h, const LineActionSpace& space);

/// K rounds of argmax (lowest index on ties) followed by
/// Ĥ^ℓ ← Ĥ^ℓ·(1 − exp(−(ℓ−ℓ*)²/w)). Indices in selection order.
ActionSet k_greedy_select(std::vector<double> line_entropies, std::size_t k, double w);

/// Stride s = ⌊L/K⌋, offset (t−1) mod s, lines (o + j·s) mod L. t is 1-based.
ActionSet equispaced_policy(std::size_t t, std::size_t n_lines, std::size_t k);

/// K distinct lines drawn uniformly from the (seed, t) stream.
ActionSet random_policy(std::size_t n_lines, std::size_t k, std::uint64_t seed, std::size_t t);

/// Mean over the azimuth (last) axis of a [n_ax, n_el, n_lat] map.
Tensor azimuth_average(const Tensor& h3d);

/// Action space over elevation planes for a 2D [n_ax, n_el] map.
std::vector<double> elevation_entropy(const Tensor& h2d);

}  // namespace ulsa
