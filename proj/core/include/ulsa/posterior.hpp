#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "ulsa/actions.hpp"
#include "ulsa/denoiser.hpp"
#include "ulsa/schedule.hpp"

namespace ulsa {

struct GuidanceConfig {
  /// Guidance weight γ = 1/σ_n². γ = 0 disables guidance.
  double gamma = 3.0;
  /// Starting level for the first frame.
  int tau_init = 500;
  /// Starting level for SeqDiff-initialized frames.
  int tau_seqdiff = 450;
  /// Reverse steps executed from tau_seqdiff.
  std::size_t seqdiff_steps = 25;
  /// Reverse steps executed from tau_init; 0 means one per integer τ.
  std::size_t first_frame_steps = 0;
  /// Clamp the Tweedie estimate to [−1, 1] before it is used.
  bool clip_denoised = false;

  /// Throws InvalidInput unless 0 < tau_seqdiff ≤ tau_init ≤ τ_max, γ ≥ 0
  /// and seqdiff_steps ≥ 1.
  void validate(const DiffusionSchedule& s) const;
};

/// N_p stacks of W frames: [N_p, W, ...frame].
class ParticleStack {
 public:
  ParticleStack() = default;
  /// Throws InvalidInput for rank < 3 or N_p < 1.
  explicit ParticleStack(Tensor particles);

  const Tensor& tensor() const noexcept { return particles_; }
  std::size_t count() const noexcept { return particles_.slice_count(); }
  Shape stack_shape() const { return particles_.slice_shape(); }
  Tensor particle(std::size_t i) const { return particles_.slice(i); }
  void set_particle(std::size_t i, const Tensor& x) { particles_.set_slice(i, x); }
  /// Final slice of particle i: its belief about the current frame.
  Tensor belief(std::size_t i) const;
  /// [N_p, ...frame]
  Tensor beliefs() const;

  friend bool operator==(const ParticleStack&, const ParticleStack&) = default;

 private:
  Tensor particles_;
};

/// Standard normal particles, one stream per (seed, frame, particle).
ParticleStack noise_particles(const Shape& stack_shape, std::size_t n_particles,
                              std::uint64_t seed, std::uint64_t frame);

/// Drop each particle's oldest slice and duplicate its newest.
ParticleStack shift_particles(const ParticleStack& prev);

/// α_{τ}·prev_i + σ_{τ}·ε_i, ε_i from stream (seed, frame, i). prev must
/// already be shifted.
ParticleStack seqdiff_init(const ParticleStack& prev, int tau_init, const DiffusionSchedule& s,
                           std::uint64_t seed, std::uint64_t frame);

/// −γ·Jᵀ·r with r = 2·A⊙(A⊙x̂0 − Y). J comes from the denoiser in exact
/// mode and is the identity otherwise.
Tensor likelihood_gradient(const Tensor& x0_hat, const Tensor& y, const Mask& a,
                           const Denoiser& d, const GuidanceConfig& g, int tau,
                           const DiffusionSchedule& s);

/// round(linspace(tau_start, 0, steps + 1)) with repeats removed.
std::vector<int> reverse_taus(int tau_start, std::size_t steps);

struct DpsStepRecord {
  std::size_t frame = 0;  // set by callers that run several frames
  std::size_t particle = 0;
  std::size_t step = 0;
  int tau = 0;
  double residual = 0.0;  // ‖A⊙x̂0 − Y‖
};

struct DpsDiagnostics {
  std::vector<DpsStepRecord> steps;
  void write_csv(std::ostream& os) const;
};

/// Reverse diffusion from tau_start to 0 with DPS guidance.
///
/// Per step: ε̂ = ε_θ(X, τ); x̂0 = Tweedie(X, ε̂); X' = α_{τ'}x̂0 + σ_{τ'}ε̂;
/// X = X' + η·likelihood_gradient, with η = min(1/S, 1/(2γ)) for S executed
/// steps. Particles run concurrently and independently. steps = 0 runs one
/// step per integer τ. Throws NumericFailure naming τ on non-finite values.
ParticleStack dps_sample(const Denoiser& d, const DiffusionSchedule& s, const Tensor& y,
                         const Mask& a, const ParticleStack& init, int tau_start,
                         std::size_t steps, const GuidanceConfig& g,
                         DpsDiagnostics* diagnostics = nullptr);

/// Guidance step size η for S reverse steps.
double guidance_step_size(double gamma, std::size_t steps);

enum class ReconstructMode { first_particle, mean };

/// Belief of particle 0 (default) or the mean belief.
Tensor reconstruct(const ParticleStack& p, ReconstructMode mode = ReconstructMode::first_particle);

}  // namespace ulsa
