#pragma once

#include <vector>

#include "ulsa/tensor.hpp"

namespace ulsa {

/// Variance-preserving schedule: alphas[τ]² + sigmas[τ]² = 1, τ ∈ [0, tau_max].
struct DiffusionSchedule {
  int tau_max = 0;
  std::vector<double> alphas;
  std::vector<double> sigmas;

  double alpha(int tau) const;
  double sigma(int tau) const;
  void check_tau(int tau) const;
};

/// α_τ = cos((τ/τ_max)·π/2), floored at 0 and capped at 1e-3 at the horizon.
DiffusionSchedule make_cosine_schedule(int tau_max);

/// α_τ·x0 + σ_τ·eps
Tensor forward_diffuse(const Tensor& x0, const Tensor& eps, int tau,
                       const DiffusionSchedule& s);

inline constexpr double kAlphaFloor = 1e-6;

/// (x_τ − σ_τ·ε̂)/max(α_τ, 1e-6)
Tensor tweedie_estimate(const Tensor& x_tau, const Tensor& eps_hat, int tau,
                        const DiffusionSchedule& s);

/// α_{τ'}·x̂0 + σ_{τ'}·ε̂ (deterministic re-noising).
Tensor ddim_prior_step(const Tensor& x0_hat, const Tensor& eps_hat, int tau_next,
                       const DiffusionSchedule& s);

}  // namespace ulsa
