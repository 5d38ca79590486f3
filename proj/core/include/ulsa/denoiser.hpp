#pragma once

#include <memory>

#include "ulsa/gaussian_prior.hpp"
#include "ulsa/schedule.hpp"
#include "ulsa/tensor.hpp"

namespace ulsa {

/// exact: the denoiser provides Jᵀv for J = ∂x̂0/∂x_τ.
/// identity: callers approximate J by the identity.
enum class VjpMode { exact, identity };

/// ε-prediction network over one W-stack. Implementations must be pure and
/// safe to call concurrently once constructed.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  /// [W, n_ax, n_lat] or [W, n_ax, n_el, n_lat].
  virtual const Shape& stack_shape() const = 0;
  virtual VjpMode vjp_mode() const = 0;
  virtual Tensor predict_noise(const Tensor& x_tau, int tau,
                               const DiffusionSchedule& s) const = 0;
  /// Jᵀv. The default throws; only exact-mode denoisers override it.
  virtual Tensor tweedie_vjp(const Tensor& v, int tau, const DiffusionSchedule& s) const;
  virtual std::string name() const = 0;
};

/// Shape-checked dispatch to d.predict_noise.
Tensor denoise(const Denoiser& d, const Tensor& x_tau, int tau, const DiffusionSchedule& s);

/// Exact MMSE noise prediction under x0 ~ N(μ, Σ):
/// ε̂ = σ_τ (α_τ²Σ + σ_τ²I)⁻¹ (x_τ − α_τμ).
Tensor gaussian_denoise(const Tensor& x_tau, int tau, const GaussianPrior& prior,
                        const DiffusionSchedule& s);

class GaussianDenoiser final : public Denoiser {
 public:
  explicit GaussianDenoiser(GaussianPrior prior) : prior_(std::move(prior)) {}

  const Shape& stack_shape() const override { return prior_.shape(); }
  VjpMode vjp_mode() const override { return VjpMode::exact; }
  Tensor predict_noise(const Tensor& x_tau, int tau, const DiffusionSchedule& s) const override;
  /// J = α_τΣ(α_τ²Σ + σ_τ²I)⁻¹ is symmetric, so Jᵀv = Jv.
  Tensor tweedie_vjp(const Tensor& v, int tau, const DiffusionSchedule& s) const override;
  std::string name() const override { return "gaussian"; }

  const GaussianPrior& prior() const noexcept { return prior_; }

 private:
  GaussianPrior prior_;
};

}  // namespace ulsa
