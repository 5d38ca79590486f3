#include "ulsa/denoiser.hpp"

#include "ulsa/errors.hpp"

namespace ulsa {

Tensor Denoiser::tweedie_vjp(const Tensor&, int, const DiffusionSchedule&) const {
  throw InvalidInput("denoiser '" + name() + "' has no exact vector-Jacobian product");
}

Tensor denoise(const Denoiser& d, const Tensor& x_tau, int tau, const DiffusionSchedule& s) {
  ULSA_REQUIRE(x_tau.shape() == d.stack_shape(),
               "denoise: input shape " + shape_string(x_tau.shape()) +
                   " does not match denoiser shape " + shape_string(d.stack_shape()));
  s.check_tau(tau);
  return d.predict_noise(x_tau, tau, s);
}

Tensor gaussian_denoise(const Tensor& x_tau, int tau, const GaussianPrior& prior,
                        const DiffusionSchedule& s) {
  ULSA_REQUIRE(x_tau.size() == prior.dim(),
               "gaussian_denoise: input has " + std::to_string(x_tau.size()) +
                   " entries, prior has d = " + std::to_string(prior.dim()));
  const double a = s.alpha(tau);
  const double sg = s.sigma(tau);
  const auto& lam = prior.eigenvalues();
  std::vector<double> gain(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) gain[i] = sg / (a * a * lam[i] + sg * sg);
  Tensor centered = x_tau.reshaped(prior.shape());
  centered.add_scaled(prior.mean(), -a);
  return prior.apply_spectral(centered, gain).reshaped(x_tau.shape());
}

Tensor GaussianDenoiser::predict_noise(const Tensor& x_tau, int tau,
                                       const DiffusionSchedule& s) const {
  return gaussian_denoise(x_tau, tau, prior_, s);
}

Tensor GaussianDenoiser::tweedie_vjp(const Tensor& v, int tau, const DiffusionSchedule& s) const {
  ULSA_REQUIRE(v.shape() == prior_.shape(), "gaussian vjp: shape mismatch");
  const double a = s.alpha(tau);
  const double sg = s.sigma(tau);
  const auto& lam = prior_.eigenvalues();
  std::vector<double> gain(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) gain[i] = a * lam[i] / (a * a * lam[i] + sg * sg);
  return prior_.apply_spectral(v, gain);
}

}  // namespace ulsa
