#include "ulsa/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ulsa/errors.hpp"

namespace ulsa {

void DiffusionSchedule::check_tau(int tau) const {
  ULSA_REQUIRE(tau >= 0 && tau <= tau_max,
               "schedule: tau " + std::to_string(tau) + " outside [0, " +
                   std::to_string(tau_max) + "]");
}

double DiffusionSchedule::alpha(int tau) const {
  check_tau(tau);
  return alphas[static_cast<std::size_t>(tau)];
}

double DiffusionSchedule::sigma(int tau) const {
  check_tau(tau);
  return sigmas[static_cast<std::size_t>(tau)];
}

DiffusionSchedule make_cosine_schedule(int tau_max) {
  ULSA_REQUIRE(tau_max >= 1, "schedule: tau_max must be >= 1");
  DiffusionSchedule s;
  s.tau_max = tau_max;
  s.alphas.resize(static_cast<std::size_t>(tau_max) + 1);
  s.sigmas.resize(s.alphas.size());
  for (int tau = 0; tau <= tau_max; ++tau) {
    double a = std::cos(static_cast<double>(tau) / tau_max * std::numbers::pi / 2.0);
    a = std::clamp(a, 0.0, 1.0);
    if (tau == tau_max) a = std::min(a, 1e-3);
    const auto i = static_cast<std::size_t>(tau);
    s.alphas[i] = a;
    s.sigmas[i] = std::sqrt(std::max(0.0, 1.0 - a * a));
  }
  s.alphas[0] = 1.0;
  s.sigmas[0] = 0.0;
  return s;
}

Tensor forward_diffuse(const Tensor& x0, const Tensor& eps, int tau,
                       const DiffusionSchedule& s) {
  return axpby(s.alpha(tau), x0, s.sigma(tau), eps);
}

Tensor tweedie_estimate(const Tensor& x_tau, const Tensor& eps_hat, int tau,
                        const DiffusionSchedule& s) {
  const double a = std::max(s.alpha(tau), kAlphaFloor);
  return axpby(1.0 / a, x_tau, -s.sigma(tau) / a, eps_hat);
}

Tensor ddim_prior_step(const Tensor& x0_hat, const Tensor& eps_hat, int tau_next,
                       const DiffusionSchedule& s) {
  return axpby(s.alpha(tau_next), x0_hat, s.sigma(tau_next), eps_hat);
}

}  // namespace ulsa
