#include "ulsa/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "ulsa/errors.hpp"
#include "ulsa/random.hpp"

namespace ulsa {

void GuidanceConfig::validate(const DiffusionSchedule& s) const {
  ULSA_REQUIRE(std::isfinite(gamma) && gamma >= 0.0, "guidance: gamma must be >= 0");
  ULSA_REQUIRE(tau_seqdiff > 0 && tau_seqdiff <= tau_init && tau_init <= s.tau_max,
               "guidance: need 0 < tau_seqdiff <= tau_init <= tau_max (got " +
                   std::to_string(tau_seqdiff) + ", " + std::to_string(tau_init) + ", " +
                   std::to_string(s.tau_max) + ")");
  ULSA_REQUIRE(seqdiff_steps >= 1, "guidance: seqdiff steps must be >= 1");
}

ParticleStack::ParticleStack(Tensor particles) : particles_(std::move(particles)) {
  ULSA_REQUIRE(particles_.rank() >= 3, "particle stack: need [N_p, W, ...frame]");
  ULSA_REQUIRE(particles_.shape()[0] >= 1 && particles_.shape()[1] >= 1,
               "particle stack: N_p and W must be >= 1");
}

Tensor ParticleStack::belief(std::size_t i) const {
  const Tensor p = particle(i);
  return p.slice(p.slice_count() - 1);
}

Tensor ParticleStack::beliefs() const {
  std::vector<Tensor> parts;
  parts.reserve(count());
  for (std::size_t i = 0; i < count(); ++i) parts.push_back(belief(i));
  return stack(parts);
}

ParticleStack noise_particles(const Shape& stack_shape, std::size_t n_particles,
                              std::uint64_t seed, std::uint64_t frame) {
  ULSA_REQUIRE(n_particles >= 1, "noise_particles: need at least one particle");
  std::vector<Tensor> parts;
  for (std::size_t i = 0; i < n_particles; ++i) {
    Rng rng(seed, Stream::particles, {frame, i});
    parts.push_back(rng.normal_tensor(stack_shape));
  }
  return ParticleStack(stack(parts));
}

ParticleStack shift_particles(const ParticleStack& prev) {
  Tensor out(prev.tensor().shape());
  for (std::size_t i = 0; i < prev.count(); ++i) {
    const Tensor p = prev.particle(i);
    const std::size_t w = p.slice_count();
    Tensor q(p.shape());
    for (std::size_t k = 0; k + 1 < w; ++k) q.set_slice(k, p.slice(k + 1));
    q.set_slice(w - 1, p.slice(w - 1));
    out.set_slice(i, q);
  }
  return ParticleStack(std::move(out));
}

ParticleStack seqdiff_init(const ParticleStack& prev, int tau_init, const DiffusionSchedule& s,
                           std::uint64_t seed, std::uint64_t frame) {
  s.check_tau(tau_init);
  const double a = s.alpha(tau_init);
  const double sg = s.sigma(tau_init);
  Tensor out(prev.tensor().shape());
  for (std::size_t i = 0; i < prev.count(); ++i) {
    Rng rng(seed, Stream::particles, {frame, i});
    const Tensor eps = rng.normal_tensor(prev.stack_shape());
    out.set_slice(i, axpby(a, prev.particle(i), sg, eps));
  }
  return ParticleStack(std::move(out));
}

Tensor likelihood_gradient(const Tensor& x0_hat, const Tensor& y, const Mask& a,
                           const Denoiser& d, const GuidanceConfig& g, int tau,
                           const DiffusionSchedule& s) {
  require_same_shape(x0_hat, y, "likelihood_gradient");
  ULSA_REQUIRE(a.shape() == y.shape(), "likelihood_gradient: mask shape " +
                                           shape_string(a.shape()) + " vs " +
                                           shape_string(y.shape()));
  Tensor r = apply_mask(x0_hat, a);
  r -= y;
  r = apply_mask(r, a);
  r *= 2.0;
  if (d.vjp_mode() == VjpMode::exact) r = d.tweedie_vjp(r, tau, s);
  r *= -g.gamma;
  return r;
}

std::vector<int> reverse_taus(int tau_start, std::size_t steps) {
  ULSA_REQUIRE(tau_start >= 0, "reverse_taus: tau_start must be >= 0");
  if (steps == 0) steps = static_cast<std::size_t>(tau_start);
  std::vector<int> taus{tau_start};
  for (std::size_t k = 1; k <= steps; ++k) {
    const double v = static_cast<double>(tau_start) *
                     (1.0 - static_cast<double>(k) / static_cast<double>(steps));
    const int t = static_cast<int>(std::lround(v));
    if (t != taus.back()) taus.push_back(t);
  }
  return taus;
}

double guidance_step_size(double gamma, std::size_t steps) {
  const double uniform = 1.0 / static_cast<double>(std::max<std::size_t>(steps, 1));
  return gamma > 0.0 ? std::min(uniform, 0.5 / gamma) : uniform;
}

ParticleStack dps_sample(const Denoiser& d, const DiffusionSchedule& s, const Tensor& y,
                         const Mask& a, const ParticleStack& init, int tau_start,
                         std::size_t steps, const GuidanceConfig& g,
                         DpsDiagnostics* diagnostics) {
  s.check_tau(tau_start);
  ULSA_REQUIRE(init.stack_shape() == d.stack_shape(),
               "dps_sample: particle stack " + shape_string(init.stack_shape()) +
                   " does not match denoiser " + shape_string(d.stack_shape()));
  ULSA_REQUIRE(y.shape() == d.stack_shape(), "dps_sample: measurement buffer shape " +
                                                 shape_string(y.shape()) + " mismatch");
  ULSA_REQUIRE(a.shape() == y.shape(), "dps_sample: mask buffer shape mismatch");

  const std::vector<int> taus = reverse_taus(tau_start, steps);
  const std::size_t executed = taus.size() - 1;
  const double eta = guidance_step_size(g.gamma, executed);
  const std::size_t n = init.count();

  std::vector<Tensor> out(n);
  std::vector<std::vector<DpsStepRecord>> records(n);
  std::vector<std::exception_ptr> errors(n);

  auto run = [&](std::size_t i) {
    try {
      Tensor x = init.particle(i);
      for (std::size_t k = 0; k < executed; ++k) {
        const int tau = taus[k];
        const int next = taus[k + 1];
        const Tensor eps = denoise(d, x, tau, s);
        Tensor x0 = tweedie_estimate(x, eps, tau, s);
        if (g.clip_denoised) {
          for (double& v : x0.values()) v = std::clamp(v, -1.0, 1.0);
        }
        x = ddim_prior_step(x0, eps, next, s);
        if (g.gamma > 0.0) x.add_scaled(likelihood_gradient(x0, y, a, d, g, tau, s), eta);
        if (!x.all_finite()) {
          throw NumericFailure("dps_sample: non-finite state at tau " + std::to_string(tau) +
                                   " (particle " + std::to_string(i) + ")",
                               tau);
        }
        if (diagnostics) {
          Tensor res = apply_mask(x0, a);
          res -= y;
          records[i].push_back({0, i, k, tau, std::sqrt(squared_norm(apply_mask(res, a)))});
        }
      }
      out[i] = std::move(x);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) run(i);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  if (diagnostics) {
    for (auto& r : records) diagnostics->steps.insert(diagnostics->steps.end(), r.begin(), r.end());
  }
  return ParticleStack(stack(out));
}

void DpsDiagnostics::write_csv(std::ostream& os) const {
  os << "frame,particle,step,tau,residual\n";
  for (const auto& r : steps) {
    os << r.frame << ',' << r.particle << ',' << r.step << ',' << r.tau << ',' << r.residual << '\n';
  }
}

Tensor reconstruct(const ParticleStack& p, ReconstructMode mode) {
  ULSA_REQUIRE(p.count() >= 1, "reconstruct: empty particle stack");
  if (mode == ReconstructMode::first_particle) return p.belief(0);
  Tensor m = p.belief(0);
  for (std::size_t i = 1; i < p.count(); ++i) m += p.belief(i);
  m *= 1.0 / static_cast<double>(p.count());
  return m;
}

}  // namespace ulsa
