#include "ulsa/agent.hpp"

#include <algorithm>
#include <chrono>

#include "ulsa/errors.hpp"

namespace ulsa {
namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

}  // namespace

void EpisodeConfig::validate(const Grid& grid, const DiffusionSchedule& s) const {
  policy.validate(grid.line_count());
  guidance.validate(s);
  ULSA_REQUIRE(window >= 1, "episode: window must be >= 1");
  ULSA_REQUIRE(particles >= 1, "episode: need at least one particle");
  ULSA_REQUIRE(policy.kind != PolicyKind::active || particles >= 2,
               "episode: the active policy needs at least 2 particles");
}

std::vector<double> action_scores(const Tensor& entropy, const LineActionSpace& space) {
  if (space.grid().is_3d()) return elevation_entropy(azimuth_average(entropy));
  return linewise_entropy(entropy, space);
}

ActionSet initial_or_baseline_actions(const PolicyConfig& p, std::size_t n_lines,
                                      std::size_t t) {
  if (p.kind == PolicyKind::equispaced) return equispaced_policy(t, n_lines, p.lines_per_frame);
  return random_policy(n_lines, p.lines_per_frame, p.seed, t);
}

EpisodeResult run_episode(const FrameSequence& source, const Denoiser& d,
                          const DiffusionSchedule& s, const EpisodeConfig& cfg,
                          const LabelSequence* labels) {
  const Grid& grid = source.grid();
  cfg.validate(grid, s);
  Shape stack_shape{cfg.window};
  for (auto n : grid.frame_shape()) stack_shape.push_back(n);
  ULSA_REQUIRE(d.stack_shape() == stack_shape,
               "episode: denoiser expects stacks " + shape_string(d.stack_shape()) +
                   ", source and window give " + shape_string(stack_shape));
  if (labels) {
    ULSA_REQUIRE(labels->grid == grid && labels->frames >= source.size(),
                 "episode: labels do not match the source");
  }

  const std::size_t frames =
      cfg.frame_limit ? std::min(cfg.frame_limit, source.size()) : source.size();
  const LineActionSpace space = make_line_action_space(grid);
  const std::size_t L = space.size();
  const double width = cfg.policy.resolved_width(L);
  const auto& g = cfg.guidance;

  EpisodeResult result;
  Shape out_shape{frames};
  for (auto n : grid.frame_shape()) out_shape.push_back(n);
  Tensor recon(out_shape);

  MeasurementBuffer buffer(cfg.window);
  ParticleStack prev;
  ActionSet actions = initial_or_baseline_actions(cfg.policy, L, 1);

  for (std::size_t t = 1; t <= frames; ++t) {
    FrameRecord rec;
    rec.t = t;
    rec.policy = to_string(cfg.policy.kind);
    rec.k = cfg.policy.lines_per_frame;
    rec.lines = actions.lines();

    const auto perceive_start = std::chrono::steady_clock::now();
    const Mask mask = mask_from_actions(actions, space);
    buffer = push(buffer, acquire(source, t - 1, actions, space), mask);
    const Tensor y = buffer.y_stack();
    const Mask a = buffer.m_stack();

    ParticleStack init;
    int tau_start = g.tau_init;
    std::size_t steps = g.first_frame_steps;
    if (t == 1) {
      init = noise_particles(stack_shape, cfg.particles, cfg.seed, t);
    } else if (cfg.seqdiff) {
      tau_start = g.tau_seqdiff;
      steps = g.seqdiff_steps;
      init = seqdiff_init(shift_particles(prev), tau_start, s, cfg.seed, t);
    } else {
      steps = g.seqdiff_steps;
      init = noise_particles(stack_shape, cfg.particles, cfg.seed, t);
    }
    try {
      DpsDiagnostics diag;
      prev = dps_sample(d, s, y, a, init, tau_start, steps, g,
                        cfg.diagnostics ? &diag : nullptr);
      if (cfg.diagnostics) {
        for (auto& r : diag.steps) {
          r.frame = t;
          cfg.diagnostics->steps.push_back(r);
        }
      }
    } catch (const NumericFailure& e) {
      throw NumericFailure("frame " + std::to_string(t) + ": " + e.what(), e.step());
    }
    Tensor x = reconstruct(prev, cfg.reconstruct);
    for (double& v : x.values()) v = std::clamp(v, -1.0, 1.0);
    recon.set_slice(t - 1, x);
    rec.perception_ms = elapsed_ms(perceive_start);

    const Tensor truth = source.frame(t - 1);
    rec.psnr_db = psnr(x, truth);
    if (labels) {
      const auto ven = region_indices(*labels, t - 1, Region::ventricle);
      const auto myo = region_indices(*labels, t - 1, Region::myocardium);
      if (!ven.empty() && !myo.empty()) {
        rec.gcnr = gcnr(gather(x, myo), gather(x, ven), cfg.gcnr_bins);
        rec.gcnr_reference = gcnr(gather(truth, myo), gather(truth, ven), cfg.gcnr_bins);
      }
    }

    const auto action_start = std::chrono::steady_clock::now();
    if (prev.count() >= 2) {
      const Tensor h = entropy_map(prev, cfg.policy.sigma_x2);
      rec.mean_entropy = sum(h) / static_cast<double>(h.size());
      rec.max_entropy = *std::max_element(h.values().begin(), h.values().end());
      if (cfg.policy.kind == PolicyKind::active) {
        actions = k_greedy_select(action_scores(h, space), cfg.policy.lines_per_frame, width);
      }
    }
    if (cfg.policy.kind != PolicyKind::active) {
      actions = initial_or_baseline_actions(cfg.policy, L, t + 1);
    }
    rec.action_ms = elapsed_ms(action_start);

    if (cfg.keep_beliefs) result.beliefs.push_back(prev.beliefs());
    result.log.frames.push_back(std::move(rec));
  }
  result.reconstructions = FrameSequence(grid, std::move(recon), source.frame_period());
  return result;
}

}  // namespace ulsa
