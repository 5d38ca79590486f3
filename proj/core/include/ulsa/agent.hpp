#pragma once

#include <cstdint>
#include <vector>

#include "ulsa/denoiser.hpp"
#include "ulsa/metrics.hpp"
#include "ulsa/phantom.hpp"
#include "ulsa/policy.hpp"
#include "ulsa/posterior.hpp"
#include "ulsa/sensing.hpp"

namespace ulsa {

struct EpisodeConfig {
  PolicyConfig policy;
  GuidanceConfig guidance;
  std::size_t window = 3;
  std::size_t particles = 4;
  std::uint64_t seed = 0;
  /// Process at most this many frames; 0 processes the whole source.
  std::size_t frame_limit = 0;
  /// Warm-start frames after the first from the previous posterior. When off,
  /// every frame restarts from noise at tau_init with seqdiff_steps steps.
  bool seqdiff = true;
  ReconstructMode reconstruct = ReconstructMode::first_particle;
  bool keep_beliefs = false;
  std::size_t gcnr_bins = 64;
  /// Per-step residuals of every frame are appended here when set.
  DpsDiagnostics* diagnostics = nullptr;

  void validate(const Grid& grid, const DiffusionSchedule& s) const;
};

struct EpisodeResult {
  /// Reconstructions clamped to [−1, 1].
  FrameSequence reconstructions;
  /// [N_p, ...frame] per frame, when keep_beliefs is set.
  std::vector<Tensor> beliefs;
  EpisodeLog log;
};

/// Acquire → perceive → act, one frame at a time. Labels, when given, enable
/// the gCNR columns (ventricle vs. myocardium).
EpisodeResult run_episode(const FrameSequence& source, const Denoiser& d,
                          const DiffusionSchedule& s, const EpisodeConfig& cfg,
                          const LabelSequence* labels = nullptr);

/// Line scores for the action step: line sums in 2D, azimuth-averaged plane
/// sums for volumes.
std::vector<double> action_scores(const Tensor& entropy, const LineActionSpace& space);

/// A_{t} for the baselines and A_1 for every policy (t is 1-based).
ActionSet initial_or_baseline_actions(const PolicyConfig& p, std::size_t n_lines,
                                      std::size_t t);

}  // namespace ulsa
