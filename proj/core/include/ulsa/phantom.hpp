#pragma once

#include <cstdint>

#include "ulsa/grid.hpp"
#include "ulsa/ulsa_io.hpp"

namespace ulsa {

enum class Region : std::uint8_t { ventricle = 0, myocardium = 1, background = 2 };

/// Pulsating-heart phantom: a bright speckled annulus around a dark cavity,
/// both radii modulated sinusoidally, log-compressed to [−1, 1].
struct PhantomParams {
  Grid grid = Grid::polar(32, 32);
  std::size_t frames = 64;
  std::size_t period = 16;  // frames per beat
  double inner_radius = 0.18;  // fraction of depth
  double outer_radius = 0.30;
  double center_depth = 0.6;
  double amplitude = 0.2;  // relative radius modulation
  double speckle = 0.6;  // weight of the Rayleigh speckle term
  double speckle_filter_px = 2.0;
  double dynamic_range_db = 40.0;
  std::uint64_t seed = 0;

  /// Throws InvalidInput: 0 < inner < outer < 1, period ≥ 2, frames ≥ 1,
  /// amplitude ∈ [0, 0.5], speckle ∈ [0, 1].
  void validate() const;
};

struct Phantom {
  FrameSequence sequence;
  LabelSequence labels;
};

Phantom generate_phantom(const PhantomParams& p);

/// Mean frame over n phantoms on the grid, with pulsation amplitudes drawn
/// uniformly from [0.05, 0.4] and seeds from the given master seed. Used as
/// the prior mean of the Gaussian denoiser.
Tensor phantom_population_mean(const Grid& grid, std::size_t n, std::uint64_t seed,
                               std::size_t frames = 16);

/// Pixel indices of one frame carrying the given label.
std::vector<std::size_t> region_indices(const LabelSequence& labels, std::size_t t, Region r);

}  // namespace ulsa
