#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ulsa/denoiser.hpp"
#include "ulsa/grid.hpp"
#include "ulsa/random.hpp"

namespace ulsa {

/// Small convolutional ε-predictor.
///
/// Channels are the W frames (times n_el for volumes), spatial axes are
/// (n_ax, n_lat). With z = x_τ − α_τ·μ:
///
///   h1  = relu(film_b(conv5x5(z)))      FiLM scale/shift per noise bucket
///   h2  = relu(conv3x3(h1))
///   ε̂   = conv3x3(h2) + skip_b · z
///
/// The noise bucket is b = ⌊B·(2/π)·asin(σ_τ)⌋, clamped to B−1, so it depends
/// on σ_τ² only.
class LearnedDenoiser final : public Denoiser {
 public:
  struct Block {
    std::string name;
    Shape shape;
    std::size_t offset = 0;
    std::size_t size() const { return shape_size(shape); }
  };

  /// All parameters zero.
  LearnedDenoiser(Shape stack_shape, std::size_t features, std::size_t buckets);

  /// Default initialization: uniform(±1/√fan_in) convolutions, unit FiLM
  /// scales, skip weights rising from 0 to 1 across buckets, μ = mean.
  static LearnedDenoiser initialized(Shape stack_shape, std::size_t features,
                                     std::size_t buckets, const Tensor& mean, Rng& rng);

  const Shape& stack_shape() const override { return stack_shape_; }
  VjpMode vjp_mode() const override { return VjpMode::identity; }
  Tensor predict_noise(const Tensor& x_tau, int tau, const DiffusionSchedule& s) const override;
  std::string name() const override { return "learned"; }

  std::size_t features() const noexcept { return features_; }
  std::size_t buckets() const noexcept { return buckets_; }
  std::size_t bucket(int tau, const DiffusionSchedule& s) const;

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  const Block& block(const std::string& name) const;
  std::vector<double>& parameters() noexcept { return theta_; }
  const std::vector<double>& parameters() const noexcept { return theta_; }

  /// Squared error Σ(ε̂ − ε)² for one sample. Adds scale·∂/∂θ into grad.
  double accumulate_gradient(const Tensor& x_tau, const Tensor& eps, int tau,
                             const DiffusionSchedule& s, double scale,
                             std::vector<double>& grad) const;

 private:
  struct Dims {
    std::size_t c = 0, h = 0, w = 0;
    std::size_t p() const { return h * w; }
  };
  struct Cache;

  void forward(const Tensor& x_tau, int tau, const DiffusionSchedule& s, Cache& cache) const;

  Shape stack_shape_;
  Dims dims_{};
  std::size_t features_;
  std::size_t buckets_;
  std::vector<Block> blocks_;
  std::vector<double> theta_;
};

struct TrainConfig {
  std::vector<FrameSequence> dataset;
  /// Held-out sequences. If empty, the last ⌈n/8⌉ dataset sequences are held
  /// out.
  std::vector<FrameSequence> validation;
  std::size_t window = 3;
  std::size_t steps = 2000;
  std::size_t batch = 16;
  double learning_rate = 3e-3;
  std::uint64_t seed = 0;
  std::size_t features = 16;
  std::size_t buckets = 32;
  std::size_t validation_samples = 512;
  /// Qualification gate on validation ε-MSE per pixel.
  double max_validation_mse = 0.5;
};

struct TrainResult {
  std::shared_ptr<LearnedDenoiser> model;
  double validation_mse = 0.0;
  double initial_validation_mse = 0.0;
  std::vector<double> loss_history;  // per-step training batch loss
};

/// Adam on E‖ε − ε_θ(α_τx0 + σ_τε, τ)‖² over W-frame windows, τ uniform in
/// [1, τ_max]. Reproducible given cfg.seed. Throws QualificationFailure when
/// the validation ε-MSE reaches cfg.max_validation_mse.
TrainResult train_epsilon_denoiser(const TrainConfig& cfg, const DiffusionSchedule& s);

/// All W-frame windows of each sequence, in order.
std::vector<Tensor> window_stacks(const std::vector<FrameSequence>& seqs, std::size_t window);

/// Mean per-pixel ε-MSE over n draws (stack, τ, ε) from a seeded stream.
/// tau < 0 draws τ uniformly from [1, τ_max]; otherwise τ is fixed.
double epsilon_mse(const Denoiser& d, const std::vector<Tensor>& stacks,
                   const DiffusionSchedule& s, std::uint64_t seed, std::size_t n,
                   int tau = -1);

/// Checkpoint directory: `manifest` lists "name shape dtype" per line, then
/// one `<name>.ulsa` float32 container per parameter block.
void save_checkpoint(const LearnedDenoiser& model, const std::filesystem::path& dir);
std::shared_ptr<LearnedDenoiser> load_checkpoint(const std::filesystem::path& dir);

}  // namespace ulsa
