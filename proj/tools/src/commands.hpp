#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace ulsa::cli {

using Json = nlohmann::ordered_json;

struct PhantomOptions {
  std::size_t frames = 64;
  std::size_t size = 32;
  std::uint64_t seed = 0;
  std::size_t period = 16;
  double amplitude = 0.2;
  double speckle = 0.6;
  double inner = 0.18;
  double outer = 0.30;
  std::string grid = "polar2d";
  std::size_t elevation = 8;
  std::string out;
};

struct RunOptions {
  std::string input;
  std::string labels;  // "" = sibling labels.ulsa if present, "none" = off
  std::string grid = "auto";
  std::string policy = "active";
  std::size_t lines_per_frame = 4;
  std::size_t particles = 4;
  std::size_t window = 3;
  std::size_t steps = 25;
  std::size_t first_frame_steps = 0;
  int tau_max = 500;
  int tau_seqdiff = 450;
  double gamma = 3.0;
  double sigma_x2 = 0.04;
  std::string rbf_width = "auto";
  std::uint64_t seed = 0;
  std::string denoiser = "gaussian";
  std::size_t prior_phantoms = 8;
  std::string clip_denoised = "auto";
  std::string reconstruct = "first";
  std::size_t frames = 0;  // 0 = all
  bool no_seqdiff = false;
  bool log_timing = false;
  bool debug_residuals = false;
  std::string out;

  // bench only
  std::size_t size = 32;
};

struct TrainOptions {
  std::vector<std::string> input;
  std::size_t phantoms = 0;
  std::size_t size = 32;
  std::size_t frames = 64;
  std::size_t window = 3;
  std::size_t steps = 2000;
  std::size_t batch = 16;
  double lr = 3e-3;
  std::size_t features = 16;
  std::size_t buckets = 32;
  std::size_t validation_samples = 512;
  double max_validation_mse = 0.5;
  int tau_max = 500;
  std::uint64_t seed = 0;
  std::string out;
};

/// Each returns the list of files written. manifest is filled with results
/// that belong in the run manifest.
std::vector<std::filesystem::path> cmd_phantom(const PhantomOptions& o, Json& manifest,
                                               std::ostream& out);
std::vector<std::filesystem::path> cmd_run(const RunOptions& o, Json& manifest,
                                           std::ostream& out);
std::vector<std::filesystem::path> cmd_bench(const RunOptions& o, Json& manifest,
                                             std::ostream& out);
std::vector<std::filesystem::path> cmd_train(const TrainOptions& o, Json& manifest,
                                             std::ostream& out);

void write_text(const std::filesystem::path& path, const std::string& text);
void ensure_directory(const std::filesystem::path& dir);

}  // namespace ulsa::cli
