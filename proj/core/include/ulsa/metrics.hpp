#pragma once

#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ulsa/tensor.hpp"

namespace ulsa {

inline constexpr double kPsnrCap = 100.0;

/// 10·log10(peak²/MSE), or 100 dB when MSE = 0.
double psnr(const Tensor& x, const Tensor& ref, double peak = 2.0);

/// 1 − Σ_b min(h_a(b), h_b(b)) with normalized histograms over the pooled
/// range [min, max].
double gcnr(std::span<const double> a, std::span<const double> b, std::size_t bins = 64);

/// Values of x at the given flat indices.
std::vector<double> gather(const Tensor& x, std::span<const std::size_t> indices);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One processed frame. NaN marks a value that was not measured.
struct FrameRecord {
  std::size_t t = 0;  // 1-based
  std::string policy;
  std::size_t k = 0;
  double psnr_db = kMissing;
  double gcnr = kMissing;
  double gcnr_reference = kMissing;  // gCNR of the ground-truth frame
  double mean_entropy = kMissing;
  double max_entropy = kMissing;
  double perception_ms = kMissing;
  double action_ms = kMissing;
  std::vector<std::size_t> lines;
};

struct EpisodeLog {
  std::vector<FrameRecord> frames;

  double mean_psnr() const;
  double mean_gcnr() const;

  /// Header t,policy,K,psnr_db,gcnr,mean_entropy,perception_ms,action_ms,lines.
  /// Timing fields are left empty unless with_timing is set.
  void write_csv(std::ostream& os, bool with_timing) const;
  /// t,perception_ms,action_ms
  void write_timing_csv(std::ostream& os) const;
};

struct SummaryRow {
  std::string policy;
  std::size_t k = 0;
  double psnr_mean = 0.0, psnr_std = 0.0;
  double gcnr_mean = kMissing, gcnr_std = kMissing, gcnr_rel_mean = kMissing;
  double perception_ms_mean = kMissing, action_ms_mean = kMissing;
};

/// Pools frames over episodes per (policy, K), in order of first appearance.
/// Standard deviations are population (ddof = 0). Throws on empty input.
std::vector<SummaryRow> episode_report(const std::vector<EpisodeLog>& logs);

/// policy,K,psnr_mean,psnr_std,gcnr_mean,gcnr_std,gcnr_rel_mean,perception_ms_mean,action_ms_mean
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

/// Fixed-point text for CSV output; NaN becomes an empty field.
std::string csv_number(double v, int precision = 4);

}  // namespace ulsa
