#include "ulsa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "ulsa/errors.hpp"

namespace ulsa {
namespace {

struct Moments {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    if (std::isnan(v)) return;
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : kMissing; }
  double stddev() const {
    if (!n) return kMissing;
    const double m = mean();
    return std::sqrt(std::max(0.0, sum_sq / static_cast<double>(n) - m * m));
  }
};

}  // namespace

double psnr(const Tensor& x, const Tensor& ref, double peak) {
  require_same_shape(x, ref, "psnr");
  ULSA_REQUIRE(peak > 0.0, "psnr: peak must be > 0");
  ULSA_REQUIRE(!x.empty(), "psnr: empty input");
  const double mse = squared_norm(x - ref) / static_cast<double>(x.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double gcnr(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  ULSA_REQUIRE(!a.empty() && !b.empty(), "gcnr: both regions must be nonempty");
  ULSA_REQUIRE(bins >= 2, "gcnr: need at least 2 bins");
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  const double lo = std::min(*amin, *bmin);
  const double hi = std::max(*amax, *bmax);
  if (hi == lo) return 0.0;
  auto histogram = [&](std::span<const double> v) {
    std::vector<double> h(bins, 0.0);
    for (double x : v) {
      auto k = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
      h[std::min(k, bins - 1)] += 1.0;
    }
    for (double& c : h) c /= static_cast<double>(v.size());
    return h;
  };
  const auto ha = histogram(a);
  const auto hb = histogram(b);
  double overlap = 0.0;
  for (std::size_t k = 0; k < bins; ++k) overlap += std::min(ha[k], hb[k]);
  return std::clamp(1.0 - overlap, 0.0, 1.0);
}

std::vector<double> gather(const Tensor& x, std::span<const std::size_t> indices) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    ULSA_REQUIRE(i < x.size(), "gather: index out of range");
    out.push_back(x[i]);
  }
  return out;
}

double EpisodeLog::mean_psnr() const {
  Moments m;
  for (const auto& f : frames) m.add(f.psnr_db);
  return m.mean();
}

double EpisodeLog::mean_gcnr() const {
  Moments m;
  for (const auto& f : frames) m.add(f.gcnr);
  return m.mean();
}

std::string csv_number(double v, int precision) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

void EpisodeLog::write_csv(std::ostream& os, bool with_timing) const {
  os << "t,policy,K,psnr_db,gcnr,mean_entropy,perception_ms,action_ms,lines\n";
  for (const auto& f : frames) {
    os << f.t << ',' << f.policy << ',' << f.k << ',' << csv_number(f.psnr_db) << ','
       << csv_number(f.gcnr) << ',' << csv_number(f.mean_entropy, 6) << ','
       << (with_timing ? csv_number(f.perception_ms, 3) : "") << ','
       << (with_timing ? csv_number(f.action_ms, 3) : "") << ',';
    for (std::size_t i = 0; i < f.lines.size(); ++i) os << (i ? ";" : "") << f.lines[i];
    os << '\n';
  }
}

void EpisodeLog::write_timing_csv(std::ostream& os) const {
  os << "t,perception_ms,action_ms\n";
  for (const auto& f : frames) {
    os << f.t << ',' << csv_number(f.perception_ms, 3) << ',' << csv_number(f.action_ms, 3)
       << '\n';
  }
}

std::vector<SummaryRow> episode_report(const std::vector<EpisodeLog>& logs) {
  struct Acc {
    Moments psnr, gcnr, rel, perception, action;
  };
  std::vector<std::pair<std::string, std::size_t>> order;
  std::map<std::pair<std::string, std::size_t>, Acc> acc;
  for (const auto& log : logs) {
    for (const auto& f : log.frames) {
      const auto key = std::make_pair(f.policy, f.k);
      if (!acc.contains(key)) order.push_back(key);
      Acc& a = acc[key];
      a.psnr.add(f.psnr_db);
      a.gcnr.add(f.gcnr);
      if (!std::isnan(f.gcnr) && !std::isnan(f.gcnr_reference) && f.gcnr_reference > 0.0) {
        a.rel.add(f.gcnr / f.gcnr_reference);
      }
      a.perception.add(f.perception_ms);
      a.action.add(f.action_ms);
    }
  }
  ULSA_REQUIRE(!order.empty(), "episode_report: no frames");
  std::vector<SummaryRow> rows;
  for (const auto& key : order) {
    const Acc& a = acc.at(key);
    rows.push_back({key.first, key.second, a.psnr.mean(), a.psnr.stddev(), a.gcnr.mean(),
                    a.gcnr.stddev(), a.rel.mean(), a.perception.mean(), a.action.mean()});
  }
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "policy,K,psnr_mean,psnr_std,gcnr_mean,gcnr_std,gcnr_rel_mean,perception_ms_mean,"
        "action_ms_mean\n";
  for (const auto& r : rows) {
    os << r.policy << ',' << r.k << ',' << csv_number(r.psnr_mean) << ','
       << csv_number(r.psnr_std) << ',' << csv_number(r.gcnr_mean) << ','
       << csv_number(r.gcnr_std) << ',' << csv_number(r.gcnr_rel_mean) << ','
       << csv_number(r.perception_ms_mean, 3) << ',' << csv_number(r.action_ms_mean, 3) << '\n';
  }
}

}  // namespace ulsa
