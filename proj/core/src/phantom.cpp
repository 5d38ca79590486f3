#include "ulsa/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "ulsa/errors.hpp"
#include "ulsa/random.hpp"

namespace ulsa {
namespace {

constexpr double kVentricle = 0.03;
constexpr double kMyocardium = 1.0;
constexpr double kBackground = 0.25;
constexpr double kFieldExtent = 1.2;

struct Point {
  double x, y, z;  // lateral, elevation, depth
};

std::vector<Point> pixel_positions(const Grid& g) {
  const auto& geo = g.geometry;
  std::vector<Point> pts;
  pts.reserve(g.frame_size());
  const double span = geo.depth_max - geo.depth_min;
  for (std::size_t i = 0; i < g.n_ax; ++i) {
    const double depth = geo.depth_min + (static_cast<double>(i) + 0.5) / static_cast<double>(g.n_ax) * span;
    for (std::size_t e = 0; e < g.n_el; ++e) {
      const double phi = g.is_3d() ? ((static_cast<double>(e) + 0.5) / static_cast<double>(g.n_el) - 0.5) *
                                         geo.elevation_angle
                                   : 0.0;
      for (std::size_t j = 0; j < g.n_lat; ++j) {
        const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(g.n_lat) - 0.5;
        if (g.kind == GridKind::cartesian2d) {
          const double width = 2.0 * geo.depth_max * std::sin(geo.opening_angle / 2.0);
          pts.push_back({u * width, 0.0, depth});
        } else {
          const double th = u * geo.opening_angle;
          pts.push_back({depth * std::sin(th) * std::cos(phi), depth * std::sin(phi),
                         depth * std::cos(th) * std::cos(phi)});
        }
      }
    }
  }
  return pts;
}

std::vector<double> gaussian_taps(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * k * k / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = v;
    total += v;
  }
  for (double& v : taps) v /= total;
  return taps;
}

// Separable Gaussian blur with symmetric (reflect) borders.
std::vector<double> blur(const std::vector<double>& in, std::size_t n, double sigma) {
  if (sigma <= 0.0) return in;
  const auto taps = gaussian_taps(sigma);
  const auto r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto sn = static_cast<std::ptrdiff_t>(n);
  auto reflect = [sn](std::ptrdiff_t i) {
    while (i < 0 || i >= sn) i = i < 0 ? -i - 1 : 2 * sn - i - 1;
    return i;
  };
  std::vector<double> tmp(in.size()), out(in.size());
  for (std::ptrdiff_t y = 0; y < sn; ++y)
    for (std::ptrdiff_t x = 0; x < sn; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k)
        s += taps[static_cast<std::size_t>(k + r)] * in[static_cast<std::size_t>(y * sn + reflect(x + k))];
      tmp[static_cast<std::size_t>(y * sn + x)] = s;
    }
  for (std::ptrdiff_t y = 0; y < sn; ++y)
    for (std::ptrdiff_t x = 0; x < sn; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k)
        s += taps[static_cast<std::size_t>(k + r)] * tmp[static_cast<std::size_t>(reflect(y + k) * sn + x)];
      out[static_cast<std::size_t>(y * sn + x)] = s;
    }
  return out;
}

// Unit-mean Rayleigh magnitude of a low-pass complex Gaussian field.
std::vector<double> speckle_field(std::size_t n, double sigma, Rng& rng) {
  std::vector<double> re(n * n), im(n * n);
  for (std::size_t i = 0; i < n * n; ++i) {
    re[i] = rng.normal();
    im[i] = rng.normal();
  }
  re = blur(re, n, sigma);
  im = blur(im, n, sigma);
  std::vector<double> mag(n * n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n * n; ++i) {
    mag[i] = std::hypot(re[i], im[i]);
    mean += mag[i];
  }
  mean /= static_cast<double>(n * n);
  for (double& v : mag) v /= mean;
  return mag;
}

double sample_bilinear(const std::vector<double>& f, std::size_t n, double row, double col) {
  const double hi = static_cast<double>(n - 1);
  row = std::clamp(row, 0.0, hi);
  col = std::clamp(col, 0.0, hi);
  const auto r0 = static_cast<std::size_t>(std::floor(row));
  const auto c0 = static_cast<std::size_t>(std::floor(col));
  const std::size_t r1 = std::min(r0 + 1, n - 1), c1 = std::min(c0 + 1, n - 1);
  const double fr = row - static_cast<double>(r0), fc = col - static_cast<double>(c0);
  return (1 - fr) * ((1 - fc) * f[r0 * n + c0] + fc * f[r0 * n + c1]) +
         fr * ((1 - fc) * f[r1 * n + c0] + fc * f[r1 * n + c1]);
}

}  // namespace

void PhantomParams::validate() const {
  grid.validate();
  ULSA_REQUIRE(frames >= 1, "phantom: frames must be >= 1");
  ULSA_REQUIRE(period >= 2, "phantom: period must be >= 2");
  ULSA_REQUIRE(0.0 < inner_radius && inner_radius < outer_radius && outer_radius < 1.0,
               "phantom: need 0 < inner < outer < 1");
  ULSA_REQUIRE(amplitude >= 0.0 && amplitude <= 0.5, "phantom: amplitude must lie in [0, 0.5]");
  ULSA_REQUIRE(speckle >= 0.0 && speckle <= 1.0, "phantom: speckle must lie in [0, 1]");
  ULSA_REQUIRE(speckle_filter_px >= 0.0, "phantom: speckle filter width must be >= 0");
  ULSA_REQUIRE(dynamic_range_db > 0.0, "phantom: dynamic range must be > 0");
  ULSA_REQUIRE(center_depth > 0.0, "phantom: center depth must be > 0");
}

Phantom generate_phantom(const PhantomParams& p) {
  p.validate();
  const Grid& g = p.grid;
  const std::size_t field_n = 4 * std::max(g.n_ax, g.n_lat);
  Rng rng(p.seed, Stream::phantom);
  const auto field = speckle_field(field_n, p.speckle_filter_px, rng);
  const auto pts = pixel_positions(g);
  const double scale = static_cast<double>(field_n - 1) / kFieldExtent;
  const std::size_t px = g.frame_size();

  Shape shape{p.frames};
  for (auto d : g.frame_shape()) shape.push_back(d);
  Tensor frames(shape, 0.0);
  LabelSequence labels{g, p.frames, std::vector<std::uint8_t>(p.frames * px)};

  for (std::size_t t = 0; t < p.frames; ++t) {
    const double phase = static_cast<double>(t % p.period) / static_cast<double>(p.period);
    const double wave = std::sin(2.0 * std::numbers::pi * phase);
    const double sc = 1.0 + p.amplitude * wave;
    const double ri = p.inner_radius * sc;
    const double ro = p.outer_radius * (1.0 + 0.5 * p.amplitude * wave);
    for (std::size_t i = 0; i < px; ++i) {
      const Point& q = pts[i];
      const double dz = q.z - p.center_depth;
      const double d = std::sqrt(q.x * q.x + q.y * q.y + dz * dz);
      Region region = d < ri ? Region::ventricle : (d < ro ? Region::myocardium : Region::background);
      const double refl = region == Region::ventricle ? kVentricle
                          : region == Region::myocardium ? kMyocardium
                                                          : kBackground;
      double u = q.x + q.y, v = q.z;
      if (d < ro) {
        u = (q.x + q.y) / sc;
        v = p.center_depth + dz / sc;
      }
      const double sp = sample_bilinear(field, field_n, v * scale, (u + kFieldExtent / 2.0) * scale);
      const double env = refl * ((1.0 - p.speckle) + p.speckle * sp);
      const double db = 20.0 * std::log10(std::max(env, 1e-6));
      const double unit = std::clamp((db + p.dynamic_range_db) / p.dynamic_range_db, 0.0, 1.0);
      frames[t * px + i] = 2.0 * unit - 1.0;
      labels.codes[t * px + i] = static_cast<std::uint8_t>(region);
    }
  }
  return {FrameSequence(g, std::move(frames)), std::move(labels)};
}

Tensor phantom_population_mean(const Grid& grid, std::size_t n, std::uint64_t seed,
                               std::size_t frames) {
  ULSA_REQUIRE(n >= 1, "phantom population: need at least one phantom");
  Rng rng(seed, Stream::training, {0x9e11});
  Tensor mean(grid.frame_shape(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    PhantomParams p;
    p.grid = grid;
    p.frames = frames;
    p.amplitude = 0.05 + 0.35 * rng.uniform();
    p.seed = derive_seed(seed, Stream::training, {i});
    const Phantom ph = generate_phantom(p);
    for (std::size_t t = 0; t < frames; ++t) mean += ph.sequence.frame(t);
  }
  mean *= 1.0 / static_cast<double>(n * frames);
  return mean;
}

std::vector<std::size_t> region_indices(const LabelSequence& labels, std::size_t t, Region r) {
  const auto codes = labels.frame(t);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] == static_cast<std::uint8_t>(r)) out.push_back(i);
  }
  return out;
}

}  // namespace ulsa
