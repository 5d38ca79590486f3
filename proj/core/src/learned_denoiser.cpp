#include "ulsa/learned_denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "ulsa/errors.hpp"
#include "ulsa/ulsa_io.hpp"

namespace ulsa {
namespace {

using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

constexpr std::size_t kK1 = 5;
constexpr std::size_t kK2 = 3;

Mat im2col(const Mat& in, std::size_t h, std::size_t w, std::size_t k) {
  const auto c = static_cast<std::size_t>(in.rows());
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  Mat cols = Mat::Zero(static_cast<Eigen::Index>(c * k * k), static_cast<Eigen::Index>(h * w));
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const auto row = static_cast<Eigen::Index>((ch * k + ky) * k + kx);
        for (std::size_t i = 0; i < h; ++i) {
          const auto si = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(ky) - r;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t j = 0; j < w; ++j) {
            const auto sj = static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(kx) - r;
            if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
            cols(row, static_cast<Eigen::Index>(i * w + j)) =
                in(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(si) * static_cast<Eigen::Index>(w) + sj);
          }
        }
      }
    }
  }
  return cols;
}

Mat col2im(const Mat& cols, std::size_t c, std::size_t h, std::size_t w, std::size_t k) {
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  Mat out = Mat::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(h * w));
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const auto row = static_cast<Eigen::Index>((ch * k + ky) * k + kx);
        for (std::size_t i = 0; i < h; ++i) {
          const auto si = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(ky) - r;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t j = 0; j < w; ++j) {
            const auto sj = static_cast<std::ptrdiff_t>(j) + static_cast<std::ptrdiff_t>(kx) - r;
            if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
            out(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(si) * static_cast<Eigen::Index>(w) + sj) +=
                cols(row, static_cast<Eigen::Index>(i * w + j));
          }
        }
      }
    }
  }
  return out;
}

// Stack tensor <-> (channels x pixels). Volumes fold elevation into channels.
Mat to_channels(const Tensor& x, const Shape& shape) {
  const std::size_t W = shape[0], ax = shape[1];
  const std::size_t el = shape.size() == 4 ? shape[2] : 1;
  const std::size_t lat = shape.back();
  Mat m(static_cast<Eigen::Index>(W * el), static_cast<Eigen::Index>(ax * lat));
  for (std::size_t f = 0; f < W; ++f)
    for (std::size_t a = 0; a < ax; ++a)
      for (std::size_t e = 0; e < el; ++e)
        for (std::size_t l = 0; l < lat; ++l)
          m(static_cast<Eigen::Index>(f * el + e), static_cast<Eigen::Index>(a * lat + l)) =
              x[((f * ax + a) * el + e) * lat + l];
  return m;
}

Tensor from_channels(const Mat& m, const Shape& shape) {
  const std::size_t W = shape[0], ax = shape[1];
  const std::size_t el = shape.size() == 4 ? shape[2] : 1;
  const std::size_t lat = shape.back();
  Tensor x(shape);
  for (std::size_t f = 0; f < W; ++f)
    for (std::size_t a = 0; a < ax; ++a)
      for (std::size_t e = 0; e < el; ++e)
        for (std::size_t l = 0; l < lat; ++l)
          x[((f * ax + a) * el + e) * lat + l] =
              m(static_cast<Eigen::Index>(f * el + e), static_cast<Eigen::Index>(a * lat + l));
  return x;
}

}  // namespace

struct LearnedDenoiser::Cache {
  std::size_t bucket = 0;
  double alpha = 1.0;
  Mat z, c1, a1, u1, h1, c2, a2, h2, c3, out;
};

LearnedDenoiser::LearnedDenoiser(Shape stack_shape, std::size_t features, std::size_t buckets)
    : stack_shape_(std::move(stack_shape)), features_(features), buckets_(buckets) {
  ULSA_REQUIRE(stack_shape_.size() == 3 || stack_shape_.size() == 4,
               "learned denoiser: stack shape must be [W, ax, (el,) lat]");
  ULSA_REQUIRE(shape_size(stack_shape_) > 0, "learned denoiser: empty stack shape");
  ULSA_REQUIRE(features >= 1 && buckets >= 1, "learned denoiser: features and buckets must be >= 1");
  dims_.c = stack_shape_[0] * (stack_shape_.size() == 4 ? stack_shape_[2] : 1);
  dims_.h = stack_shape_[1];
  dims_.w = stack_shape_.back();
  const std::size_t C = dims_.c, F = features, B = buckets;
  auto add = [this](std::string name, Shape shape) {
    const std::size_t offset = blocks_.empty() ? 0 : blocks_.back().offset + blocks_.back().size();
    blocks_.push_back({std::move(name), std::move(shape), offset});
  };
  add("mean", stack_shape_);
  add("conv1.weight", {F, C, kK1, kK1});
  add("conv1.bias", {F});
  add("film.scale", {B, F});
  add("film.shift", {B, F});
  add("conv2.weight", {F, F, kK2, kK2});
  add("conv2.bias", {F});
  add("conv3.weight", {C, F, kK2, kK2});
  add("conv3.bias", {C});
  add("skip", {B});
  theta_.assign(blocks_.back().offset + blocks_.back().size(), 0.0);
}

LearnedDenoiser LearnedDenoiser::initialized(Shape stack_shape, std::size_t features,
                                             std::size_t buckets, const Tensor& mean, Rng& rng) {
  LearnedDenoiser net(std::move(stack_shape), features, buckets);
  ULSA_REQUIRE(mean.shape() == net.stack_shape_, "learned denoiser: mean shape mismatch");
  auto fill = [&](const std::string& name, auto fn) {
    const Block& b = net.block(name);
    for (std::size_t i = 0; i < b.size(); ++i) net.theta_[b.offset + i] = fn(i);
  };
  fill("mean", [&](std::size_t i) { return mean[i]; });
  for (const char* conv : {"conv1", "conv2", "conv3"}) {
    const Block& wb = net.block(std::string(conv) + ".weight");
    const double fan_in = static_cast<double>(wb.size() / wb.shape[0]);
    const double bound = 1.0 / std::sqrt(fan_in);
    auto uni = [&](std::size_t) { return bound * (2.0 * rng.uniform() - 1.0); };
    fill(std::string(conv) + ".weight", uni);
    fill(std::string(conv) + ".bias", uni);
  }
  fill("film.scale", [](std::size_t) { return 1.0; });
  fill("skip", [&](std::size_t i) {
    return buckets == 1 ? 1.0
                        : std::sin(std::numbers::pi / 2.0 * static_cast<double>(i) /
                                   static_cast<double>(buckets - 1));
  });
  return net;
}

const LearnedDenoiser::Block& LearnedDenoiser::block(const std::string& name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw InvalidInput("learned denoiser: no parameter block '" + name + "'");
}

std::size_t LearnedDenoiser::bucket(int tau, const DiffusionSchedule& s) const {
  const double sg = std::clamp(s.sigma(tau), 0.0, 1.0);
  const double u = std::asin(sg) * 2.0 / std::numbers::pi;
  const auto b = static_cast<std::size_t>(std::floor(u * static_cast<double>(buckets_)));
  return std::min(b, buckets_ - 1);
}

void LearnedDenoiser::forward(const Tensor& x_tau, int tau, const DiffusionSchedule& s,
                              Cache& k) const {
  const std::size_t C = dims_.c, F = features_, h = dims_.h, w = dims_.w;
  const auto P = static_cast<Eigen::Index>(dims_.p());
  const double* th = theta_.data();
  auto at = [&](const char* name) { return th + block(name).offset; };

  k.bucket = bucket(tau, s);
  k.alpha = s.alpha(tau);
  const Mat mu = to_channels(Tensor(stack_shape_, std::vector<double>(at("mean"), at("mean") + shape_size(stack_shape_))), stack_shape_);
  k.z = to_channels(x_tau, stack_shape_) - k.alpha * mu;

  const auto Fi = static_cast<Eigen::Index>(F), Ci = static_cast<Eigen::Index>(C);
  ConstMap w1(at("conv1.weight"), Fi, Ci * static_cast<Eigen::Index>(kK1 * kK1));
  ConstMap w2(at("conv2.weight"), Fi, Fi * static_cast<Eigen::Index>(kK2 * kK2));
  ConstMap w3(at("conv3.weight"), Ci, Fi * static_cast<Eigen::Index>(kK2 * kK2));
  Eigen::Map<const Eigen::VectorXd> b1(at("conv1.bias"), Fi), b2(at("conv2.bias"), Fi),
      b3(at("conv3.bias"), Ci);
  Eigen::Map<const Eigen::VectorXd> g(at("film.scale") + k.bucket * F, Fi),
      beta(at("film.shift") + k.bucket * F, Fi);
  const double skip = at("skip")[k.bucket];

  k.c1 = im2col(k.z, h, w, kK1);
  k.a1.noalias() = w1 * k.c1;
  k.a1.colwise() += b1;
  k.u1 = (g.asDiagonal() * k.a1).colwise() + beta;
  k.h1 = k.u1.cwiseMax(0.0);
  k.c2 = im2col(k.h1, h, w, kK2);
  k.a2.noalias() = w2 * k.c2;
  k.a2.colwise() += b2;
  k.h2 = k.a2.cwiseMax(0.0);
  k.c3 = im2col(k.h2, h, w, kK2);
  k.out.noalias() = w3 * k.c3;
  k.out.colwise() += b3;
  k.out += skip * k.z;
  (void)P;
}

Tensor LearnedDenoiser::predict_noise(const Tensor& x_tau, int tau,
                                      const DiffusionSchedule& s) const {
  ULSA_REQUIRE(x_tau.shape() == stack_shape_, "learned denoiser: input shape mismatch");
  Cache k;
  forward(x_tau, tau, s, k);
  return from_channels(k.out, stack_shape_);
}

double LearnedDenoiser::accumulate_gradient(const Tensor& x_tau, const Tensor& eps, int tau,
                                            const DiffusionSchedule& s, double scale,
                                            std::vector<double>& grad) const {
  ULSA_REQUIRE(grad.size() == theta_.size(), "learned denoiser: gradient size mismatch");
  Cache k;
  forward(x_tau, tau, s, k);
  const std::size_t C = dims_.c, F = features_, h = dims_.h, w = dims_.w;
  const auto Fi = static_cast<Eigen::Index>(F), Ci = static_cast<Eigen::Index>(C);
  const double* th = theta_.data();
  auto at = [&](const char* name) { return block(name).offset; };

  const Mat diff = k.out - to_channels(eps, stack_shape_);
  const double loss = diff.squaredNorm();
  const Mat dout = 2.0 * scale * diff;

  ConstMap w1(th + at("conv1.weight"), Fi, Ci * static_cast<Eigen::Index>(kK1 * kK1));
  ConstMap w2(th + at("conv2.weight"), Fi, Fi * static_cast<Eigen::Index>(kK2 * kK2));
  ConstMap w3(th + at("conv3.weight"), Ci, Fi * static_cast<Eigen::Index>(kK2 * kK2));
  Eigen::Map<const Eigen::VectorXd> g(th + at("film.scale") + k.bucket * F, Fi);
  const double skip = th[at("skip") + k.bucket];

  double* gr = grad.data();
  grad[at("skip") + k.bucket] += dout.cwiseProduct(k.z).sum();
  Mat dz = skip * dout;

  MutMap(gr + at("conv3.weight"), w3.rows(), w3.cols()).noalias() += dout * k.c3.transpose();
  Eigen::Map<Eigen::VectorXd>(gr + at("conv3.bias"), Ci) += dout.rowwise().sum();
  const Mat dh2 = col2im(w3.transpose() * dout, F, h, w, kK2);

  const Mat da2 = dh2.cwiseProduct((k.a2.array() > 0.0).cast<double>().matrix());
  MutMap(gr + at("conv2.weight"), w2.rows(), w2.cols()).noalias() += da2 * k.c2.transpose();
  Eigen::Map<Eigen::VectorXd>(gr + at("conv2.bias"), Fi) += da2.rowwise().sum();
  const Mat dh1 = col2im(w2.transpose() * da2, F, h, w, kK2);

  const Mat du1 = dh1.cwiseProduct((k.u1.array() > 0.0).cast<double>().matrix());
  Eigen::Map<Eigen::VectorXd>(gr + at("film.scale") + k.bucket * F, Fi) +=
      du1.cwiseProduct(k.a1).rowwise().sum();
  Eigen::Map<Eigen::VectorXd>(gr + at("film.shift") + k.bucket * F, Fi) += du1.rowwise().sum();
  const Mat da1 = g.asDiagonal() * du1;
  MutMap(gr + at("conv1.weight"), w1.rows(), w1.cols()).noalias() += da1 * k.c1.transpose();
  Eigen::Map<Eigen::VectorXd>(gr + at("conv1.bias"), Fi) += da1.rowwise().sum();
  dz += col2im(w1.transpose() * da1, C, h, w, kK1);

  const Tensor dmean = from_channels(-k.alpha * dz, stack_shape_);
  const std::size_t mo = at("mean");
  for (std::size_t i = 0; i < dmean.size(); ++i) grad[mo + i] += dmean[i];
  return loss;
}

std::vector<Tensor> window_stacks(const std::vector<FrameSequence>& seqs, std::size_t window) {
  ULSA_REQUIRE(window >= 1, "window must be >= 1");
  std::vector<Tensor> out;
  for (const auto& seq : seqs) {
    ULSA_REQUIRE(seq.size() >= window, "sequence of " + std::to_string(seq.size()) +
                                           " frames is shorter than window " +
                                           std::to_string(window));
    for (std::size_t t = 0; t + window <= seq.size(); ++t) {
      std::vector<Tensor> parts;
      for (std::size_t k = 0; k < window; ++k) parts.push_back(seq.frame(t + k));
      out.push_back(stack(parts));
    }
  }
  return out;
}

double epsilon_mse(const Denoiser& d, const std::vector<Tensor>& stacks,
                   const DiffusionSchedule& s, std::uint64_t seed, std::size_t n, int tau) {
  ULSA_REQUIRE(!stacks.empty() && n >= 1, "epsilon_mse: no samples");
  Rng rng(seed);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& x0 = stacks[rng.index(stacks.size())];
    const int t = tau >= 0 ? tau : 1 + static_cast<int>(rng.index(static_cast<std::size_t>(s.tau_max)));
    const Tensor eps = rng.normal_tensor(x0.shape());
    const Tensor pred = denoise(d, forward_diffuse(x0, eps, t, s), t, s);
    total += squared_norm(pred - eps) / static_cast<double>(eps.size());
  }
  return total / static_cast<double>(n);
}

TrainResult train_epsilon_denoiser(const TrainConfig& cfg, const DiffusionSchedule& s) {
  ULSA_REQUIRE(cfg.window >= 1, "train: window must be >= 1");
  ULSA_REQUIRE(cfg.steps >= 1, "train: steps must be >= 1");
  ULSA_REQUIRE(cfg.batch >= 1, "train: batch must be >= 1");
  ULSA_REQUIRE(cfg.learning_rate > 0.0, "train: learning rate must be > 0");
  ULSA_REQUIRE(!cfg.dataset.empty(), "train: empty dataset");

  std::vector<FrameSequence> train = cfg.dataset;
  std::vector<FrameSequence> valid = cfg.validation;
  if (valid.empty()) {
    ULSA_REQUIRE(train.size() >= 2, "train: need at least 2 sequences to hold one out");
    const std::size_t held = (train.size() + 7) / 8;
    valid.assign(train.end() - static_cast<std::ptrdiff_t>(held), train.end());
    train.resize(train.size() - held);
  }
  const Grid grid = train.front().grid();
  for (const auto* set : {&train, &valid}) {
    for (const auto& seq : *set) {
      ULSA_REQUIRE(seq.grid() == grid, "train: all sequences must share one grid");
    }
  }
  const std::vector<Tensor> tr = window_stacks(train, cfg.window);
  const std::vector<Tensor> va = window_stacks(valid, cfg.window);

  Tensor mean(tr.front().shape(), 0.0);
  for (const auto& x : tr) mean += x;
  mean *= 1.0 / static_cast<double>(tr.size());

  Rng init_rng(cfg.seed, Stream::training, {0});
  auto model = std::make_shared<LearnedDenoiser>(LearnedDenoiser::initialized(
      mean.shape(), cfg.features, cfg.buckets, mean, init_rng));

  const std::uint64_t val_seed = derive_seed(cfg.seed, Stream::validation);
  TrainResult result;
  result.initial_validation_mse = epsilon_mse(*model, va, s, val_seed, cfg.validation_samples);

  auto& theta = model->parameters();
  std::vector<double> grad(theta.size()), m1(theta.size(), 0.0), m2(theta.size(), 0.0);
  constexpr double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  Rng rng(cfg.seed, Stream::training, {1});
  const double per_sample = 1.0 / static_cast<double>(cfg.batch * mean.size());
  result.loss_history.reserve(cfg.steps);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const Tensor& x0 = tr[rng.index(tr.size())];
      const int tau = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(s.tau_max)));
      const Tensor eps = rng.normal_tensor(x0.shape());
      loss += model->accumulate_gradient(forward_diffuse(x0, eps, tau, s), eps, tau, s,
                                         per_sample, grad);
    }
    loss *= per_sample;
    if (!std::isfinite(loss)) throw NumericFailure("train: non-finite loss", static_cast<int>(step));
    result.loss_history.push_back(loss);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m1[i] = b1 * m1[i] + (1.0 - b1) * grad[i];
      m2[i] = b2 * m2[i] + (1.0 - b2) * grad[i] * grad[i];
      theta[i] -= cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + adam_eps);
    }
  }
  // Checkpoints are float32; round now so the saved model is the evaluated one.
  for (double& v : theta) v = static_cast<double>(static_cast<float>(v));

  result.validation_mse = epsilon_mse(*model, va, s, val_seed, cfg.validation_samples);
  result.model = model;
  if (!(result.validation_mse < cfg.max_validation_mse)) {
    std::ostringstream os;
    os << "validation epsilon-MSE " << result.validation_mse << " does not meet the gate "
       << cfg.max_validation_mse;
    throw QualificationFailure(os.str(), result.validation_mse);
  }
  return result;
}

void save_checkpoint(const LearnedDenoiser& model, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory", dir.string());
  std::ofstream manifest(dir / "manifest", std::ios::trunc);
  if (!manifest) throw IoError("cannot write manifest", (dir / "manifest").string());
  const auto& theta = model.parameters();
  for (const auto& b : model.blocks()) {
    manifest << b.name << ' ';
    for (std::size_t i = 0; i < b.shape.size(); ++i) manifest << (i ? "x" : "") << b.shape[i];
    manifest << " float32\n";
    UlsaArray a;
    for (auto d : b.shape) a.dims.push_back(static_cast<std::uint32_t>(d));
    a.f32.assign(theta.begin() + static_cast<std::ptrdiff_t>(b.offset),
                 theta.begin() + static_cast<std::ptrdiff_t>(b.offset + b.size()));
    write_ulsa(dir / (b.name + ".ulsa"), a);
  }
  if (!manifest) throw IoError("cannot write manifest", (dir / "manifest").string());
}

std::shared_ptr<LearnedDenoiser> load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest");
  if (!manifest) throw IoError("cannot read checkpoint manifest", (dir / "manifest").string());
  std::vector<std::pair<std::string, Shape>> entries;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    std::string name, shape_text, dtype;
    if (!(is >> name >> shape_text >> dtype) || dtype != "float32") {
      throw IoError("malformed manifest line '" + line + "'", (dir / "manifest").string());
    }
    Shape shape;
    std::istringstream ss(shape_text);
    for (std::string part; std::getline(ss, part, 'x');) shape.push_back(std::stoul(part));
    entries.emplace_back(name, shape);
  }
  auto find = [&](const std::string& name) -> const Shape& {
    for (const auto& [n, sh] : entries) {
      if (n == name) return sh;
    }
    throw IoError("checkpoint lacks parameter '" + name + "'", dir.string());
  };
  const Shape& stack_shape = find("mean");
  const std::size_t features = find("conv1.weight").at(0);
  const std::size_t buckets = find("skip").at(0);
  auto model = std::make_shared<LearnedDenoiser>(stack_shape, features, buckets);
  auto& theta = model->parameters();
  for (const auto& b : model->blocks()) {
    if (find(b.name) != b.shape) throw IoError("shape mismatch for '" + b.name + "'", dir.string());
    const UlsaArray a = read_ulsa(dir / (b.name + ".ulsa"));
    if (a.dtype != DType::float32 || a.element_count() != b.size()) {
      throw IoError("bad parameter container", (dir / (b.name + ".ulsa")).string());
    }
    std::copy(a.f32.begin(), a.f32.end(), theta.begin() + static_cast<std::ptrdiff_t>(b.offset));
  }
  return model;
}

}  // namespace ulsa
