#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include <Eigen/Dense>

#include "ulsa/denoiser.hpp"
#include "ulsa/errors.hpp"
#include "ulsa/learned_denoiser.hpp"
#include "ulsa/phantom.hpp"
#include "ulsa/random.hpp"

using namespace ulsa;

namespace {

Eigen::VectorXd as_vector(const Tensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
}

// ε̂ by a direct dense solve.
Eigen::VectorXd dense_oracle(const Eigen::MatrixXd& cov, const Tensor& mean, const Tensor& x,
                             double a, double s) {
  const Eigen::Index n = cov.rows();
  const Eigen::MatrixXd m = a * a * cov + s * s * Eigen::MatrixXd::Identity(n, n);
  return s * m.ldlt().solve(as_vector(x) - a * as_vector(mean));
}

GaussianPrior small_se_prior(std::uint64_t seed) {
  Rng rng(seed, Stream::test);
  Tensor mean = rng.normal_tensor({2, 3, 4});
  mean *= 0.2;
  return GaussianPrior::squared_exponential(mean, SeKernel{});
}

}  // namespace

TEST(GaussianDenoiser, ScalarExample) {
  const auto s = make_cosine_schedule(500);
  const GaussianDenoiser d(GaussianPrior::dense(Tensor({1, 1, 1}, 0.5), Eigen::MatrixXd::Constant(1, 1, 0.25)));
  const double a = s.alpha(250), sg = s.sigma(250);
  const Tensor x({1, 1, 1}, 1.0);
  const double expected = sg * (1.0 - a * 0.5) / (a * a * 0.25 + sg * sg);
  EXPECT_NEAR(d.predict_noise(x, 250, s)[0], expected, 1e-12);
}

TEST(GaussianDenoiser, IsotropicFormula) {
  const auto s = make_cosine_schedule(100);
  const double c = 0.7;
  const Tensor mean({1, 2, 3}, 0.1);
  const GaussianDenoiser d(GaussianPrior::dense(mean, c * Eigen::MatrixXd::Identity(6, 6)));
  Rng rng(1, Stream::test);
  const Tensor x = rng.normal_tensor({1, 2, 3});
  for (int tau : {1, 30, 99}) {
    const double a = s.alpha(tau), sg = s.sigma(tau);
    const Tensor eps = d.predict_noise(x, tau, s);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_NEAR(eps[i], sg * (x[i] - a * 0.1) / (a * a * c + sg * sg), 1e-12);
    }
  }
}

TEST(GaussianDenoiser, SpectralMatchesDenseSolve) {
  const auto s = make_cosine_schedule(500);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GaussianPrior prior = small_se_prior(seed);
    const Eigen::MatrixXd cov = prior.covariance();
    const GaussianDenoiser d(prior);
    Rng rng(seed, Stream::test, {1});
    const Tensor x = rng.normal_tensor(prior.shape());
    for (int tau : {1, 50, 250, 450, 500}) {
      const Eigen::VectorXd ref = dense_oracle(cov, prior.mean(), x, s.alpha(tau), s.sigma(tau));
      const Eigen::VectorXd got = as_vector(d.predict_noise(x, tau, s));
      EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-8) << "tau " << tau;
    }
  }
}

TEST(GaussianDenoiser, SpectralCovarianceIsKroneckerOfKernels) {
  SeKernel k;
  const GaussianPrior p = GaussianPrior::squared_exponential(Tensor({2, 2, 3}, 0.0), k);
  const Eigen::MatrixXd cov = p.covariance();
  const Eigen::MatrixXd kt = se_kernel_matrix(2, k.temporal);
  const Eigen::MatrixXd ka = se_kernel_matrix(2, k.axial);
  const Eigen::MatrixXd kl = se_kernel_matrix(3, k.lateral);
  for (int w = 0; w < 2; ++w)
    for (int a = 0; a < 2; ++a)
      for (int l = 0; l < 3; ++l)
        for (int w2 = 0; w2 < 2; ++w2)
          for (int a2 = 0; a2 < 2; ++a2)
            for (int l2 = 0; l2 < 3; ++l2) {
              const double ref = k.variance * kt(w, w2) * ka(a, a2) * kl(l, l2);
              EXPECT_NEAR(cov((w * 2 + a) * 3 + l, (w2 * 2 + a2) * 3 + l2), ref, 1e-7);
            }
}

TEST(GaussianDenoiser, NoiseIsNegativeScaledScore) {
  // ε̂ = −σ ∇ log p(x_τ), p = N(αμ, α²Σ + σ²I), checked by finite differences.
  const auto s = make_cosine_schedule(500);
  const GaussianPrior prior = small_se_prior(7);
  const Eigen::MatrixXd cov = prior.covariance();
  const GaussianDenoiser d(prior);
  const int tau = 200;
  const double a = s.alpha(tau), sg = s.sigma(tau);
  const Eigen::Index n = cov.rows();
  const Eigen::MatrixXd m = a * a * cov + sg * sg * Eigen::MatrixXd::Identity(n, n);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  const Eigen::VectorXd mu = a * as_vector(prior.mean());
  auto log_p = [&](const Eigen::VectorXd& x) { return -0.5 * (x - mu).dot(ldlt.solve(x - mu)); };
  Rng rng(3, Stream::test);
  const Tensor x = rng.normal_tensor(prior.shape());
  const Eigen::VectorXd xv = as_vector(x);
  const Eigen::VectorXd eps = as_vector(d.predict_noise(x, tau, s));
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd xp = xv, xm = xv;
    xp(i) += h;
    xm(i) -= h;
    const double score = (log_p(xp) - log_p(xm)) / (2 * h);
    EXPECT_NEAR(eps(i), -sg * score, 1e-6);
  }
}

TEST(GaussianDenoiser, VjpMatchesFiniteDifferenceJacobian) {
  const auto s = make_cosine_schedule(500);
  const GaussianPrior prior = small_se_prior(4);
  const GaussianDenoiser d(prior);
  Rng rng(4, Stream::test);
  const Tensor x = rng.normal_tensor(prior.shape());
  const Tensor v = rng.normal_tensor(prior.shape());
  const int tau = 300;
  auto x0 = [&](const Tensor& xt) { return tweedie_estimate(xt, d.predict_noise(xt, tau, s), tau, s); };
  const Tensor jtv = d.tweedie_vjp(v, tau, s);
  const double h = 1e-5;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Tensor col = x0(xp) - x0(xm);
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dot += col[j] * v[j] / (2 * h);
    EXPECT_NEAR(jtv[i], dot, 1e-6);
  }
}

TEST(GaussianDenoiser, RejectsIndefiniteCovariance) {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(GaussianPrior::dense(Tensor({1, 1, 2}, 0.0), cov), InvalidInput);
}

TEST(GaussianDenoiser, JittersSingularCovariance) {
  const GaussianPrior p = GaussianPrior::dense(Tensor({1, 1, 2}, 0.0), Eigen::MatrixXd::Constant(2, 2, 1.0));
  EXPECT_GE(p.min_eigenvalue(), 1e-8 * 0.999);
}

TEST(Denoiser, DispatchChecksShape) {
  const auto s = make_cosine_schedule(10);
  const GaussianDenoiser d(small_se_prior(1));
  EXPECT_THROW(denoise(d, Tensor({2, 3, 5}), 5, s), InvalidInput);
  EXPECT_THROW(denoise(d, Tensor({2, 3, 4}), 11, s), InvalidInput);
  EXPECT_NO_THROW(denoise(d, Tensor({2, 3, 4}), 5, s));
}

TEST(LearnedDenoiser, ZeroParametersPredictZero) {
  const auto s = make_cosine_schedule(100);
  const LearnedDenoiser d({2, 4, 4}, 4, 8);
  EXPECT_EQ(d.vjp_mode(), VjpMode::identity);
  const Tensor eps = d.predict_noise(Tensor({2, 4, 4}, 0.3), 50, s);
  EXPECT_EQ(squared_norm(eps), 0.0);
  EXPECT_THROW(d.tweedie_vjp(Tensor({2, 4, 4}), 50, s), std::exception);
}

TEST(LearnedDenoiser, BucketsFollowNoiseLevel) {
  const auto s = make_cosine_schedule(500);
  const LearnedDenoiser d({1, 2, 2}, 2, 16);
  EXPECT_EQ(d.bucket(0, s), 0u);
  EXPECT_EQ(d.bucket(500, s), 15u);
  for (int t = 1; t <= 500; ++t) EXPECT_GE(d.bucket(t, s), d.bucket(t - 1, s));
}

TEST(LearnedDenoiser, GradientMatchesFiniteDifferences) {
  const auto s = make_cosine_schedule(100);
  Rng rng(5, Stream::test);
  const Shape shape{2, 5, 6};
  const LearnedDenoiser base = LearnedDenoiser::initialized(shape, 3, 4, Tensor(shape, 0.1), rng);
  const Tensor x = rng.normal_tensor(shape), eps = rng.normal_tensor(shape);
  const int tau = 40;
  std::vector<double> grad(base.parameters().size(), 0.0);
  base.accumulate_gradient(x, eps, tau, s, 1.0, grad);
  auto loss = [&](const LearnedDenoiser& m) {
    std::vector<double> scratch(m.parameters().size(), 0.0);
    return m.accumulate_gradient(x, eps, tau, s, 0.0, scratch);
  };
  const double h = 1e-6;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t i = rng.index(grad.size());
    LearnedDenoiser p = base, m = base;
    p.parameters()[i] += h;
    m.parameters()[i] -= h;
    const double fd = (loss(p) - loss(m)) / (2 * h);
    EXPECT_NEAR(grad[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "parameter " << i;
  }
}

class TrainedDenoiser : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    s_ = make_cosine_schedule(500);
    cfg_.steps = 300;
    cfg_.batch = 8;
    cfg_.features = 8;
    cfg_.buckets = 16;
    cfg_.validation_samples = 128;
    cfg_.seed = 3;
    for (std::uint64_t i = 0; i < 6; ++i) {
      PhantomParams p;
      p.grid = Grid::polar(16, 16);
      p.frames = 12;
      p.seed = 100 + i;
      p.amplitude = 0.1 + 0.05 * static_cast<double>(i);
      cfg_.dataset.push_back(generate_phantom(p).sequence);
    }
    result_ = train_epsilon_denoiser(cfg_, s_);
  }
  static inline DiffusionSchedule s_;
  static inline TrainConfig cfg_;
  static inline TrainResult result_;
};

TEST_F(TrainedDenoiser, PassesGateAndImproves) {
  EXPECT_LT(result_.validation_mse, cfg_.max_validation_mse);
  EXPECT_LT(result_.validation_mse, result_.initial_validation_mse);
  EXPECT_EQ(result_.loss_history.size(), cfg_.steps);
}

TEST_F(TrainedDenoiser, BeatsZeroPredictorAcrossNoiseLevels) {
  const auto stacks = window_stacks({cfg_.dataset.back()}, cfg_.window);
  const LearnedDenoiser zero(result_.model->stack_shape(), cfg_.features, cfg_.buckets);
  for (double frac : {0.1, 0.5, 0.9}) {
    const int tau = static_cast<int>(std::lround(frac * s_.tau_max));
    const double trained = epsilon_mse(*result_.model, stacks, s_, 1, 64, tau);
    const double baseline = epsilon_mse(zero, stacks, s_, 1, 64, tau);
    EXPECT_LT(trained, baseline) << "tau " << tau;
  }
}

TEST_F(TrainedDenoiser, TrainingIsDeterministic) {
  TrainConfig c = cfg_;
  c.steps = 20;
  EXPECT_EQ(train_epsilon_denoiser(c, s_).model->parameters(),
            train_epsilon_denoiser(c, s_).model->parameters());
}

TEST_F(TrainedDenoiser, CheckpointRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "ulsa_unit_ckpt";
  std::filesystem::remove_all(dir);
  save_checkpoint(*result_.model, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest"));
  const auto back = load_checkpoint(dir);
  EXPECT_EQ(back->parameters(), result_.model->parameters());
  EXPECT_EQ(back->stack_shape(), result_.model->stack_shape());
  std::filesystem::remove(dir / "conv2.weight.ulsa");
  EXPECT_THROW(load_checkpoint(dir), IoError);
}

TEST_F(TrainedDenoiser, QualificationGate) {
  TrainConfig c = cfg_;
  c.steps = 2;
  c.max_validation_mse = 1e-9;
  EXPECT_THROW(train_epsilon_denoiser(c, s_), QualificationFailure);
  c.dataset.clear();
  EXPECT_THROW(train_epsilon_denoiser(c, s_), InvalidInput);
}
