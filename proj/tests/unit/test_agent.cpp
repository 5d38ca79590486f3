#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "ulsa/agent.hpp"
#include "ulsa/errors.hpp"
#include "ulsa/random.hpp"

using namespace ulsa;

namespace {

struct Fixture {
  DiffusionSchedule s = make_cosine_schedule(200);
  Phantom ph;
  std::shared_ptr<GaussianDenoiser> d;

  explicit Fixture(std::size_t frames = 4, Grid grid = Grid::polar(12, 12), double speckle = 0.6) {
    PhantomParams p;
    p.speckle = speckle;
    p.grid = grid;
    p.frames = frames;
    p.seed = 5;
    ph = generate_phantom(p);
    const Tensor m = phantom_population_mean(grid, 3, 1, 8);
    d = std::make_shared<GaussianDenoiser>(
        GaussianPrior::squared_exponential(stack(std::vector<Tensor>(3, m)), SeKernel{}));
  }

  EpisodeConfig config(PolicyKind kind, std::size_t k) const {
    EpisodeConfig c;
    c.policy.kind = kind;
    c.policy.lines_per_frame = k;
    c.guidance.tau_init = 200;
    c.guidance.tau_seqdiff = 180;
    c.guidance.first_frame_steps = 40;
    c.guidance.seqdiff_steps = 10;
    c.particles = 3;
    c.seed = 2;
    return c;
  }

  EpisodeResult run(const EpisodeConfig& c) const { return run_episode(ph.sequence, *d, s, c, &ph.labels); }
};

}  // namespace

TEST(Agent, SingleFrameEpisode) {
  const Fixture f(1);
  const EpisodeResult r = f.run(f.config(PolicyKind::active, 3));
  ASSERT_EQ(r.log.frames.size(), 1u);
  EXPECT_EQ(r.reconstructions.size(), 1u);
  EXPECT_EQ(r.log.frames[0].t, 1u);
  EXPECT_EQ(r.log.frames[0].lines.size(), 3u);
  EXPECT_TRUE(std::isfinite(r.log.frames[0].psnr_db));
  EXPECT_TRUE(std::isfinite(r.log.frames[0].gcnr));
}

TEST(Agent, FullAcquisitionIsPolicyIndependent) {
  const Fixture f(3);
  const EpisodeResult a = f.run(f.config(PolicyKind::active, 12));
  const EpisodeResult e = f.run(f.config(PolicyKind::equispaced, 12));
  const EpisodeResult r = f.run(f.config(PolicyKind::random, 12));
  EXPECT_LT(max_abs_diff(a.reconstructions.frames(), e.reconstructions.frames()), 1e-12);
  EXPECT_LT(max_abs_diff(a.reconstructions.frames(), r.reconstructions.frames()), 1e-12);
}

namespace {

std::vector<double> measured_rmse(const Fixture& f, double gamma) {
  EpisodeConfig c = f.config(PolicyKind::equispaced, 4);
  c.guidance.gamma = gamma;
  c.guidance.first_frame_steps = 200;
  c.guidance.seqdiff_steps = 50;
  const EpisodeResult r = f.run(c);
  const auto space = make_line_action_space(f.ph.sequence.grid());
  std::vector<double> out;
  for (std::size_t t = 0; t < r.log.frames.size(); ++t) {
    const Tensor rec = r.reconstructions.frame(t), truth = f.ph.sequence.frame(t);
    double sq = 0.0, n = 0.0;
    for (auto l : r.log.frames[t].lines) {
      for (auto i : space.line(l)) {
        sq += (rec[i] - truth[i]) * (rec[i] - truth[i]);
        n += 1.0;
      }
    }
    out.push_back(std::sqrt(sq / n));
  }
  return out;
}

}  // namespace

TEST(Agent, HighGammaTightensPhantomFit) {
  const Fixture f(3);
  const auto tight = measured_rmse(f, 100.0);
  const auto loose = measured_rmse(f, 1.0);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_LT(tight[t], loose[t]) << "frame " << t + 1;
}

TEST(Agent, HighGammaMatchesMeasuredLinesOnPriorData) {
  // Source frames drawn from the kernel prior, AR(1) in time with the
  // kernel's one-frame correlation.
  const Grid g = Grid::polar(12, 12);
  const SeKernel k;
  const GaussianPrior frame_prior = GaussianPrior::squared_exponential(Tensor({1, 12, 12}, 0.0), k);
  const Eigen::LLT<Eigen::MatrixXd> llt(frame_prior.covariance());
  const double rho = std::exp(-0.5 / (k.temporal * k.temporal));
  Rng rng(12, Stream::test);
  const std::size_t T = 3;
  Tensor frames({T, 12, 12});
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(144);
  for (std::size_t t = 0; t < T; ++t) {
    Eigen::VectorXd z(144);
    for (auto& v : z) v = rng.normal();
    const Eigen::VectorXd draw = llt.matrixL() * z;
    const Eigen::VectorXd x = t == 0 ? draw : Eigen::VectorXd(rho * prev + std::sqrt(1 - rho * rho) * draw);
    for (std::size_t i = 0; i < 144; ++i) frames[t * 144 + i] = std::clamp(x(static_cast<Eigen::Index>(i)), -1.0, 1.0);
    prev = x;
  }
  const FrameSequence src(g, frames);
  const GaussianDenoiser d(GaussianPrior::squared_exponential(Tensor({3, 12, 12}, 0.0), k));
  const auto s = make_cosine_schedule(200);
  EpisodeConfig c;
  c.policy.kind = PolicyKind::equispaced;
  c.policy.lines_per_frame = 4;
  c.guidance.gamma = 100.0;
  c.guidance.tau_init = 200;
  c.guidance.tau_seqdiff = 180;
  c.guidance.first_frame_steps = 200;
  c.guidance.seqdiff_steps = 50;
  c.particles = 3;
  const EpisodeResult r = run_episode(src, d, s, c);
  const auto space = make_line_action_space(g);
  for (std::size_t t = 0; t < T; ++t) {
    const Tensor rec = r.reconstructions.frame(t), truth = src.frame(t);
    double worst = 0.0;
    for (auto l : r.log.frames[t].lines)
      for (auto i : space.line(l)) worst = std::max(worst, std::abs(rec[i] - truth[i]));
    EXPECT_LT(worst, 0.1) << "frame " << t + 1;
  }
}

TEST(Agent, Reproducible) {
  const Fixture f(3);
  const EpisodeConfig c = f.config(PolicyKind::active, 3);
  const EpisodeResult a = f.run(c), b = f.run(c);
  EXPECT_EQ(a.reconstructions.frames(), b.reconstructions.frames());
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(a.log.frames[t].lines, b.log.frames[t].lines);
}

TEST(Agent, ActiveAndRandomShareFirstAction) {
  const Fixture f(2);
  const EpisodeResult a = f.run(f.config(PolicyKind::active, 3));
  const EpisodeResult r = f.run(f.config(PolicyKind::random, 3));
  EXPECT_EQ(a.log.frames[0].lines, r.log.frames[0].lines);
  EXPECT_EQ(a.reconstructions.frame(0), r.reconstructions.frame(0));
}

TEST(Agent, FrameLimitBeliefsAndLabels) {
  const Fixture f(5);
  EpisodeConfig c = f.config(PolicyKind::equispaced, 2);
  c.frame_limit = 2;
  c.keep_beliefs = true;
  const EpisodeResult r = f.run(c);
  EXPECT_EQ(r.log.frames.size(), 2u);
  ASSERT_EQ(r.beliefs.size(), 2u);
  EXPECT_EQ(r.beliefs[0].shape(), (Shape{3, 12, 12}));
  const EpisodeResult nolabels = run_episode(f.ph.sequence, *f.d, f.s, c);
  EXPECT_TRUE(std::isnan(nolabels.log.frames[0].gcnr));
  EXPECT_EQ(r.log.frames[1].lines, (std::vector<std::size_t>{1, 7}));
}

TEST(Agent, RejectsInconsistentConfig) {
  const Fixture f(2);
  EpisodeConfig c = f.config(PolicyKind::active, 13);
  EXPECT_THROW(f.run(c), InvalidInput);
  c = f.config(PolicyKind::active, 2);
  c.window = 2;
  EXPECT_THROW(f.run(c), InvalidInput);
  c = f.config(PolicyKind::active, 2);
  c.particles = 0;
  EXPECT_THROW(f.run(c), InvalidInput);
}

TEST(Agent, InitialActions) {
  PolicyConfig p;
  p.kind = PolicyKind::equispaced;
  p.lines_per_frame = 2;
  EXPECT_EQ(initial_or_baseline_actions(p, 8, 1).lines(), (std::vector<std::size_t>{0, 4}));
  p.kind = PolicyKind::active;
  p.seed = 9;
  EXPECT_EQ(initial_or_baseline_actions(p, 8, 1), random_policy(8, 2, 9, 1));
}

TEST(Agent, VolumeEpisodeSelectsPlanes) {
  const Grid g = Grid::volume(8, 6, 8);
  const Fixture f(2, g);
  EpisodeConfig c = f.config(PolicyKind::active, 2);
  const EpisodeResult r = f.run(c);
  ASSERT_EQ(r.log.frames.size(), 2u);
  for (const auto& fr : r.log.frames) {
    EXPECT_EQ(fr.lines.size(), 2u);
    for (auto l : fr.lines) EXPECT_LT(l, 6u);
  }
  Tensor h(g.frame_shape(), 0.0);
  for (std::size_t ax = 0; ax < 8; ++ax)
    for (std::size_t lat = 0; lat < 8; ++lat) h[(ax * 6 + 4) * 8 + lat] = 1.0;
  const auto scores = action_scores(h, make_line_action_space(g));
  ASSERT_EQ(scores.size(), 6u);
  EXPECT_EQ(std::max_element(scores.begin(), scores.end()) - scores.begin(), 4);
}
