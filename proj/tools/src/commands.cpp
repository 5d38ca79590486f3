#include "commands.hpp"

#include <sys/utsname.h>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "ulsa/agent.hpp"
#include "ulsa/errors.hpp"
#include "ulsa/learned_denoiser.hpp"
#include "ulsa/phantom.hpp"
#include "ulsa/random.hpp"
#include "ulsa/ulsa_io.hpp"

namespace ulsa::cli {
namespace fs = std::filesystem;

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory", dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing", path.string());
  os << text;
  if (!os) throw IoError("write failed", path.string());
}

namespace {

fs::path sequence_path(const std::string& input) {
  const fs::path p(input);
  if (fs::is_directory(p)) return p / "seq.ulsa";
  return p;
}

Grid grid_template(const std::string& kind) {
  Grid g;
  g.kind = grid_kind_from_string(kind);
  if (g.is_3d()) g.n_el = 2;
  return g;
}

struct Source {
  FrameSequence sequence;
  std::optional<LabelSequence> labels;
  fs::path labels_path;
};

Source load_source(const RunOptions& o) {
  Source src;
  const fs::path seq = sequence_path(o.input);
  if (!fs::exists(seq)) throw IoError("input sequence not found", seq.string());
  if (o.grid == "auto") {
    src.sequence = read_sequence(seq);
  } else {
    const Grid tmpl = grid_template(o.grid);
    src.sequence = read_sequence(seq, &tmpl);
  }
  fs::path labels;
  if (o.labels.empty()) {
    const fs::path sibling = seq.parent_path() / "labels.ulsa";
    if (fs::exists(sibling)) labels = sibling;
  } else if (o.labels != "none") {
    labels = o.labels;
    if (!fs::exists(labels)) throw IoError("labels not found", labels.string());
  }
  if (!labels.empty()) {
    const Grid g = src.sequence.grid();
    LabelSequence l = read_labels(labels, &g);
    ULSA_REQUIRE(l.grid == g && l.frames >= src.sequence.size(),
                 "labels " + labels.string() + " do not match the input sequence");
    src.labels = std::move(l);
    src.labels_path = labels;
  }
  return src;
}

Shape stack_shape_for(const Grid& g, std::size_t window) {
  Shape s{window};
  for (auto n : g.frame_shape()) s.push_back(n);
  return s;
}

std::shared_ptr<Denoiser> make_denoiser(const RunOptions& o, const Grid& grid) {
  const Shape shape = stack_shape_for(grid, o.window);
  if (o.denoiser == "gaussian") {
    ULSA_REQUIRE(o.prior_phantoms >= 1, "--prior-phantoms must be >= 1");
    const Tensor frame_mean = phantom_population_mean(grid, o.prior_phantoms, o.seed);
    Tensor mean = stack(std::vector<Tensor>(o.window, frame_mean));
    return std::make_shared<GaussianDenoiser>(GaussianPrior::squared_exponential(mean, SeKernel{}));
  }
  fs::path dir(o.denoiser);
  if (fs::is_directory(dir / "checkpoint")) dir /= "checkpoint";
  if (!fs::exists(dir / "manifest")) {
    throw IoError("denoiser must be 'gaussian' or a checkpoint directory", dir.string());
  }
  auto model = load_checkpoint(dir);
  ULSA_REQUIRE(model->stack_shape() == shape,
               "checkpoint expects stacks " + shape_string(model->stack_shape()) +
                   " but --window and the input give " + shape_string(shape));
  return model;
}

EpisodeConfig make_episode_config(const RunOptions& o, bool learned) {
  EpisodeConfig cfg;
  cfg.policy.kind = policy_kind_from_string(o.policy);
  cfg.policy.lines_per_frame = o.lines_per_frame;
  cfg.policy.sigma_x2 = o.sigma_x2;
  if (o.rbf_width != "auto") {
    double w = 0.0;
    try {
      std::size_t used = 0;
      w = std::stod(o.rbf_width, &used);
      if (used != o.rbf_width.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InvalidInput("--rbf-width must be 'auto' or a positive number, got '" +
                         o.rbf_width + "'");
    }
    ULSA_REQUIRE(w > 0.0, "--rbf-width must be positive");
    cfg.policy.rbf_width = w;
  }
  cfg.policy.seed = o.seed;
  cfg.guidance.gamma = o.gamma;
  cfg.guidance.tau_init = o.tau_max;
  cfg.guidance.tau_seqdiff = o.tau_seqdiff;
  cfg.guidance.seqdiff_steps = o.steps;
  cfg.guidance.first_frame_steps = o.first_frame_steps;
  if (o.clip_denoised == "auto") {
    cfg.guidance.clip_denoised = learned;
  } else if (o.clip_denoised == "on" || o.clip_denoised == "off") {
    cfg.guidance.clip_denoised = o.clip_denoised == "on";
  } else {
    throw InvalidInput("--clip-denoised must be auto, on or off");
  }
  if (o.reconstruct == "first") {
    cfg.reconstruct = ReconstructMode::first_particle;
  } else if (o.reconstruct == "mean") {
    cfg.reconstruct = ReconstructMode::mean;
  } else {
    throw InvalidInput("--reconstruct must be first or mean");
  }
  cfg.window = o.window;
  cfg.particles = o.particles;
  cfg.seed = o.seed;
  cfg.frame_limit = o.frames;
  cfg.seqdiff = !o.no_seqdiff;
  return cfg;
}

void check_run_options(const RunOptions& o) {
  ULSA_REQUIRE(o.tau_max >= 1, "--tau-max must be >= 1");
  ULSA_REQUIRE(o.tau_seqdiff >= 1 && o.tau_seqdiff <= o.tau_max,
               "--tau-seqdiff must lie in [1, --tau-max]");
  ULSA_REQUIRE(o.steps >= 1, "--steps must be >= 1");
  ULSA_REQUIRE(o.particles >= 1, "--particles must be >= 1");
  ULSA_REQUIRE(o.window >= 1, "--window must be >= 1");
  ULSA_REQUIRE(o.lines_per_frame >= 1, "--lines-per-frame must be >= 1");
}

template <class F>
double ms_per_call(F&& fn, double min_total_ms = 40.0, std::size_t min_reps = 3) {
  using clock = std::chrono::steady_clock;
  std::size_t reps = 0;
  const auto start = clock::now();
  double total = 0.0;
  while (reps < min_reps || total < min_total_ms) {
    fn();
    ++reps;
    total = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  }
  return total / static_cast<double>(reps);
}

std::string environment_description() {
  std::ostringstream os;
  utsname u{};
  if (uname(&u) == 0) os << u.sysname << ' ' << u.release << ' ' << u.machine << "; ";
  os << "threads " << std::thread::hardware_concurrency() << "; ";
#ifdef __VERSION__
  os << "compiler " << __VERSION__ << "; ";
#endif
  os << "eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION
     << "; build " << ULSA_BUILD_TYPE;
  return os.str();
}

}  // namespace

std::vector<fs::path> cmd_phantom(const PhantomOptions& o, Json& manifest, std::ostream& out) {
  ULSA_REQUIRE(o.frames >= 1, "--frames must be >= 1");
  ULSA_REQUIRE(o.size >= 1, "--size must be >= 1");
  ULSA_REQUIRE(!o.out.empty(), "--out is required");
  PhantomParams p;
  const GridKind kind = grid_kind_from_string(o.grid);
  p.grid = kind == GridKind::polar3d ? Grid::volume(o.size, o.elevation, o.size)
           : kind == GridKind::cartesian2d ? Grid::cartesian(o.size, o.size)
                                            : Grid::polar(o.size, o.size);
  p.frames = o.frames;
  p.period = o.period;
  p.amplitude = o.amplitude;
  p.speckle = o.speckle;
  p.inner_radius = o.inner;
  p.outer_radius = o.outer;
  p.seed = o.seed;
  const Phantom ph = generate_phantom(p);

  const fs::path dir(o.out);
  ensure_directory(dir);
  write_sequence(dir / "seq.ulsa", ph.sequence);
  write_labels(dir / "labels.ulsa", ph.labels);
  manifest["shape"] = ph.sequence.frames().shape();
  out << "phantom: " << ph.sequence.size() << " frames " << shape_string(p.grid.frame_shape())
      << " -> " << dir.string() << '\n';
  return {dir / "seq.ulsa", dir / "labels.ulsa"};
}

std::vector<fs::path> cmd_run(const RunOptions& o, Json& manifest, std::ostream& out) {
  check_run_options(o);
  ULSA_REQUIRE(!o.input.empty(), "--input is required");
  ULSA_REQUIRE(!o.out.empty(), "--out is required");
  const Source src = load_source(o);
  const Grid& grid = src.sequence.grid();
  const auto s = make_cosine_schedule(o.tau_max);
  const auto denoiser = make_denoiser(o, grid);
  EpisodeConfig cfg = make_episode_config(o, denoiser->vjp_mode() == VjpMode::identity);
  DpsDiagnostics diag;
  if (o.debug_residuals) cfg.diagnostics = &diag;
  cfg.validate(grid, s);

  const EpisodeResult r =
      run_episode(src.sequence, *denoiser, s, cfg, src.labels ? &*src.labels : nullptr);

  const fs::path dir(o.out);
  ensure_directory(dir);
  std::vector<fs::path> written{dir / "recon.ulsa", dir / "log.csv", dir / "summary.csv"};
  write_sequence(written[0], r.reconstructions);
  std::ostringstream log, summary;
  r.log.write_csv(log, o.log_timing);
  write_text(written[1], log.str());
  auto rows = episode_report({r.log});
  if (!o.log_timing) {
    for (auto& row : rows) row.perception_ms_mean = row.action_ms_mean = kMissing;
  }
  write_summary_csv(summary, rows);
  write_text(written[2], summary.str());
  if (o.debug_residuals) {
    std::ostringstream res;
    diag.write_csv(res);
    written.push_back(dir / "residuals.csv");
    write_text(written.back(), res.str());
  }
  manifest["denoiser_kind"] = denoiser->name();
  manifest["labels_path"] = src.labels ? src.labels_path.string() : "";
  manifest["rbf_width_resolved"] = cfg.policy.resolved_width(grid.line_count());
  manifest["clip_denoised_resolved"] = cfg.guidance.clip_denoised;
  manifest["frames_processed"] = r.log.frames.size();
  out << "run: " << r.log.frames.size() << " frames, policy " << o.policy << ", K "
      << o.lines_per_frame << ", mean PSNR " << csv_number(r.log.mean_psnr(), 3) << " dB\n";
  return written;
}

std::vector<fs::path> cmd_bench(const RunOptions& o, Json& manifest, std::ostream& out) {
  check_run_options(o);
  Source src;
  if (o.input.empty()) {
    PhantomParams p;
    p.grid = Grid::polar(o.size, o.size);
    p.frames = std::max<std::size_t>(o.frames, 1);
    p.seed = o.seed;
    Phantom ph = generate_phantom(p);
    src.sequence = std::move(ph.sequence);
    src.labels = std::move(ph.labels);
  } else {
    src = load_source(o);
  }
  const Grid& grid = src.sequence.grid();
  const auto s = make_cosine_schedule(o.tau_max);
  const auto denoiser = make_denoiser(o, grid);
  EpisodeConfig cfg = make_episode_config(o, denoiser->vjp_mode() == VjpMode::identity);
  cfg.keep_beliefs = true;
  cfg.validate(grid, s);
  ULSA_REQUIRE(o.particles >= 2, "bench: --particles must be >= 2");

  const EpisodeResult r =
      run_episode(src.sequence, *denoiser, s, cfg, src.labels ? &*src.labels : nullptr);
  const std::size_t n_frames = r.log.frames.size();
  double perception = 0.0, action = 0.0;
  // Frame 1 runs the long first-frame schedule; steady state starts at frame 2.
  const std::size_t first = n_frames > 1 ? 1 : 0;
  for (std::size_t i = first; i < n_frames; ++i) {
    perception += r.log.frames[i].perception_ms;
    action += r.log.frames[i].action_ms;
  }
  const double counted = static_cast<double>(n_frames - first);
  perception /= counted;
  action /= counted;

  // Stage micro-timings on a representative state.
  const LineActionSpace space = make_line_action_space(grid);
  const ActionSet acts = equispaced_policy(1, space.size(), o.lines_per_frame);
  MeasurementBuffer buf(o.window);
  buf = push(buf, acquire(src.sequence, 0, acts, space), mask_from_actions(acts, space));
  const Tensor y = buf.y_stack();
  const Mask a = buf.m_stack();
  const Shape shape = stack_shape_for(grid, o.window);
  Rng rng(o.seed, Stream::test);
  const Tensor x = rng.normal_tensor(shape);
  const int tau = o.tau_seqdiff;
  const Tensor eps = denoise(*denoiser, x, tau, s);
  const Tensor x0 = tweedie_estimate(x, eps, tau, s);
  const Tensor& beliefs = r.beliefs.back();
  const Tensor h = entropy_map(beliefs, o.sigma_x2);
  const auto scores = action_scores(h, space);
  const double width = cfg.policy.resolved_width(space.size());

  const double t_denoise = ms_per_call([&] { (void)denoise(*denoiser, x, tau, s); });
  const double t_guidance =
      ms_per_call([&] { (void)likelihood_gradient(x0, y, a, *denoiser, cfg.guidance, tau, s); });
  const double t_entropy = ms_per_call([&] { (void)entropy_map(beliefs, o.sigma_x2); });
  const double t_greedy =
      ms_per_call([&] { (void)k_greedy_select(scores, o.lines_per_frame, width); });

  const std::size_t evals = o.steps * o.particles;
  const double fps = 1000.0 / (perception + action);

  // Entropy-map scaling when N_p doubles.
  const std::size_t np = o.particles;
  const Tensor small = rng.normal_tensor([&] { Shape sh{np}; for (auto n : grid.frame_shape()) sh.push_back(n); return sh; }());
  const Tensor large = rng.normal_tensor([&] { Shape sh{2 * np}; for (auto n : grid.frame_shape()) sh.push_back(n); return sh; }());
  const double t_small = ms_per_call([&] { (void)entropy_map(small, o.sigma_x2); }, 100.0);
  const double t_large = ms_per_call([&] { (void)entropy_map(large, o.sigma_x2); }, 100.0);
  const double ratio = t_large / t_small;

  std::ostringstream table;
  table << std::fixed << std::setprecision(4);
  table << "stage,calls_per_frame,ms_per_call,ms_per_frame\n";
  table << "denoiser_eval," << evals << ',' << t_denoise << ',' << t_denoise * static_cast<double>(evals) << '\n';
  table << "guidance," << evals << ',' << t_guidance << ',' << t_guidance * static_cast<double>(evals) << '\n';
  table << "entropy_map,1," << t_entropy << ',' << t_entropy << '\n';
  table << "k_greedy,1," << t_greedy << ',' << t_greedy << '\n';
  table << "perception_total,1," << perception << ',' << perception << '\n';
  table << "action_total,1," << action << ',' << action << '\n';
  table << "frame_total,1," << perception + action << ',' << perception + action << '\n';

  out << table.str();
  out << std::fixed << std::setprecision(3);
  out << "frames_per_second," << fps << '\n';
  out << "entropy_map_scaling,N_p=" << np << ':' << t_small << "ms,N_p=" << 2 * np << ':'
      << t_large << "ms,ratio=" << ratio << '\n';
  out << "environment," << environment_description() << '\n';

  manifest["frames_per_second"] = fps;
  manifest["entropy_scaling_ratio"] = ratio;
  manifest["environment"] = environment_description();
  if (o.out.empty()) return {};
  const fs::path dir(o.out);
  ensure_directory(dir);
  write_text(dir / "bench.csv", table.str());
  return {dir / "bench.csv"};
}

std::vector<fs::path> cmd_train(const TrainOptions& o, Json& manifest, std::ostream& out) {
  ULSA_REQUIRE(!o.out.empty(), "--out is required");
  TrainConfig cfg;
  for (const auto& in : o.input) {
    const fs::path p = sequence_path(in);
    if (!fs::exists(p)) throw IoError("training sequence not found", p.string());
    cfg.dataset.push_back(read_sequence(p));
  }
  if (o.phantoms > 0) {
    Rng amp(o.seed, Stream::phantom, {0x7a});
    for (std::size_t i = 0; i < o.phantoms; ++i) {
      PhantomParams p;
      p.grid = Grid::polar(o.size, o.size);
      p.frames = o.frames;
      p.amplitude = 0.05 + 0.35 * amp.uniform();
      p.seed = derive_seed(o.seed, Stream::phantom, {i});
      cfg.dataset.push_back(generate_phantom(p).sequence);
    }
  }
  ULSA_REQUIRE(!cfg.dataset.empty(), "empty dataset: give --input sequences or --phantoms N");
  cfg.window = o.window;
  cfg.steps = o.steps;
  cfg.batch = o.batch;
  cfg.learning_rate = o.lr;
  cfg.seed = o.seed;
  cfg.features = o.features;
  cfg.buckets = o.buckets;
  cfg.validation_samples = o.validation_samples;
  cfg.max_validation_mse = o.max_validation_mse;
  const auto s = make_cosine_schedule(o.tau_max);
  out << "train: " << cfg.dataset.size() << " sequences, " << o.steps << " steps\n";
  const TrainResult r = train_epsilon_denoiser(cfg, s);
  out << "validation epsilon-MSE: initial " << r.initial_validation_mse << ", final "
      << r.validation_mse << '\n';
  const fs::path dir(o.out);
  ensure_directory(dir);
  save_checkpoint(*r.model, dir / "checkpoint");
  manifest["validation_mse"] = r.validation_mse;
  manifest["initial_validation_mse"] = r.initial_validation_mse;
  manifest["sequences"] = cfg.dataset.size();
  return {dir / "checkpoint"};
}

}  // namespace ulsa::cli
