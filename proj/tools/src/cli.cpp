#include "ulsa/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <variant>

#include "CLI11.hpp"
#include "commands.hpp"
#include "ulsa/errors.hpp"

namespace ulsa::cli {
namespace fs = std::filesystem;
namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seeds are bound as size_t flags");
using Target =
    std::variant<std::string*, std::size_t*, int*, double*, bool*, std::vector<std::string>*>;

struct Flag {
  std::string name;
  Target target;
  std::string help;
};

void register_flags(CLI::App* app, const std::vector<Flag>& flags) {
  for (const auto& f : flags) {
    const std::string opt = "--" + f.name;
    std::visit(
        [&](auto* p) {
          using T = std::remove_pointer_t<decltype(p)>;
          if constexpr (std::is_same_v<T, bool>) {
            app->add_flag(opt, *p, f.help);
          } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            app->add_option(opt, *p, f.help)->expected(1, -1);
          } else {
            app->add_option(opt, *p, f.help)->capture_default_str();
          }
        },
        f.target);
  }
}

Json flags_to_json(const std::vector<Flag>& flags) {
  Json j = Json::object();
  for (const auto& f : flags) std::visit([&](auto* p) { j[f.name] = *p; }, f.target);
  return j;
}

std::vector<std::string> json_to_argv(const std::string& command, const Json& config) {
  std::vector<std::string> argv{command};
  for (const auto& [key, value] : config.items()) {
    const std::string opt = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) argv.push_back(opt);
    } else if (value.is_array()) {
      if (value.empty()) continue;
      argv.push_back(opt);
      for (const auto& v : value) argv.push_back(v.get<std::string>());
    } else if (value.is_string()) {
      if (value.get<std::string>().empty()) continue;
      argv.push_back(opt);
      argv.push_back(value.get<std::string>());
    } else {
      argv.push_back(opt);
      argv.push_back(value.dump());
    }
  }
  return argv;
}

std::vector<Flag> phantom_flags(PhantomOptions& o) {
  return {
      {"frames", &o.frames, "Number of frames (>= 1)"},
      {"size", &o.size, "Axial and lateral pixel count"},
      {"seed", &o.seed, "Master seed"},
      {"period", &o.period, "Frames per beat"},
      {"amplitude", &o.amplitude, "Pulsation amplitude in [0, 0.5]"},
      {"speckle", &o.speckle, "Speckle weight in [0, 1]"},
      {"inner", &o.inner, "Inner (ventricle) radius, fraction of depth"},
      {"outer", &o.outer, "Outer (myocardium) radius, fraction of depth"},
      {"grid", &o.grid, "polar2d, cartesian2d or polar3d"},
      {"elevation", &o.elevation, "Elevation planes for polar3d"},
      {"out", &o.out, "Output directory"},
  };
}

std::vector<Flag> run_flags(RunOptions& o, bool bench) {
  std::vector<Flag> f{
      {"input", &o.input, bench ? "Input sequence (default: synthetic phantom)"
                                : "Input ULSA sequence or directory holding seq.ulsa"},
      {"labels", &o.labels, "Label container; default sibling labels.ulsa, 'none' disables"},
      {"grid", &o.grid, "auto, polar2d, cartesian2d or polar3d"},
      {"policy", &o.policy, "active, random or equispaced"},
      {"lines-per-frame", &o.lines_per_frame, "Lines acquired per frame (K)"},
      {"particles", &o.particles, "Posterior particles (N_p)"},
      {"window", &o.window, "Frames per stack (W)"},
      {"steps", &o.steps, "Reverse steps from tau-seqdiff"},
      {"first-frame-steps", &o.first_frame_steps, "Reverse steps for frame 1 (0 = every tau)"},
      {"tau-max", &o.tau_max, "Diffusion horizon"},
      {"tau-seqdiff", &o.tau_seqdiff, "Warm-start noise level"},
      {"gamma", &o.gamma, "Guidance weight"},
      {"sigma-x2", &o.sigma_x2, "Entropy kernel variance"},
      {"rbf-width", &o.rbf_width, "Line reweighting width, or auto = max(1, (L/4K)^2)"},
      {"seed", &o.seed, "Master seed"},
      {"denoiser", &o.denoiser, "'gaussian' or a checkpoint directory"},
      {"prior-phantoms", &o.prior_phantoms, "Phantoms averaged into the Gaussian prior mean"},
      {"clip-denoised", &o.clip_denoised, "auto, on or off"},
      {"reconstruct", &o.reconstruct, "first or mean"},
      {"frames", &o.frames, "Frame limit (0 = all)"},
      {"no-seqdiff", &o.no_seqdiff, "Restart every frame from noise"},
      {"log-timing", &o.log_timing, "Record wall times in log.csv"},
      {"debug-residuals", &o.debug_residuals, "Write per-step residuals.csv"},
      {"out", &o.out, "Output directory"},
  };
  if (bench) f.push_back({"size", &o.size, "Synthetic phantom size when --input is absent"});
  return f;
}

std::vector<Flag> train_flags(TrainOptions& o) {
  return {
      {"input", &o.input, "Training sequences (files or directories)"},
      {"phantoms", &o.phantoms, "Synthetic phantom sequences to add"},
      {"size", &o.size, "Synthetic phantom size"},
      {"frames", &o.frames, "Synthetic phantom length"},
      {"window", &o.window, "Frames per stack (W)"},
      {"steps", &o.steps, "Optimizer steps"},
      {"batch", &o.batch, "Stacks per step"},
      {"lr", &o.lr, "Adam learning rate"},
      {"features", &o.features, "Hidden channels"},
      {"buckets", &o.buckets, "Noise-level buckets"},
      {"validation-samples", &o.validation_samples, "Draws for the validation loss"},
      {"max-validation-mse", &o.max_validation_mse, "Qualification gate on validation eps-MSE"},
      {"tau-max", &o.tau_max, "Diffusion horizon"},
      {"seed", &o.seed, "Master seed"},
      {"out", &o.out, "Output directory"},
  };
}

void write_manifest(const std::string& command, const std::vector<Flag>& flags,
                    const std::vector<fs::path>& outputs, const Json& results,
                    const fs::path& dir) {
  Json m;
  m["tool"] = "ulsa";
  m["version"] = ULSA_VERSION;
  m["command"] = command;
  const Json config = flags_to_json(flags);
  m["config"] = config;
  m["argv"] = json_to_argv(command, config);
  std::vector<std::string> outs;
  for (const auto& p : outputs) outs.push_back(p.string());
  m["outputs"] = outs;
  m["results"] = results;
  write_text(dir / "manifest", m.dump(2) + "\n");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int rerun(const std::string& manifest_path, const std::string& out_override, std::ostream& out,
          std::ostream& err) {
  std::ifstream is(manifest_path);
  if (!is) throw IoError("cannot read manifest", manifest_path);
  Json m;
  try {
    m = Json::parse(is);
  } catch (const std::exception& e) {
    throw IoError(std::string("malformed manifest (") + e.what() + ")", manifest_path);
  }
  if (!m.contains("argv")) throw IoError("manifest has no argv", manifest_path);
  auto argv = m["argv"].get<std::vector<std::string>>();
  if (!out_override.empty()) {
    auto it = std::find(argv.begin(), argv.end(), "--out");
    if (it != argv.end() && it + 1 != argv.end()) {
      *(it + 1) = out_override;
    } else {
      argv.push_back("--out");
      argv.push_back(out_override);
    }
  }
  return dispatch(argv, out, err);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active line-subsampling with diffusion posterior sampling", "ulsa"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ULSA_VERSION);

  PhantomOptions phantom;
  RunOptions run;
  RunOptions bench;
  bench.frames = 8;
  bench.first_frame_steps = 100;
  TrainOptions train;
  std::string manifest_path, rerun_out;

  auto* c_phantom = app.add_subcommand("phantom", "Generate a pulsating-heart phantom");
  const auto f_phantom = phantom_flags(phantom);
  register_flags(c_phantom, f_phantom);
  auto* c_run = app.add_subcommand("run", "Run the perception-action loop on a sequence");
  const auto f_run = run_flags(run, false);
  register_flags(c_run, f_run);
  auto* c_bench = app.add_subcommand("bench", "Per-stage latency report");
  const auto f_bench = run_flags(bench, true);
  register_flags(c_bench, f_bench);
  auto* c_train = app.add_subcommand("train", "Train and qualify a learned denoiser");
  const auto f_train = train_flags(train);
  register_flags(c_train, f_train);
  auto* c_rerun = app.add_subcommand("rerun", "Repeat a command from its manifest");
  c_rerun->add_option("--manifest", manifest_path, "Manifest file")->required();
  c_rerun->add_option("--out", rerun_out, "Override the output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Json results = Json::object();
  if (c_phantom->parsed()) {
    const auto files = cmd_phantom(phantom, results, out);
    write_manifest("phantom", f_phantom, files, results, phantom.out);
  } else if (c_run->parsed()) {
    const auto files = cmd_run(run, results, out);
    write_manifest("run", f_run, files, results, run.out);
  } else if (c_bench->parsed()) {
    const auto files = cmd_bench(bench, results, out);
    if (!bench.out.empty()) write_manifest("bench", f_bench, files, results, bench.out);
  } else if (c_train->parsed()) {
    const auto files = cmd_train(train, results, out);
    write_manifest("train", f_train, files, results, train.out);
  } else if (c_rerun->parsed()) {
    return rerun(manifest_path, rerun_out, out, err);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const QualificationFailure& e) {
    err << "qualification failure: " << e.what() << " (measured " << e.measured() << ")\n";
    return kQualification;
  }
}

}  // namespace ulsa::cli
