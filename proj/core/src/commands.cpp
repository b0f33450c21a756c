#include "tiledit/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <utility>

#include "tiledit/adapter.hpp"
#include "tiledit/analytic.hpp"
#include "tiledit/codec.hpp"
#include "tiledit/conv_denoiser.hpp"
#include "tiledit/errors.hpp"
#include "tiledit/image_io.hpp"
#include "tiledit/inversion.hpp"
#include "tiledit/manifest.hpp"
#include "tiledit/nn.hpp"
#include "tiledit/rng.hpp"
#include "tiledit/sampler.hpp"
#include "tiledit/train.hpp"

namespace tiledit {

namespace {

constexpr const char* kAnalyticPrefix = "analytic:";

bool is_analytic(const std::string& locator) {
  return locator.rfind(kAnalyticPrefix, 0) == 0;
}

struct ResolvedBackend {
  std::shared_ptr<const NoiseEstimator> estimator;
  std::string locator;
};

// Backend grammar: "analytic:<world>" for the closed-form oracle, anything
// else is a model locator handed to the pretrained adapter (a local model
// directory written by train-toy). The estimator comes back bound to the
// requested schedule.
ResolvedBackend resolve_backend(const std::string& locator, const NoiseSchedule& schedule) {
  if (is_analytic(locator)) {
    GaussianMixtureWorld world =
        GaussianMixtureWorld::builtin(locator.substr(std::string(kAnalyticPrefix).size()));
    return {std::make_shared<AnalyticEstimator>(world, schedule), locator};
  }
  std::shared_ptr<const NoiseEstimator> wrapped = pretrained_adapter(locator);
  auto conv = std::dynamic_pointer_cast<const ConvDenoiser>(wrapped);
  if (!conv) {
    throw Error(ErrorCode::unsupported_backend,
                "locator '" + locator + "' is not a schedulable backend");
  }
  return {conv->with_schedule(schedule), locator};
}

// Resolve for a fresh inversion: analytic backends get the stock training
// schedule, model directories keep their trained betas; only the sample-step
// count is the caller's.
ResolvedBackend resolve_backend_for_steps(const std::string& locator, int steps) {
  if (steps < 1) {
    throw Error(ErrorCode::invalid_range, "--steps must be positive");
  }
  if (is_analytic(locator)) {
    return resolve_backend(locator,
                           NoiseSchedule::build(1000, steps, 1e-4, 2e-2, BetaSpacing::linear));
  }
  std::shared_ptr<const NoiseEstimator> wrapped = pretrained_adapter(locator);
  if (!wrapped->schedule().has_params()) {
    throw Error(ErrorCode::bad_format, "model at '" + locator + "' has no schedule parameters");
  }
  ScheduleParams p = wrapped->schedule().params();
  p.num_sample_steps = steps;
  auto conv = std::dynamic_pointer_cast<const ConvDenoiser>(wrapped);
  if (!conv) {
    throw Error(ErrorCode::unsupported_backend,
                "locator '" + locator + "' is not a schedulable backend");
  }
  return {conv->with_schedule(NoiseSchedule::build(p)), locator};
}

std::unique_ptr<LatentCodec> resolve_codec(const std::string& spec, int channels) {
  if (spec == "identity") {
    return std::make_unique<IdentityCodec>(channels);
  }
  if (spec.rfind("box", 0) == 0) {
    // Accept both spellings: "box:8" and "box8".
    std::string digits = spec.substr(spec[3] == ':' ? 4 : 3);
    int factor = 0;
    if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos) {
      factor = std::atoi(digits.c_str());
    }
    if (factor < 1) {
      throw Error(ErrorCode::invalid_factor, "bad codec factor in '" + spec + "'");
    }
    return std::make_unique<BoxCodec>(factor, channels);
  }
  throw Error(ErrorCode::unsupported_backend,
              "unknown codec '" + spec + "', expected identity or box:<factor>");
}

// PNGs are always RGB; pipelines whose worlds are single-channel take the
// channel mean. There is no sensible PNG mapping for 2-channel worlds.
Tensor adapt_channels(const Tensor& rgb, int want) {
  if (want == 3) return rgb;
  if (want == 1) {
    Tensor out(rgb.height(), rgb.width(), 1);
    for (int y = 0; y < rgb.height(); ++y) {
      for (int x = 0; x < rgb.width(); ++x) {
        out.at(y, x, 0) = (rgb.at(y, x, 0) + rgb.at(y, x, 1) + rgb.at(y, x, 2)) / 3.0f;
      }
    }
    return out;
  }
  throw Error(ErrorCode::unsupported_backend,
              "backend needs " + std::to_string(want) +
                  "-channel images; PNG input maps onto 1 or 3 channels");
}

Manifest base_run_manifest(const std::string& command) {
  Manifest m;
  m.set("command", command);
  m.set("tool.version", kToolVersion);
  return m;
}

void put_schedule(Manifest& m, const NoiseSchedule& s) {
  const ScheduleParams& p = s.params();
  m.set_int("schedule.num_train_steps", p.num_train_steps);
  m.set_int("schedule.num_sample_steps", p.num_sample_steps);
  m.set_double("schedule.beta_start", p.beta_start);
  m.set_double("schedule.beta_end", p.beta_end);
  m.set("schedule.spacing", to_string(p.spacing));
}

void put_plan(Manifest& m, const TilePlan& plan) {
  m.set_int("plan.canvas_height", plan.canvas_height);
  m.set_int("plan.canvas_width", plan.canvas_width);
  m.set_int("plan.tile_height", plan.tile_height);
  m.set_int("plan.tile_width", plan.tile_width);
  m.set_int("plan.latent_factor", plan.latent_factor);
  m.set_int("plan.tile_count", plan.tile_count());
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::io_failure, "cannot create '" + dir + "': " + ec.message());
  }
}

Conditioning make_conditioning(int target_class, const std::string& prompt) {
  if (!prompt.empty()) {
    throw Error(ErrorCode::unknown_conditioning,
                "prompt conditioning needs a text-encoder backend; toy backends take --class");
  }
  if (target_class < 0) {
    throw Error(ErrorCode::unknown_conditioning, "pass --class <index> to pick the edit target");
  }
  return Conditioning::for_class(target_class);
}

// Shared front half of edit/reconstruct/sweep: load the inverted latent and
// rebuild the backend+codec it was produced with, preferring explicit flags
// and falling back to the invert run manifest.
struct Pipeline {
  InvertedLatent inv;
  ResolvedBackend backend;
  std::unique_ptr<LatentCodec> codec;
  std::string codec_spec;
  std::string source_input;  // args.input of the invert run, when known
};

Pipeline load_pipeline(const std::string& inverted, std::string backend_flag,
                       std::string codec_flag) {
  Pipeline p;
  p.inv = InvertedLatent::load(inverted);
  std::string run_path = inverted + "/run.manifest";
  bool has_run = std::filesystem::exists(run_path);
  Manifest run;
  if (has_run) run = Manifest::load(run_path);
  if (backend_flag.empty()) {
    if (!has_run || !run.has("args.backend")) {
      throw Error(ErrorCode::input_not_found,
                  "--backend not given and '" + run_path + "' does not record one");
    }
    backend_flag = run.get("args.backend");
  }
  if (codec_flag.empty()) {
    codec_flag = has_run ? run.get_or("args.codec", "identity") : "identity";
  }
  if (has_run) p.source_input = run.get_or("args.input", "");

  p.backend = resolve_backend(backend_flag, p.inv.schedule);
  if (p.backend.estimator->id() != p.inv.backend_id) {
    throw Error(ErrorCode::unsupported_backend,
                "backend '" + backend_flag + "' resolves to '" + p.backend.estimator->id() +
                    "' but the latent was inverted with '" + p.inv.backend_id + "'");
  }
  p.codec = resolve_codec(codec_flag, p.backend.estimator->channels());
  if (p.codec->spatial_factor() != p.inv.plan.latent_factor) {
    throw Error(ErrorCode::unsupported_backend,
                "codec '" + codec_flag + "' has spatial factor " +
                    std::to_string(p.codec->spatial_factor()) + " but the latent used " +
                    std::to_string(p.inv.plan.latent_factor));
  }
  p.codec_spec = codec_flag;
  return p;
}

// Canvas-over-base scale per side; drives the tau and dilation defaults.
int scale_ratio(const InvertedLatent& inv, const NoiseEstimator& est) {
  int lh = inv.plan.canvas_height / inv.plan.latent_factor;
  int lw = inv.plan.canvas_width / inv.plan.latent_factor;
  int rh = std::max(1, lh / est.base_height());
  int rw = std::max(1, lw / est.base_width());
  return std::max(rh, rw);
}

int default_tau(int ratio, int num_steps) {
  int tau = ratio <= 4 ? 10 : 37;
  return std::min(tau, num_steps);
}

// Per-panel min-max normalization so residual magnitudes are visible
// regardless of scale.
Tensor normalize_panel(const Tensor& t) {
  float lo = t.values().empty() ? 0.0f : t.values()[0];
  float hi = lo;
  for (float v : t.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Tensor out(t.height(), t.width(), t.channels());
  float span = hi - lo;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.data()[i] = span > 0.0f ? (t.data()[i] - lo) / span : 0.5f;
  }
  return out;
}

void blit(Tensor& canvas, const Tensor& tile, int y0, int x0) {
  for (int y = 0; y < tile.height(); ++y) {
    for (int x = 0; x < tile.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        canvas.at(y0 + y, x0 + x, c) = tile.at(y, x, c);
      }
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

int cmd_invert(const InvertOptions& o) {
  Tensor rgb = read_png(o.input);
  ResolvedBackend backend = resolve_backend_for_steps(o.backend, o.steps);
  std::unique_ptr<LatentCodec> codec = resolve_codec(o.codec, backend.estimator->channels());
  Tensor image = adapt_channels(rgb, codec->pixel_channels());

  int tile_h = o.tile_size > 0 ? o.tile_size : image.height();
  int tile_w = o.tile_size > 0 ? o.tile_size : image.width();
  TilePlan plan = plan_tiles(image.height(), image.width(), tile_h, tile_w,
                             codec->spatial_factor());

  InvertedLatent inv = tiled_ddim_invert(image, plan, backend.estimator->schedule(),
                                         *backend.estimator, *codec, o.cache_eps, o.seed);
  ensure_dir(o.out);
  inv.save(o.out);

  Manifest m = base_run_manifest("invert");
  put_schedule(m, inv.schedule);
  put_plan(m, plan);
  m.set("backend.id", backend.estimator->id());
  m.set("codec.id", codec->id());
  m.set_u64("seed", o.seed);
  m.set("args.input", o.input);
  m.set("args.out", o.out);
  m.set("args.backend", o.backend);
  m.set("args.codec", o.codec);
  m.set_int("args.tile-size", o.tile_size);
  m.set_int("args.steps", o.steps);
  m.set_bool("args.cache-eps", o.cache_eps);
  m.set_u64("args.seed", o.seed);
  m.save(o.out + "/run.manifest");
  return 0;
}

int cmd_edit(const EditOptions& o) {
  Pipeline p = load_pipeline(o.inverted, o.backend, o.codec);
  int T = p.inv.schedule.num_steps();
  int ratio = scale_ratio(p.inv, *p.backend.estimator);

  GuidanceConfig cfg;
  cfg.mode = guidance_mode_from_string(o.mode);
  cfg.scale = o.lambda_scale;
  cfg.tau = o.tau >= 0 ? o.tau : default_tau(ratio, T);
  cfg.dilation_factor = o.dilation_factor > 0 ? o.dilation_factor : ratio;
  cfg.vanilla_eval = vanilla_eval_from_string(o.vanilla_eval);
  if (o.preview_every < 1) {
    throw Error(ErrorCode::invalid_range, "--preview-every must be positive");
  }

  Conditioning cond = make_conditioning(o.target_class, o.prompt);
  std::shared_ptr<const NoiseEstimator> dilated;
  if (!o.dilation_profile.empty()) {
    std::ifstream in(o.dilation_profile);
    if (!in) {
      throw Error(ErrorCode::input_not_found, "cannot read '" + o.dilation_profile + "'");
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    dilated = redilate(p.backend.estimator, cfg.dilation_factor, DilationProfile::parse(text));
  } else {
    dilated = redilate(p.backend.estimator, cfg.dilation_factor);
  }

  auto [pixels, rec] = edit(p.inv, cond, cfg, *p.backend.estimator, *dilated, p.inv.schedule,
                            *p.codec, o.record, o.preview_every);
  write_png(o.out, to_rgb(pixels));
  std::string record_dir = o.record_dir.empty() ? o.out + ".trajectory" : o.record_dir;
  if (o.record) rec.save(record_dir);

  Manifest m = base_run_manifest("edit");
  put_schedule(m, p.inv.schedule);
  put_plan(m, p.inv.plan);
  cfg.to_manifest(m, "guidance.");
  m.set("backend.id", p.backend.estimator->id());
  m.set("codec.id", p.codec->id());
  m.set_u64("seed", p.inv.seed);
  m.set("args.inverted", o.inverted);
  m.set("args.out", o.out);
  m.set("args.backend", p.backend.locator);
  m.set("args.codec", p.codec_spec);
  m.set_int("args.class", o.target_class);
  m.set_double("args.lambda", cfg.scale);
  m.set_int("args.tau", cfg.tau);
  m.set("args.mode", to_string(cfg.mode));
  m.set_int("args.dilation-factor", cfg.dilation_factor);
  m.set("args.vanilla-eval", to_string(cfg.vanilla_eval));
  m.set_bool("args.record", o.record);
  if (o.record) m.set("args.record-dir", record_dir);
  m.set_int("args.preview-every", o.preview_every);
  m.save(o.out + ".manifest");
  return 0;
}

int cmd_reconstruct(const ReconstructOptions& o) {
  Pipeline p = load_pipeline(o.inverted, o.backend, o.codec);
  Tensor pixels = reconstruct(p.inv, p.inv.schedule, *p.backend.estimator, *p.codec, o.use_cache);
  write_png(o.out, to_rgb(pixels));

  Manifest m = base_run_manifest("reconstruct");
  put_schedule(m, p.inv.schedule);
  put_plan(m, p.inv.plan);
  m.set("backend.id", p.backend.estimator->id());
  m.set("codec.id", p.codec->id());
  m.set_u64("seed", p.inv.seed);
  m.set("args.inverted", o.inverted);
  m.set("args.out", o.out);
  m.set("args.backend", p.backend.locator);
  m.set("args.codec", p.codec_spec);
  m.set_bool("args.use-cache", o.use_cache);
  m.save(o.out + ".manifest");
  return 0;
}

int cmd_demo(const DemoOptions& o) {
  ensure_dir(o.out_dir);
  Manifest m = base_run_manifest("demo");
  m.set("args.out-dir", o.out_dir);
  m.set("args.world", o.world);
  m.set_int("args.size", o.size);
  m.set_int("args.count", o.count);
  m.set_u64("args.seed", o.seed);

  if (o.count < 1 || o.size < 1) {
    throw Error(ErrorCode::invalid_range, "--count and --size must be positive");
  }
  int written = 0;
  if (o.world == "corpus") {
    CorpusSpec spec;
    spec.base_height = o.size;
    spec.base_width = o.size;
    for (int cls = 0; cls < spec.num_classes; ++cls) {
      for (int i = 0; i < o.count; ++i) {
        Tensor img = corpus_image(spec, cls, o.seed, i);
        write_png(o.out_dir + "/corpus_class" + std::to_string(cls) + "_" + std::to_string(i) +
                      ".png",
                  to_rgb(img));
        ++written;
      }
    }
  } else {
    GaussianMixtureWorld world = GaussianMixtureWorld::builtin(o.world);
    if (o.size % world.block_height != 0 || o.size % world.block_width != 0) {
      throw Error(ErrorCode::not_divisible,
                  "--size must be a multiple of the world's block dims");
    }
    int classes = static_cast<int>(world.class_priors.size());
    for (int cls = 0; cls < classes; ++cls) {
      for (int i = 0; i < o.count; ++i) {
        Prng rng(derive_stream(o.seed, static_cast<std::uint64_t>(cls),
                               static_cast<std::uint64_t>(i)));
        Tensor img = sample_world(world, o.size, o.size, cls, rng);
        write_png(o.out_dir + "/world_" + o.world + "_class" + std::to_string(cls) + "_" +
                      std::to_string(i) + ".png",
                  to_rgb(img));
        ++written;
      }
    }
  }
  m.set_int("images.count", written);
  m.save(o.out_dir + "/run.manifest");
  return 0;
}

int cmd_train_toy(const TrainToyOptions& o) {
  CorpusSpec spec;
  spec.base_height = o.size;
  spec.base_width = o.size;
  NoiseSchedule schedule = NoiseSchedule::build(o.train_steps, o.sample_steps, 1e-4, 2e-2,
                                                BetaSpacing::linear);
  TrainOptions topt;
  topt.lr = o.lr;
  TrainResult result = train_toy(spec, schedule, o.epochs, o.seed, topt);
  ensure_dir(o.out);
  result.estimator->save(o.out);

  Manifest m = base_run_manifest("train-toy");
  put_schedule(m, schedule);
  m.set("backend.id", result.estimator->id());
  m.set_u64("seed", o.seed);
  m.set("args.out", o.out);
  m.set_int("args.size", o.size);
  m.set_int("args.epochs", o.epochs);
  m.set_double("args.lr", o.lr);
  m.set_int("args.train-steps", o.train_steps);
  m.set_int("args.sample-steps", o.sample_steps);
  m.set_u64("args.seed", o.seed);
  for (std::size_t i = 0; i < result.epoch_loss.size(); ++i) {
    m.set_double("loss." + std::to_string(i), result.epoch_loss[i]);
  }
  m.save(o.out + "/run.manifest");
  return 0;
}

int cmd_plot(const PlotOptions& o) {
  TrajectoryRecord rec = TrajectoryRecord::load(o.trajectory);
  std::vector<const TrajectoryEntry*> panels;
  for (const TrajectoryEntry& e : rec.entries) {
    if (e.has_preview) panels.push_back(&e);
  }
  if (panels.empty()) {
    throw Error(ErrorCode::invalid_range,
                "trajectory at '" + o.trajectory + "' has no preview frames");
  }

  const int sep = 2;
  int ph = panels[0]->preview.height();
  int pw = panels[0]->preview.width();
  int n = static_cast<int>(panels.size());
  Tensor grid = Tensor::full(2 * ph + sep, n * pw + (n - 1) * sep, 3, 1.0f);
  for (int i = 0; i < n; ++i) {
    const TrajectoryEntry& e = *panels[static_cast<std::size_t>(i)];
    blit(grid, to_rgb(e.preview), 0, i * (pw + sep));
    Tensor res = normalize_panel(e.residual);
    if (res.height() > 0 && ph % res.height() == 0 && ph / res.height() > 1) {
      res = nn_upsample(res, ph / res.height());
    }
    blit(grid, to_rgb(res), ph + sep, i * (pw + sep));
  }
  write_png(o.out, grid);

  Manifest m = base_run_manifest("plot");
  m.set("args.trajectory", o.trajectory);
  m.set("args.out", o.out);
  m.set_int("panels.count", n);
  m.set_int("entries.count", static_cast<int>(rec.entries.size()));
  m.set("schedule.id", rec.schedule_id);
  m.save(o.out + ".manifest");
  return 0;
}

int cmd_sweep_lambda(const SweepOptions& o) {
  Pipeline p = load_pipeline(o.inverted, o.backend, o.codec);
  if (o.values.empty()) {
    throw Error(ErrorCode::invalid_range, "--values needs at least one lambda");
  }
  Conditioning cond = make_conditioning(o.target_class, "");
  int T = p.inv.schedule.num_steps();
  int ratio = scale_ratio(p.inv, *p.backend.estimator);

  GuidanceConfig cfg;
  cfg.mode = guidance_mode_from_string(o.mode);
  cfg.tau = o.tau >= 0 ? o.tau : default_tau(ratio, T);
  cfg.dilation_factor = o.dilation_factor > 0 ? o.dilation_factor : ratio;
  std::shared_ptr<const NoiseEstimator> dilated =
      redilate(p.backend.estimator, cfg.dilation_factor);

  // Source pixels for the similarity column; the invert manifest records the
  // input path.
  if (p.source_input.empty()) {
    throw Error(ErrorCode::input_not_found,
                "the invert run manifest does not record the source image");
  }
  Tensor source = adapt_channels(read_png(p.source_input), p.codec->pixel_channels());

  // Target-class block mean tiled over the latent canvas, analytic backends
  // only.
  bool analytic = is_analytic(p.backend.locator);
  Tensor target_mean;
  if (analytic) {
    GaussianMixtureWorld world = GaussianMixtureWorld::builtin(
        p.backend.locator.substr(std::string(kAnalyticPrefix).size()));
    if (o.target_class < 0 ||
        o.target_class >= static_cast<int>(world.components.size())) {
      throw Error(ErrorCode::unknown_conditioning, "--class outside the world's class set");
    }
    const GaussianComponent& comp = world.components[static_cast<std::size_t>(o.target_class)];
    int lh = p.inv.plan.canvas_height / p.inv.plan.latent_factor;
    int lw = p.inv.plan.canvas_width / p.inv.plan.latent_factor;
    target_mean = Tensor(lh, lw, world.block_channels);
    for (int y = 0; y < lh; ++y) {
      for (int x = 0; x < lw; ++x) {
        for (int c = 0; c < world.block_channels; ++c) {
          std::size_t k = static_cast<std::size_t>(
              ((y % world.block_height) * world.block_width + (x % world.block_width)) *
                  world.block_channels +
              c);
          target_mean.at(y, x, c) = static_cast<float>(comp.mean[k]);
        }
      }
    }
  }

  ensure_dir(o.out_dir);
  Manifest m = base_run_manifest("sweep-lambda");
  put_schedule(m, p.inv.schedule);
  cfg.to_manifest(m, "guidance.");
  m.set("backend.id", p.backend.estimator->id());
  m.set("args.inverted", o.inverted);
  m.set("args.out-dir", o.out_dir);
  m.set("args.backend", p.backend.locator);
  m.set("args.codec", p.codec_spec);
  m.set_int("args.class", o.target_class);
  m.set_int("args.tau", cfg.tau);
  m.set("args.mode", to_string(cfg.mode));
  m.set_int("args.dilation-factor", cfg.dilation_factor);

  std::string report = "# lambda source_rmse target_dist\n";
  for (std::size_t i = 0; i < o.values.size(); ++i) {
    cfg.scale = o.values[i];
    auto [z0, rec] = edit_latent(p.inv, cond, cfg, *p.backend.estimator, *dilated,
                                 p.inv.schedule, *p.codec, false);
    Tensor decoded = p.codec->decode(z0);
    std::string name = "lambda_" + format_double(cfg.scale) + ".png";
    write_png(o.out_dir + "/" + name, to_rgb(decoded));

    double se = 0.0;
    for (std::size_t k = 0; k < decoded.size(); ++k) {
      double d = static_cast<double>(decoded.data()[k]) - source.data()[k];
      se += d * d;
    }
    double source_rmse = std::sqrt(se / static_cast<double>(decoded.size()));

    std::string target_field = "n/a";
    if (analytic) {
      double te = 0.0;
      for (std::size_t k = 0; k < z0.size(); ++k) {
        double d = static_cast<double>(z0.data()[k]) - target_mean.data()[k];
        te += d * d;
      }
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.8f", std::sqrt(te / static_cast<double>(z0.size())));
      target_field = buf;
    }
    char line[160];
    std::snprintf(line, sizeof(line), "%g %.8f %s\n", cfg.scale, source_rmse,
                  target_field.c_str());
    report += line;

    std::string key = "lambda." + std::to_string(i);
    m.set_double(key + ".value", cfg.scale);
    m.set(key + ".output", name);
    m.set_double(key + ".source_rmse", source_rmse);
    if (analytic) m.set(key + ".target_dist", target_field);
  }

  std::ofstream out(o.out_dir + "/sweep.report");
  if (!out) {
    throw Error(ErrorCode::io_failure, "cannot write '" + o.out_dir + "/sweep.report'");
  }
  out << report;
  out.close();
  m.save(o.out_dir + "/run.manifest");
  return 0;
}

}  // namespace tiledit
