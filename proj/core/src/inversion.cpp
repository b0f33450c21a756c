#include "tiledit/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <thread>

#include "tiledit/container.hpp"
#include "tiledit/errors.hpp"
#include "tiledit/manifest.hpp"

namespace tiledit {

std::pair<Tensor, std::vector<Tensor>> invert_single_tile(const Tensor& z0,
                                                          const NoiseSchedule& schedule,
                                                          const NoiseEstimator& estimator,
                                                          bool cache_eps) {
  require_same_schedule(estimator, schedule);
  const int T = schedule.num_steps();
  Conditioning null_cond = Conditioning::null_conditioning();
  // The recursion state stays in double the whole way up; only estimator
  // inputs and the final endpoint are rounded to the tensor dtype. Per-step
  // rounding would otherwise be amplified by 1/sqrt(alpha_bar_T) during
  // replay and eat the entire round-trip tolerance.
  std::vector<double> zd(z0.size());
  for (std::size_t i = 0; i < zd.size(); ++i) zd[i] = z0.data()[i];
  Tensor z_f = z0;
  std::vector<Tensor> eps_list;
  if (cache_eps) eps_list.reserve(static_cast<std::size_t>(T));
  for (int j = 0; j < T; ++j) {
    for (std::size_t i = 0; i < zd.size(); ++i) z_f.data()[i] = static_cast<float>(zd[i]);
    Tensor eps = estimator.predict(z_f, j, null_cond);
    require_same_shape(eps, z_f, "invert_single_tile");
    const double sa_t = std::sqrt(schedule.alpha_bar(j));
    const double sn_t = std::sqrt(1.0 - schedule.alpha_bar(j));
    const double sa_n = std::sqrt(schedule.alpha_bar(j + 1));
    const double sn_n = std::sqrt(1.0 - schedule.alpha_bar(j + 1));
    const float* e = eps.data();
    for (std::size_t i = 0; i < zd.size(); ++i) {
      double clean = (zd[i] - sn_t * e[i]) / sa_t;
      zd[i] = sa_n * clean + sn_n * e[i];
    }
    if (cache_eps) eps_list.push_back(std::move(eps));
  }
  Tensor z = zeros_like(z0);
  for (std::size_t i = 0; i < zd.size(); ++i) z.data()[i] = static_cast<float>(zd[i]);
  return {std::move(z), std::move(eps_list)};
}

InvertedLatent tiled_ddim_invert(const Tensor& image, const TilePlan& plan,
                                 const NoiseSchedule& schedule, const NoiseEstimator& estimator,
                                 const LatentCodec& codec, bool cache_eps, std::uint64_t seed) {
  if (image.height() != plan.canvas_height || image.width() != plan.canvas_width) {
    throw Error(ErrorCode::shape_mismatch,
                "image " + image.shape_string() + " does not match the planned canvas " +
                    std::to_string(plan.canvas_height) + "x" + std::to_string(plan.canvas_width));
  }
  if (image.channels() != codec.pixel_channels()) {
    throw Error(ErrorCode::shape_mismatch,
                "image has " + std::to_string(image.channels()) + " channels, codec expects " +
                    std::to_string(codec.pixel_channels()));
  }
  if (codec.spatial_factor() != plan.latent_factor) {
    throw Error(ErrorCode::shape_mismatch,
                "codec factor " + std::to_string(codec.spatial_factor()) +
                    " does not match the plan's latent factor " +
                    std::to_string(plan.latent_factor));
  }
  const int tile_lat_h = plan.tile_height / plan.latent_factor;
  const int tile_lat_w = plan.tile_width / plan.latent_factor;
  // Tiles must be whole multiples of the estimator's base dims: equality for
  // backends pinned to base resolution, any multiple for resolution-agnostic
  // ones. Backends that only take exact base dims still fail fast in predict.
  if (tile_lat_h <= 0 || tile_lat_w <= 0 || tile_lat_h % estimator.base_height() != 0 ||
      tile_lat_w % estimator.base_width() != 0 ||
      estimator.channels() != codec.latent_channels()) {
    throw Error(ErrorCode::shape_mismatch,
                "estimator base " + Tensor::shape_string(estimator.base_height(),
                                                         estimator.base_width(),
                                                         estimator.channels()) +
                    " does not divide the tile latent dims " +
                    Tensor::shape_string(tile_lat_h, tile_lat_w, codec.latent_channels()));
  }
  require_same_schedule(estimator, schedule);

  const int n = plan.tile_count();
  std::vector<Tensor> latents(static_cast<std::size_t>(n));
  std::vector<std::vector<Tensor>> caches(cache_eps ? static_cast<std::size_t>(n) : 0);

  auto run_tile = [&](int i) {
    Tensor pixel_tile = crop(image, plan.rects[static_cast<std::size_t>(i)]);
    Tensor z0 = codec.encode(pixel_tile);
    auto [z_T, eps_list] = invert_single_tile(z0, schedule, estimator, cache_eps);
    latents[static_cast<std::size_t>(i)] = std::move(z_T);
    if (cache_eps) caches[static_cast<std::size_t>(i)] = std::move(eps_list);
  };

  // Tiles write only their own slots, so any scheduling yields the same bits.
  // At least two workers whenever there is more than one tile, so the
  // threaded path is exercised even on single-core hosts.
  unsigned workers = std::min<unsigned>(std::max(std::thread::hardware_concurrency(), 2u),
                                        static_cast<unsigned>(n));
  if (n <= 1) {
    for (int i = 0; i < n; ++i) run_tile(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int i = static_cast<int>(w); i < n; i += static_cast<int>(workers)) run_tile(i);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  InvertedLatent out;
  out.z_T_star = stitch(latents, plan, Space::latent);
  out.plan = plan;
  out.schedule = schedule;
  out.eps_cache = std::move(caches);
  out.seed = seed;
  out.backend_id = estimator.id();
  return out;
}

namespace {

std::string eps_file(int tile) { return "eps_tile" + std::to_string(tile) + ".lts"; }

}  // namespace

void InvertedLatent::save(const std::string& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::io_failure, "cannot create directory '" + dir + "': " + ec.message());
  }
  const std::filesystem::path base(dir);
  write_container((base / "latent.lts").string(), z_T_star);

  Manifest m;
  m.set("kind", "inverted-latent");
  m.set_int("canvas_height", plan.canvas_height);
  m.set_int("canvas_width", plan.canvas_width);
  m.set_int("tile_height", plan.tile_height);
  m.set_int("tile_width", plan.tile_width);
  m.set_int("latent_factor", plan.latent_factor);
  const ScheduleParams& sp = schedule.params();
  m.set_int("schedule.num_train_steps", sp.num_train_steps);
  m.set_int("schedule.num_sample_steps", sp.num_sample_steps);
  m.set_double("schedule.beta_start", sp.beta_start);
  m.set_double("schedule.beta_end", sp.beta_end);
  m.set("schedule.spacing", to_string(sp.spacing));
  m.set_u64("seed", seed);
  m.set("backend", backend_id);
  m.set_bool("cached", has_cache());
  m.save((base / "inverted.manifest").string());

  if (!has_cache()) return;
  const int T = schedule.num_steps();
  for (std::size_t i = 0; i < eps_cache.size(); ++i) {
    const std::vector<Tensor>& steps = eps_cache[i];
    if (static_cast<int>(steps.size()) != T) {
      throw Error(ErrorCode::count_mismatch,
                  "tile " + std::to_string(i) + " caches " + std::to_string(steps.size()) +
                      " steps, schedule has " + std::to_string(T));
    }
    RawTensor packed;
    const Tensor& first = steps.front();
    packed.dims = {static_cast<std::uint32_t>(T), static_cast<std::uint32_t>(first.height()),
                   static_cast<std::uint32_t>(first.width()),
                   static_cast<std::uint32_t>(first.channels())};
    packed.data.reserve(static_cast<std::size_t>(T) * first.size());
    for (const Tensor& e : steps) {
      packed.data.insert(packed.data.end(), e.values().begin(), e.values().end());
    }
    write_container((base / eps_file(static_cast<int>(i))).string(), packed);
  }
}

InvertedLatent InvertedLatent::load(const std::string& dir) {
  const std::filesystem::path base(dir);
  Manifest m = Manifest::load((base / "inverted.manifest").string());
  if (m.get_or("kind", "") != "inverted-latent") {
    throw Error(ErrorCode::bad_format, "'" + dir + "' is not an inverted-latent directory");
  }
  InvertedLatent out;
  out.plan = plan_tiles(static_cast<int>(m.get_int("canvas_height")),
                        static_cast<int>(m.get_int("canvas_width")),
                        static_cast<int>(m.get_int("tile_height")),
                        static_cast<int>(m.get_int("tile_width")),
                        static_cast<int>(m.get_int("latent_factor")));
  ScheduleParams sp;
  sp.num_train_steps = static_cast<int>(m.get_int("schedule.num_train_steps"));
  sp.num_sample_steps = static_cast<int>(m.get_int("schedule.num_sample_steps"));
  sp.beta_start = m.get_double("schedule.beta_start");
  sp.beta_end = m.get_double("schedule.beta_end");
  sp.spacing = beta_spacing_from_string(m.get("schedule.spacing"));
  out.schedule = NoiseSchedule::build(sp);
  out.seed = m.get_u64("seed");
  out.backend_id = m.get_or("backend", "");

  out.z_T_star = read_container_tensor((base / "latent.lts").string());
  const int lat_h = out.plan.canvas_height / out.plan.latent_factor;
  const int lat_w = out.plan.canvas_width / out.plan.latent_factor;
  if (out.z_T_star.height() != lat_h || out.z_T_star.width() != lat_w) {
    throw Error(ErrorCode::shape_mismatch,
                "stored latent " + out.z_T_star.shape_string() + " does not match the plan (" +
                    std::to_string(lat_h) + "x" + std::to_string(lat_w) + ")");
  }

  if (!m.get_bool("cached")) return out;
  const int T = out.schedule.num_steps();
  out.eps_cache.resize(static_cast<std::size_t>(out.plan.tile_count()));
  for (int i = 0; i < out.plan.tile_count(); ++i) {
    RawTensor packed = read_container((base / eps_file(i)).string());
    if (packed.dims.size() != 4 || static_cast<int>(packed.dims[0]) != T) {
      throw Error(ErrorCode::bad_format,
                  "epsilon cache for tile " + std::to_string(i) + " is malformed");
    }
    const int h = static_cast<int>(packed.dims[1]);
    const int w = static_cast<int>(packed.dims[2]);
    const int c = static_cast<int>(packed.dims[3]);
    const std::size_t stride = static_cast<std::size_t>(h) * w * c;
    std::vector<Tensor>& steps = out.eps_cache[static_cast<std::size_t>(i)];
    steps.reserve(static_cast<std::size_t>(T));
    for (int j = 0; j < T; ++j) {
      Tensor e(h, w, c);
      std::copy_n(packed.data.begin() + static_cast<std::ptrdiff_t>(stride) * j, stride,
                  e.values().begin());
      steps.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace tiledit
