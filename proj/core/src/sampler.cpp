#include "tiledit/sampler.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "tiledit/container.hpp"
#include "tiledit/errors.hpp"

namespace tiledit {

const char* to_string(StepBranch branch) {
  switch (branch) {
    case StepBranch::ndcfgpp: return "ndcfgpp";
    case StepBranch::cfgpp: return "cfgpp";
    case StepBranch::ndcfg: return "ndcfg";
    case StepBranch::cfg: return "cfg";
  }
  return "cfgpp";
}

StepBranch step_branch_from_string(const std::string& s) {
  if (s == "ndcfgpp") return StepBranch::ndcfgpp;
  if (s == "cfgpp") return StepBranch::cfgpp;
  if (s == "ndcfg") return StepBranch::ndcfg;
  if (s == "cfg") return StepBranch::cfg;
  throw Error(ErrorCode::bad_format, "unknown step branch '" + s + "'");
}

int TrajectoryRecord::count(StepBranch branch) const {
  int n = 0;
  for (const TrajectoryEntry& e : entries) {
    if (e.branch == branch) ++n;
  }
  return n;
}

std::string schedule_id_string(const NoiseSchedule& schedule) {
  if (!schedule.has_params()) {
    return "custom-T" + std::to_string(schedule.num_steps());
  }
  const ScheduleParams& p = schedule.params();
  std::ostringstream out;
  out << "train" << p.num_train_steps << "-sample" << p.num_sample_steps << "-"
      << to_string(p.spacing);
  return out.str();
}

namespace {

// Branch condition of the switched sampler. The pseudocode reads t <= tau,
// which selects the late (small-t) steps of the T..1 loop; invert_switch is
// the documented experiment knob for the opposite reading.
bool noise_damped_branch(int t, const GuidanceConfig& cfg) {
  bool late = t <= cfg.tau;
  return cfg.invert_switch ? !late : late;
}

void check_same(const NoiseSchedule& a, const NoiseSchedule& b, const char* what) {
  if (!a.same_as(b)) {
    throw Error(ErrorCode::schedule_mismatch, std::string(what) + " disagrees with the schedule");
  }
}

}  // namespace

std::pair<Tensor, TrajectoryRecord> edit_latent(const InvertedLatent& inv,
                                                const Conditioning& cond,
                                                const GuidanceConfig& cfg,
                                                const NoiseEstimator& vanilla,
                                                const NoiseEstimator& dilated,
                                                const NoiseSchedule& schedule,
                                                const LatentCodec& codec, bool record,
                                                int preview_every) {
  const int T = schedule.num_steps();
  cfg.validate(T);
  if (!is_lambda_mode(cfg.mode)) {
    throw Error(ErrorCode::mode_mismatch,
                std::string("mode ") + to_string(cfg.mode) +
                    " is omega-guided; this sampler runs the lambda rules only");
  }
  if (preview_every < 1) {
    throw Error(ErrorCode::invalid_range, "preview interval must be >= 1");
  }
  check_same(schedule, inv.schedule, "inverted latent");
  require_same_schedule(vanilla, schedule);
  require_same_schedule(dilated, schedule);

  // The vanilla estimator sees the full canvas by default; tile-wise
  // evaluation splits it into base-size tiles for strict-contract backends.
  std::shared_ptr<const NoiseEstimator> vanilla_view(std::shared_ptr<const NoiseEstimator>(),
                                                     &vanilla);
  if (cfg.vanilla_eval == VanillaEval::tile_wise) {
    vanilla_view = tile_wise(vanilla_view);
  }

  TrajectoryRecord rec;
  rec.config = cfg;
  rec.seed = inv.seed;
  rec.schedule_id = schedule_id_string(schedule);
  rec.preview_every = preview_every;
  if (record) rec.entries.reserve(static_cast<std::size_t>(T));

  Tensor z = inv.z_T_star;
  for (int t = T; t >= 1; --t) {
    StepOutput out;
    StepBranch branch;
    if (noise_damped_branch(t, cfg)) {
      out = ndcfgpp_step(z, t, t - 1, *vanilla_view, dilated, cond, cfg.scale, schedule);
      branch = StepBranch::ndcfgpp;
    } else {
      out = cfgpp_step(z, t, t - 1, dilated, cond, cfg.scale, schedule);
      branch = StepBranch::cfgpp;
    }
    z = std::move(out.z_prev);
    if (record) {
      TrajectoryEntry entry;
      entry.t = t;
      entry.branch = branch;
      entry.residual = std::move(out.residual);
      int done = T - t + 1;
      if (done % preview_every == 0 || t == 1) {
        entry.has_preview = true;
        entry.preview = codec.decode(z);
      }
      rec.entries.push_back(std::move(entry));
    }
  }
  return {std::move(z), std::move(rec)};
}

std::pair<Tensor, TrajectoryRecord> edit(const InvertedLatent& inv, const Conditioning& cond,
                                         const GuidanceConfig& cfg, const NoiseEstimator& vanilla,
                                         const NoiseEstimator& dilated,
                                         const NoiseSchedule& schedule, const LatentCodec& codec,
                                         bool record, int preview_every) {
  auto [z0, rec] = edit_latent(inv, cond, cfg, vanilla, dilated, schedule, codec, record,
                               preview_every);
  return {codec.decode(z0), std::move(rec)};
}

Tensor scalecrafter_latent(const Tensor& z_T, const Conditioning& cond, double omega, int tau,
                           const NoiseEstimator& vanilla, const NoiseEstimator& dilated,
                           const NoiseSchedule& schedule) {
  const int T = schedule.num_steps();
  if (omega < 0.0) {
    throw Error(ErrorCode::scale_out_of_range,
                "omega must be non-negative, got " + std::to_string(omega));
  }
  if (tau < 0 || tau > T) {
    throw Error(ErrorCode::invalid_range,
                "tau must lie in [0," + std::to_string(T) + "], got " + std::to_string(tau));
  }
  require_same_schedule(vanilla, schedule);
  require_same_schedule(dilated, schedule);

  Conditioning null_cond = Conditioning::null_conditioning();
  Tensor z = z_T;
  for (int t = T; t >= 1; --t) {
    if (t <= tau) {
      StepOutput out = ndcfg_step(z, t, t - 1, vanilla, dilated, cond, omega, schedule);
      z = std::move(out.z_prev);
    } else {
      Tensor eps_dc = dilated.predict(z, t, cond);
      Tensor eps_du = dilated.predict(z, t, null_cond);
      Tensor guided = cfg_combine(eps_dc, eps_du, omega);
      z = ddim_step(z, guided, guided, t, t - 1, schedule);
    }
  }
  return z;
}

Tensor scalecrafter_generate(const Tensor& z_T, const Conditioning& cond, double omega, int tau,
                             const NoiseEstimator& vanilla, const NoiseEstimator& dilated,
                             const NoiseSchedule& schedule, const LatentCodec& codec) {
  return codec.decode(scalecrafter_latent(z_T, cond, omega, tau, vanilla, dilated, schedule));
}

Tensor reconstruct_latent(const InvertedLatent& inv, const NoiseSchedule& schedule,
                          const NoiseEstimator& estimator, bool use_cache) {
  const int T = schedule.num_steps();
  check_same(schedule, inv.schedule, "inverted latent");
  if (use_cache) {
    if (!inv.has_cache()) {
      throw Error(ErrorCode::missing_cache,
                  "cached replay requested but the inverted latent carries no epsilon cache");
    }
    // Pure algebra: undo each inversion step with its own stored epsilon.
    std::vector<Tensor> tiles;
    tiles.reserve(static_cast<std::size_t>(inv.plan.tile_count()));
    for (int i = 0; i < inv.plan.tile_count(); ++i) {
      const std::vector<Tensor>& steps = inv.eps_cache[static_cast<std::size_t>(i)];
      if (static_cast<int>(steps.size()) != T) {
        throw Error(ErrorCode::count_mismatch,
                    "tile " + std::to_string(i) + " caches " + std::to_string(steps.size()) +
                        " steps, schedule has " + std::to_string(T));
      }
      Tensor z = crop(inv.z_T_star, inv.plan.latent_rect(i));
      // Mirror of the inversion loop: double state, so the cached float32
      // epsilons cancel exactly and only the stored endpoint rounding remains.
      std::vector<double> zd(z.size());
      for (std::size_t k = 0; k < zd.size(); ++k) zd[k] = z.data()[k];
      for (int j = T - 1; j >= 0; --j) {
        const Tensor& eps = steps[static_cast<std::size_t>(j)];
        require_same_shape(eps, z, "reconstruct_latent cache");
        const double sa_t = std::sqrt(schedule.alpha_bar(j + 1));
        const double sn_t = std::sqrt(1.0 - schedule.alpha_bar(j + 1));
        const double sa_p = std::sqrt(schedule.alpha_bar(j));
        const double sn_p = std::sqrt(1.0 - schedule.alpha_bar(j));
        const float* e = eps.data();
        for (std::size_t k = 0; k < zd.size(); ++k) {
          double clean = (zd[k] - sn_t * e[k]) / sa_t;
          zd[k] = sa_p * clean + sn_p * e[k];
        }
      }
      for (std::size_t k = 0; k < zd.size(); ++k) z.data()[k] = static_cast<float>(zd[k]);
      tiles.push_back(std::move(z));
    }
    return stitch(tiles, inv.plan, Space::latent);
  }

  require_same_schedule(estimator, schedule);
  Conditioning null_cond = Conditioning::null_conditioning();
  Tensor z = inv.z_T_star;
  for (int t = T; t >= 1; --t) {
    Tensor eps = estimator.predict(z, t, null_cond);
    z = ddim_step(z, eps, eps, t, t - 1, schedule);
  }
  return z;
}

Tensor reconstruct(const InvertedLatent& inv, const NoiseSchedule& schedule,
                   const NoiseEstimator& estimator, const LatentCodec& codec, bool use_cache) {
  return codec.decode(reconstruct_latent(inv, schedule, estimator, use_cache));
}

void TrajectoryRecord::save(const std::string& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::io_failure, "cannot create directory '" + dir + "': " + ec.message());
  }
  const std::filesystem::path base(dir);
  Manifest m;
  m.set("kind", "trajectory");
  m.set_int("entries", static_cast<long long>(entries.size()));
  m.set_u64("seed", seed);
  m.set("schedule", schedule_id);
  m.set_int("preview_every", preview_every);
  config.to_manifest(m, "guidance.");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string p = "entry." + std::to_string(i) + ".";
    m.set_int(p + "t", entries[i].t);
    m.set(p + "branch", to_string(entries[i].branch));
    m.set_bool(p + "preview", entries[i].has_preview);
    write_container((base / ("residual_" + std::to_string(i) + ".lts")).string(),
                    entries[i].residual);
    if (entries[i].has_preview) {
      write_container((base / ("preview_" + std::to_string(i) + ".lts")).string(),
                      entries[i].preview);
    }
  }
  m.save((base / "index.manifest").string());
}

TrajectoryRecord TrajectoryRecord::load(const std::string& dir) {
  const std::filesystem::path base(dir);
  Manifest m = Manifest::load((base / "index.manifest").string());
  if (m.get_or("kind", "") != "trajectory") {
    throw Error(ErrorCode::bad_format, "'" + dir + "' is not a trajectory directory");
  }
  TrajectoryRecord rec;
  rec.seed = m.get_u64("seed");
  rec.schedule_id = m.get("schedule");
  rec.preview_every = static_cast<int>(m.get_int("preview_every"));
  rec.config = GuidanceConfig::from_manifest(m, "guidance.");
  const long long n = m.get_int("entries");
  rec.entries.resize(static_cast<std::size_t>(n));
  for (long long i = 0; i < n; ++i) {
    const std::string p = "entry." + std::to_string(i) + ".";
    TrajectoryEntry& e = rec.entries[static_cast<std::size_t>(i)];
    e.t = static_cast<int>(m.get_int(p + "t"));
    e.branch = step_branch_from_string(m.get(p + "branch"));
    e.has_preview = m.get_bool(p + "preview");
    e.residual = read_container_tensor((base / ("residual_" + std::to_string(i) + ".lts")).string());
    if (e.has_preview) {
      e.preview = read_container_tensor((base / ("preview_" + std::to_string(i) + ".lts")).string());
    }
  }
  return rec;
}

}  // namespace tiledit
