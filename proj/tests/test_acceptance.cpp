// Acceptance gate: eleven numbered end-to-end checks, one pass/fail line per
// check. Tolerances and runtime budgets are pinned here in code; the binary
// exits nonzero when any check fails. Check 11 shells out to the CLI binary
// named by TILEDIT_BIN.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "support/mc_oracle.hpp"
#include "support/testutil.hpp"
#include "support/worlds.hpp"
#include "tiledit/analytic.hpp"
#include "tiledit/conv_denoiser.hpp"
#include "tiledit/errors.hpp"
#include "tiledit/guidance.hpp"
#include "tiledit/image_io.hpp"
#include "tiledit/inversion.hpp"
#include "tiledit/manifest.hpp"
#include "tiledit/nn.hpp"
#include "tiledit/sampler.hpp"
#include "tiledit/tiling.hpp"

using namespace tiledit;
namespace fs = std::filesystem;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

NoiseSchedule standard_schedule(int sample_steps) {
  return NoiseSchedule::build(1000, sample_steps, 1e-4, 2e-2, BetaSpacing::linear);
}

GaussianMixtureWorld shifted_twoclass() {
  GaussianMixtureWorld w = GaussianMixtureWorld::builtin("twoclass");
  w.name = "twoclass-shifted";
  for (GaussianComponent& comp : w.components) {
    for (double& m : comp.mean) m = m * 0.85 + 0.06;
  }
  w.validate();
  return w;
}

double rmse(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(a.data()[i]) - b.data()[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

// --- check 1: tiling round-trip -------------------------------------------

void check_tiling(std::string& note) {
  Prng rng(101);
  const int factors[3] = {1, 2, 4};
  for (int trial = 0; trial < 50; ++trial) {
    int f = factors[rng.uniform_int(0, 2)];
    int s = f * rng.uniform_int(1, 6);
    int h = s * rng.uniform_int(1, 5);
    int w = s * rng.uniform_int(1, 5);
    int c = rng.uniform_int(1, 4);
    TilePlan plan = plan_tiles(h, w, s, s, f);
    Tensor canvas = testutil::random_tensor(h, w, c, 9000 + static_cast<std::uint64_t>(trial));
    std::vector<Tensor> tiles;
    for (int i = 0; i < plan.tile_count(); ++i) {
      tiles.push_back(crop(canvas, plan.rects[static_cast<std::size_t>(i)]));
    }
    require(testutil::bit_equal(stitch(tiles, plan, Space::pixel), canvas),
            "pixel stitch(crop-all) is not bit-exact at trial " + std::to_string(trial));
    Tensor latent = testutil::random_tensor(h / f, w / f, c,
                                            9500 + static_cast<std::uint64_t>(trial));
    std::vector<Tensor> lat_tiles;
    for (int i = 0; i < plan.tile_count(); ++i) {
      lat_tiles.push_back(crop(latent, plan.latent_rect(i)));
    }
    require(testutil::bit_equal(stitch(lat_tiles, plan, Space::latent), latent),
            "latent stitch(crop-all) is not bit-exact at trial " + std::to_string(trial));
  }
  note = "50 random (H,W,S) triples bit-exact in pixel and latent space";
}

// --- check 2: guidance identities ------------------------------------------

void check_guidance(std::string& note) {
  for (int trial = 0; trial < 10; ++trial) {
    Tensor u = testutil::random_tensor(3, 5, 2, 8100 + static_cast<std::uint64_t>(trial));
    Tensor c = testutil::random_tensor(3, 5, 2, 8200 + static_cast<std::uint64_t>(trial));
    require(testutil::bit_equal(cfg_combine(c, u, 0.0), u), "omega=0 must return eps_null");
    require(testutil::bit_equal(cfg_combine(c, u, 1.0), c), "omega=1 must return eps_cond");
  }

  // Lambda steps stay inside [base, base + residual] in every cell; the base
  // is the vanilla unconditional prediction for the noise-damped rule and the
  // dilated one for the plain rule.
  NoiseSchedule s = standard_schedule(20);
  AnalyticEstimator vanilla(GaussianMixtureWorld::builtin("twoclass"), s);
  AnalyticEstimator dilated(shifted_twoclass(), s);
  Conditioning cond = Conditioning::for_class(1);
  Prng rng(82);
  for (int trial = 0; trial < 40; ++trial) {
    Tensor z = testutil::random_tensor(2, 2, 1, 8300 + static_cast<std::uint64_t>(trial));
    int t = rng.uniform_int(1, s.num_steps());
    double lam = trial < 2 ? static_cast<double>(trial) : rng.uniform();
    StepOutput nd = ndcfgpp_step(z, t, t - 1, vanilla, dilated, cond, lam, s);
    StepOutput pp = cfgpp_step(z, t, t - 1, dilated, cond, lam, s);
    for (const StepOutput* out : {&nd, &pp}) {
      for (std::size_t i = 0; i < z.size(); ++i) {
        float base = out->eps_uncond_vanilla.data()[i];
        float far = base + out->residual.data()[i];
        float lo = std::min(base, far), hi = std::max(base, far);
        require(out->eps_guided.data()[i] >= lo && out->eps_guided.data()[i] <= hi,
                "lambda=" + fmt(lam) + " extrapolated outside the residual segment");
      }
    }
  }

  // omega = 7.5 on constructed endpoints lands outside [eps_null, eps_cond]
  // in every cell.
  Tensor zeros(2, 2, 1);
  Tensor ones = Tensor::full(2, 2, 1, 1.0f);
  Tensor g = cfg_combine(ones, zeros, 7.5);
  for (float v : g.values()) {
    require(v > 1.0f, "omega=7.5 must extrapolate past the conditional endpoint");
  }
  note = "endpoints bitwise; 40 lambda steps interpolate cellwise; omega=7.5 extrapolates";
}

// --- check 3: reduction chain ----------------------------------------------

void check_reduction(std::string& note) {
  NoiseSchedule s = standard_schedule(50);
  auto est = std::make_shared<AnalyticEstimator>(GaussianMixtureWorld::builtin("twoclass"), s);
  Conditioning cond = Conditioning::for_class(1);
  Prng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor z = testutil::random_tensor(4, 4, 1, 7000 + static_cast<std::uint64_t>(trial));
    int t = rng.uniform_int(1, s.num_steps());
    double lam = rng.uniform();
    StepOutput a = ndcfgpp_step(z, t, t - 1, *est, *est, cond, lam, s);
    StepOutput b = cfgpp_step(z, t, t - 1, *est, cond, lam, s);
    worst = std::max(worst, static_cast<double>(testutil::rel_l2_error(a.z_prev, b.z_prev)));
    worst = std::max(worst,
                     static_cast<double>(testutil::rel_l2_error(a.eps_guided, b.eps_guided)));
  }
  require(worst <= 1e-6, "single-step reduction error " + fmt(worst) + " exceeds 1e-6");

  // Full run with coinciding estimators: the tau-switched trajectory must
  // track an always-plain trajectory at every level.
  Prng srng(3031);
  Tensor image = sample_world(est->world(), 8, 8, 0, srng);
  IdentityCodec codec(1);
  InvertedLatent inv =
      tiled_ddim_invert(image, plan_tiles(8, 8, 4, 4, 1), s, *est, codec, false, 11);
  GuidanceConfig cfg;
  cfg.mode = GuidanceMode::ndcfgpp;
  cfg.scale = 0.55;
  cfg.tau = 37;
  cfg.dilation_factor = 1;
  auto [z_lib, rec] = edit_latent(inv, cond, cfg, *est, *est, s, codec, false);
  (void)rec;
  Tensor za = inv.z_T_star, zb = inv.z_T_star;
  double traj_worst = 0.0;
  for (int t = s.num_steps(); t >= 1; --t) {
    za = (t <= cfg.tau) ? ndcfgpp_step(za, t, t - 1, *est, *est, cond, cfg.scale, s).z_prev
                        : cfgpp_step(za, t, t - 1, *est, cond, cfg.scale, s).z_prev;
    zb = cfgpp_step(zb, t, t - 1, *est, cond, cfg.scale, s).z_prev;
    traj_worst = std::max(traj_worst, static_cast<double>(testutil::rel_l2_error(za, zb)));
  }
  require(traj_worst <= 1e-6, "trajectory divergence " + fmt(traj_worst) + " exceeds 1e-6");
  require(testutil::bit_equal(z_lib, za), "edit output differs from the step composition");
  note = "100 random steps worst rel " + fmt(worst) + "; 50-step trajectory worst rel " +
         fmt(traj_worst);
}

// --- check 4: cached-eps replay --------------------------------------------

void check_cached_replay(std::string& note) {
  NoiseSchedule s = standard_schedule(50);
  GaussianMixtureWorld world = GaussianMixtureWorld::builtin("texture");
  AnalyticEstimator est(world, s);
  IdentityCodec codec(1);
  Prng rng(505);
  Tensor image = sample_world(world, 128, 128, 0, rng);
  TilePlan plan = plan_tiles(128, 128, 64, 64, 1);
  require(plan.tile_count() == 4, "canvas must split into 4 tiles");
  InvertedLatent inv = tiled_ddim_invert(image, plan, s, est, codec, true, 21);
  Tensor replay = reconstruct_latent(inv, s, est, true);
  Tensor encoded = codec.encode(image);
  double worst = 0.0;
  for (int i = 0; i < plan.tile_count(); ++i) {
    TileRect r = plan.latent_rect(i);
    worst = std::max(
        worst, static_cast<double>(testutil::rel_l2_error(crop(replay, r), crop(encoded, r))));
  }
  require(worst <= 1e-5, "per-tile replay error " + fmt(worst) + " exceeds 1e-5");
  note = "4 tiles of 64x64, worst per-tile rel error " + fmt(worst);
}

// --- check 5: analytic posterior vs monte carlo -----------------------------

void check_analytic_mc(std::string& note) {
  NoiseSchedule s = standard_schedule(40);
  double worst_sigmas = 0.0;
  for (int case_i = 0; case_i < 100; ++case_i) {
    std::uint64_t seed = 5000 + static_cast<std::uint64_t>(case_i);
    GaussianMixtureWorld w = testworlds::random_world(seed * 7919 + 3);
    Prng rng(seed * 131 + 9);
    // t is restricted to the mid-noise range where prior-proposal importance
    // sampling keeps a healthy effective sample size; the ESS guard below
    // enforces that the oracle itself is trustworthy.
    int t = testworlds::mid_noise_step(s, rng);
    double ab = s.alpha_bar(t);
    int d = w.dim();
    Tensor z0 = sample_world(w, 1, 1, -1, rng);
    Tensor z_t(1, 1, d);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      x[static_cast<std::size_t>(k)] =
          std::sqrt(ab) * z0.at(0, 0, k) + std::sqrt(1.0 - ab) * rng.normal();
      z_t.at(0, 0, k) = static_cast<float>(x[static_cast<std::size_t>(k)]);
    }
    int cls = case_i % 3 == 0 ? -1 : case_i % w.num_classes();
    Conditioning cond =
        cls < 0 ? Conditioning::null_conditioning() : Conditioning::for_class(cls);
    Tensor got = analytic_epsilon(w, z_t, t, cond, s);
    mc::Estimate est = mc::posterior_eps(w, x, ab, cls, 100000, seed * 1009 + 5);
    require(est.ess > 500.0, "oracle ESS " + fmt(est.ess) + " too low at case " +
                                 std::to_string(case_i));
    for (int k = 0; k < d; ++k) {
      double diff = std::fabs(static_cast<double>(got.at(0, 0, k)) -
                              est.mean[static_cast<std::size_t>(k)]);
      double se = est.se[static_cast<std::size_t>(k)];
      require(diff <= 3.0 * se + 1e-6, "case " + std::to_string(case_i) + " coordinate " +
                                           std::to_string(k) + " off by " + fmt(diff) +
                                           " with SE " + fmt(se));
      if (se > 0.0) worst_sigmas = std::max(worst_sigmas, diff / se);
    }
  }
  note = "100 cases x 1e5 samples, worst deviation " + fmt(worst_sigmas) + " SE";
}

// --- check 6: generative moments -------------------------------------------

void check_moments(std::string& note) {
  GaussianMixtureWorld blob = GaussianMixtureWorld::builtin("blob");
  NoiseSchedule s = NoiseSchedule::build(1000, 1000, 1e-4, 2e-2, BetaSpacing::linear);
  AnalyticEstimator est(blob, s);
  Conditioning null_cond = Conditioning::null_conditioning();
  Prng rng(606);
  const int n = 10000;
  double sum0 = 0, sum1 = 0, sq0 = 0, sq1 = 0, cross = 0;
  for (int i = 0; i < n; ++i) {
    Tensor z_T(1, 1, 2);
    z_T.at(0, 0, 0) = rng.normal_f();
    z_T.at(0, 0, 1) = rng.normal_f();
    Tensor z0 = scalecrafter_latent(z_T, null_cond, 1.0, 0, est, est, s);
    double a = z0.at(0, 0, 0), b = z0.at(0, 0, 1);
    sum0 += a;
    sum1 += b;
    sq0 += a * a;
    sq1 += b * b;
    cross += a * b;
  }
  double m0 = sum0 / n, m1 = sum1 / n;
  double v0 = sq0 / n - m0 * m0, v1 = sq1 / n - m1 * m1;
  double c01 = cross / n - m0 * m1;
  const double tm0 = 0.8, tm1 = -0.3, tv0 = 0.25, tv1 = 0.5625;
  double se_m0 = std::sqrt(tv0 / n), se_m1 = std::sqrt(tv1 / n);
  double se_v0 = tv0 * std::sqrt(2.0 / (n - 1)), se_v1 = tv1 * std::sqrt(2.0 / (n - 1));
  double se_c = std::sqrt(tv0 * tv1 / n);
  require(std::fabs(m0 - tm0) <= 3 * se_m0, "mean[0] " + fmt(m0) + " outside 3 SE of 0.8");
  require(std::fabs(m1 - tm1) <= 3 * se_m1, "mean[1] " + fmt(m1) + " outside 3 SE of -0.3");
  require(std::fabs(v0 - tv0) <= 3 * se_v0, "var[0] " + fmt(v0) + " outside 3 SE of 0.25");
  require(std::fabs(v1 - tv1) <= 3 * se_v1, "var[1] " + fmt(v1) + " outside 3 SE of 0.5625");
  require(std::fabs(c01) <= 3 * se_c, "cov " + fmt(c01) + " outside 3 SE of 0");
  note = "1e4 runs: mean (" + fmt(m0) + "," + fmt(m1) + "), var (" + fmt(v0) + "," + fmt(v1) +
         "), cov " + fmt(c01) + " all within 3 SE";
}

// --- check 7: approximate invertibility -------------------------------------

void check_invertibility(std::string& note) {
  // Pinned from the first verified run of this check: measured rel errors
  // were 0.1799/0.06427/0.0191 at T=10/50/200 (fixed seeds, deterministic).
  // Regressions in the inversion algebra would push the T=200 error past it.
  const double kPinnedT200Bound = 2.1e-2;
  GaussianMixtureWorld world = GaussianMixtureWorld::builtin("texture");
  IdentityCodec codec(1);
  Prng rng(707);
  Tensor image = sample_world(world, 32, 32, 0, rng);
  TilePlan plan = plan_tiles(32, 32, 32, 32, 1);
  std::vector<int> step_counts = {10, 50, 200};
  std::vector<double> errs;
  for (int T : step_counts) {
    NoiseSchedule s = standard_schedule(T);
    AnalyticEstimator est(world, s);
    InvertedLatent inv = tiled_ddim_invert(image, plan, s, est, codec, false, 31);
    Tensor recon = reconstruct_latent(inv, s, est, false);
    errs.push_back(static_cast<double>(testutil::rel_l2_error(recon, codec.encode(image))));
  }
  require(errs[1] <= errs[0],
          "error rose from T=10 (" + fmt(errs[0]) + ") to T=50 (" + fmt(errs[1]) + ")");
  require(errs[2] <= errs[1],
          "error rose from T=50 (" + fmt(errs[1]) + ") to T=200 (" + fmt(errs[2]) + ")");
  require(errs[2] <= kPinnedT200Bound,
          "T=200 error " + fmt(errs[2]) + " exceeds the pinned bound " + fmt(kPinnedT200Bound));
  note = "fresh-eps rel err T=10/50/200 = " + fmt(errs[0]) + "/" + fmt(errs[1]) + "/" +
         fmt(errs[2]) + ", pinned bound " + fmt(kPinnedT200Bound);
}

// --- check 8: re-dilation commutation ---------------------------------------

void check_redilation(std::string& note) {
  NoiseSchedule s = standard_schedule(20);
  ConvDenoiserSpec spec;
  spec.base_height = 16;
  spec.base_width = 16;
  spec.channels = 2;
  spec.hidden = 8;
  spec.embed_dim = 4;
  spec.num_classes = 2;
  auto conv = std::make_shared<ConvDenoiser>(spec, s, 99);
  Conditioning cond = Conditioning::for_class(0);
  double worst = 0.0;
  for (int f : {2, 4}) {
    Tensor x = testutil::random_tensor(16, 16, 2, 7700 + static_cast<std::uint64_t>(f));
    Tensor base_out = conv->predict(x, 9, cond);
    auto dil = conv->redilate_with(f, DilationProfile::uniform(f));
    Tensor up_out = dil->predict(nn_upsample(x, f), 9, cond);
    Tensor expect = nn_upsample(base_out, f);
    // Three 3x3 layers at dilation f reach 3f cells, so cells closer than
    // that to the border see different padding; interior cells must agree.
    int margin = 3 * f;
    for (int y = margin; y < up_out.height() - margin; ++y) {
      for (int xc = margin; xc < up_out.width() - margin; ++xc) {
        for (int c = 0; c < up_out.channels(); ++c) {
          worst = std::max(worst,
                           static_cast<double>(std::fabs(up_out.at(y, xc, c) -
                                                         expect.at(y, xc, c))));
        }
      }
    }
  }
  require(worst < 1e-5, "interior commutation error " + fmt(worst) + " exceeds 1e-5");
  note = "f=2,4 on a 3-layer conv denoiser, interior max abs diff " + fmt(worst);
}

// --- check 9: lambda sweep ordering -----------------------------------------

void check_lambda_sweep(std::string& note) {
  // Short trajectory: with many guided steps the edit saturates and overshoots
  // past the target mean for every lambda > 0, so distance-to-target stops
  // being monotone in lambda. Six steps keep lambda=1 at, not past, the mean.
  NoiseSchedule s = standard_schedule(6);
  GaussianMixtureWorld world = GaussianMixtureWorld::builtin("twoclass");
  auto est = std::make_shared<AnalyticEstimator>(world, s);
  IdentityCodec codec(1);
  Conditioning cond = Conditioning::for_class(1);
  const GaussianComponent& target = world.components[1];
  const std::vector<double> lambdas = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> src(lambdas.size(), 0.0), tgt(lambdas.size(), 0.0);
  const int seeds = 20;

  for (int seed = 0; seed < seeds; ++seed) {
    Prng rng(derive_stream(909, static_cast<std::uint64_t>(seed)));
    Tensor image = sample_world(world, 8, 8, 0, rng);
    InvertedLatent inv = tiled_ddim_invert(image, plan_tiles(8, 8, 8, 8, 1), s, *est, codec,
                                           false, 40 + static_cast<std::uint64_t>(seed));
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      GuidanceConfig cfg;
      cfg.mode = GuidanceMode::ndcfgpp;
      cfg.scale = lambdas[li];
      cfg.tau = s.num_steps();
      cfg.dilation_factor = 1;
      auto [z0, rec] = edit_latent(inv, cond, cfg, *est, *est, s, codec, false);
      (void)rec;
      src[li] += rmse(z0, image) / seeds;
      // Mean Mahalanobis distance of the 2x2 blocks to the target component.
      double dist = 0.0;
      int blocks = 0;
      for (int by = 0; by + 2 <= z0.height(); by += 2) {
        for (int bx = 0; bx + 2 <= z0.width(); bx += 2) {
          double q = 0.0;
          for (int y = 0; y < 2; ++y) {
            for (int x = 0; x < 2; ++x) {
              std::size_t k = static_cast<std::size_t>(y * 2 + x);
              double dlt = z0.at(by + y, bx + x, 0) - target.mean[k];
              q += dlt * dlt / target.cov[k];
            }
          }
          dist += std::sqrt(q);
          ++blocks;
        }
      }
      tgt[li] += dist / blocks / seeds;
    }
  }

  std::ostringstream tgt_str;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    tgt_str << (li ? "/" : "") << fmt(tgt[li]);
  }
  for (std::size_t li = 1; li < lambdas.size(); ++li) {
    require(src[0] <= src[li], "source rmse at lambda=0 (" + fmt(src[0]) +
                                   ") is not minimal vs lambda=" + fmt(lambdas[li]) + " (" +
                                   fmt(src[li]) + ")");
    require(tgt[li] <= tgt[li - 1], "target distance rose from lambda=" + fmt(lambdas[li - 1]) +
                                        " (" + fmt(tgt[li - 1]) + ") to lambda=" +
                                        fmt(lambdas[li]) + " (" + fmt(tgt[li]) + ")");
  }
  note = "20 seeds: source rmse min at lambda=0 (" + fmt(src[0]) + "), target dist " +
         tgt_str.str() + " non-increasing";
}

// --- check 10: renoising structure ------------------------------------------

void check_renoise_structure(std::string& note) {
  NoiseSchedule s = standard_schedule(50);
  auto vanilla = std::make_shared<AnalyticEstimator>(GaussianMixtureWorld::builtin("twoclass"), s);
  auto dilated = std::make_shared<AnalyticEstimator>(shifted_twoclass(), s);
  Conditioning cond = Conditioning::for_class(1);
  Conditioning null_cond = Conditioning::null_conditioning();
  Prng srng(4041);
  Tensor image = sample_world(vanilla->world(), 8, 8, 0, srng);
  IdentityCodec codec(1);
  InvertedLatent inv =
      tiled_ddim_invert(image, plan_tiles(8, 8, 8, 8, 1), s, *vanilla, codec, false, 7);
  GuidanceConfig cfg;
  cfg.mode = GuidanceMode::ndcfgpp;
  cfg.scale = 0.5;
  cfg.tau = 25;
  cfg.dilation_factor = 1;
  auto [z_final, rec] = edit_latent(inv, cond, cfg, *vanilla, *dilated, s, codec, true);
  require(static_cast<int>(rec.entries.size()) == s.num_steps(), "trajectory must record 50 steps");

  Tensor z = inv.z_T_star;
  int damped = 0;
  for (const TrajectoryEntry& e : rec.entries) {
    if (e.branch == StepBranch::ndcfgpp) {
      StepOutput out = ndcfgpp_step(z, e.t, e.t - 1, *vanilla, *dilated, cond, cfg.scale, s);
      require(testutil::bit_equal(out.eps_uncond_vanilla, vanilla->predict(z, e.t, null_cond)),
              "step t=" + std::to_string(e.t) +
                  ":exposed base is not the vanilla unconditional prediction");
      // Recomposing the update with the vanilla unconditional prediction as
      // the direction term must land on the step output bit-for-bit.
      require(testutil::bit_equal(
                  out.z_prev, ddim_step(z, out.eps_uncond_vanilla, out.eps_guided, e.t, e.t - 1, s)),
              "step t=" + std::to_string(e.t) +
                  ": direction term is not the vanilla unconditional prediction");
      require(testutil::bit_equal(e.residual, out.residual),
              "step t=" + std::to_string(e.t) + ": recorded residual mismatch");
      z = out.z_prev;
      ++damped;
    } else {
      StepOutput out = cfgpp_step(z, e.t, e.t - 1, *dilated, cond, cfg.scale, s);
      require(testutil::bit_equal(e.residual, out.residual),
              "step t=" + std::to_string(e.t) + ": recorded residual mismatch");
      z = out.z_prev;
    }
  }
  require(damped == cfg.tau, "expected 25 noise-damped steps, saw " + std::to_string(damped));
  require(testutil::bit_equal(z, z_final), "replay drifted from the recorded run");
  note = std::to_string(damped) +
         " noise-damped steps: direction term bit-equals the vanilla unconditional prediction";
}

// --- check 11: end-to-end CLI ------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void check_cli_end_to_end(std::string& note) {
  const char* bin = std::getenv("TILEDIT_BIN");
  require(bin != nullptr && *bin, "TILEDIT_BIN must point at the CLI binary");
  fs::path root = fs::temp_directory_path() / "tiledit_acceptance";
  std::error_code ec;
  fs::remove_all(root, ec);
  fs::create_directories(root);
  fs::path log = root / "log.txt";
  auto run = [&](const std::string& args) {
    std::string cmd = std::string(bin) + " " + args + " > " + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    int code = (rc != -1 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
    require(code == 0,
            "command exited " + std::to_string(code) + ": " + args + " :: " + slurp(log));
  };

  // Setup outside the timed budget: a trained toy backend and a 1024x1024
  // source image.
  fs::path model = root / "model";
  run("train-toy --out " + model.string() + " --size 32 --epochs 1 --seed 3");
  fs::path demo_dir = root / "demo";
  run("demo --out-dir " + demo_dir.string() + " --world texture --size 1024 --count 1 --seed 9");
  fs::path src = demo_dir / "world_texture_class0_0.png";
  require(fs::exists(src), "demo image missing: " + src.string());

  fs::path inv = root / "inv";
  fs::path edited = root / "edited.png";
  fs::path grid = root / "grid.png";
  auto t0 = std::chrono::steady_clock::now();
  run("invert --input " + src.string() + " --out " + inv.string() + " --backend " +
      model.string() + " --codec box:8 --tile-size 256 --steps 50 --seed 1");
  run("edit --inverted " + inv.string() + " --out " + edited.string() +
      " --class 1 --record --preview-every 10");
  run("plot --trajectory " + edited.string() + ".trajectory --out " + grid.string());
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  require(elapsed < 120.0, "invert+edit+plot took " + fmt(elapsed) + "s, budget is 120s");

  Tensor out_img = read_png(edited.string());
  require(out_img.height() == 1024 && out_img.width() == 1024,
          "edited image is " + std::to_string(out_img.height()) + "x" +
              std::to_string(out_img.width()) + ", expected 1024x1024");
  Tensor grid_img = read_png(grid.string());
  // 50 steps previewed every 10 -> 5 panels; two rows (preview + residual)
  // with a 2px separator.
  require(grid_img.height() == 2 * 1024 + 2 && grid_img.width() == 5 * 1024 + 4 * 2,
          "trajectory grid is " + std::to_string(grid_img.height()) + "x" +
              std::to_string(grid_img.width()));

  // The echoed manifest must reproduce the run byte-for-byte.
  Manifest m = Manifest::load((inv / "run.manifest").string());
  fs::path inv2 = root / "inv2";
  std::string again = "invert --input " + m.get("args.input") + " --out " + inv2.string() +
                      " --backend " + m.get("args.backend") + " --codec " + m.get("args.codec") +
                      " --tile-size " + std::to_string(m.get_int("args.tile-size")) +
                      " --steps " + std::to_string(m.get_int("args.steps")) + " --seed " +
                      std::to_string(m.get_u64("args.seed"));
  if (m.get_bool("args.cache-eps")) again += " --cache-eps";
  run(again);
  require(slurp(inv / "latent.lts") == slurp(inv2 / "latent.lts"),
          "latent container not reproduced from the manifest");
  require(slurp(inv / "inverted.manifest") == slurp(inv2 / "inverted.manifest"),
          "latent manifest not reproduced from the manifest");
  note = "invert+edit+plot on 1024x1024 in " + fmt(elapsed) +
         "s (budget 120s); PNG dims, grid and manifest reproduction verified";
}

struct Check {
  int id;
  const char* title;
  double budget_s;  // 0: the budget is enforced inside the check body
  void (*fn)(std::string&);
};

}  // namespace

int main() {
  const Check checks[] = {
      {1, "tiling round-trip", 10.0, check_tiling},
      {2, "guidance identities", 5.0, check_guidance},
      {3, "reduction chain", 30.0, check_reduction},
      {4, "cached-eps replay", 60.0, check_cached_replay},
      {5, "analytic posterior vs monte carlo", 120.0, check_analytic_mc},
      {6, "generative moments", 300.0, check_moments},
      {7, "approximate invertibility", 120.0, check_invertibility},
      {8, "re-dilation commutation", 10.0, check_redilation},
      {9, "lambda sweep ordering", 300.0, check_lambda_sweep},
      {10, "renoising structure", 30.0, check_renoise_structure},
      {11, "end-to-end cli", 0.0, check_cli_end_to_end},
  };
  int failures = 0;
  for (const Check& c : checks) {
    auto start = std::chrono::steady_clock::now();
    std::string note;
    std::string why;
    bool pass = true;
    try {
      c.fn(note);
    } catch (const std::exception& e) {
      pass = false;
      why = e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (pass && c.budget_s > 0.0 && secs > c.budget_s) {
      pass = false;
      why = "runtime " + fmt(secs) + "s exceeds the " + fmt(c.budget_s) + "s budget";
    }
    std::printf("criterion %2d %s %7.2fs  %-34s %s\n", c.id, pass ? "PASS" : "FAIL", secs,
                c.title, pass ? note.c_str() : why.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (failures == 0) {
    std::printf("acceptance: all 11 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", failures);
  return 1;
}
