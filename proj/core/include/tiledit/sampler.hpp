#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tiledit/guidance.hpp"
#include "tiledit/inversion.hpp"

namespace tiledit {

// Which step rule actually ran at a given trajectory position.
enum class StepBranch { ndcfgpp, cfgpp, ndcfg, cfg };

const char* to_string(StepBranch branch);
StepBranch step_branch_from_string(const std::string& s);

struct TrajectoryEntry {
  int t = 0;  // the step that was consumed (runs T down to 1)
  StepBranch branch = StepBranch::cfgpp;
  Tensor residual;  // dilated conditional minus unconditional at this step
  bool has_preview = false;
  Tensor preview;  // decoded latent after the step, sampled every k steps
};

// Per-step record of a guided reverse run: branch taken, guidance residual,
// and periodic decoded previews, plus the run metadata needed to interpret
// them. Serializes to a directory of tensor containers with an index.
struct TrajectoryRecord {
  std::vector<TrajectoryEntry> entries;
  GuidanceConfig config;
  std::uint64_t seed = 0;
  std::string schedule_id;
  int preview_every = 5;

  int count(StepBranch branch) const;

  void save(const std::string& dir) const;
  static TrajectoryRecord load(const std::string& dir);
};

std::string schedule_id_string(const NoiseSchedule& schedule);

// The tau-switched guided reverse run from the inverted latent: steps t = T..1
// apply the noise-damped lambda rule when t <= cfg.tau and the plain dilated
// lambda rule otherwise (cfg.invert_switch flips the comparison). Only the
// lambda modes are accepted; omega modes run through scalecrafter_generate.
// Returns the final latent plus the trajectory record (entries only when
// record is set).
std::pair<Tensor, TrajectoryRecord> edit_latent(const InvertedLatent& inv,
                                                const Conditioning& cond,
                                                const GuidanceConfig& cfg,
                                                const NoiseEstimator& vanilla,
                                                const NoiseEstimator& dilated,
                                                const NoiseSchedule& schedule,
                                                const LatentCodec& codec, bool record,
                                                int preview_every = 5);

// edit_latent followed by a codec decode of the final latent.
std::pair<Tensor, TrajectoryRecord> edit(const InvertedLatent& inv, const Conditioning& cond,
                                         const GuidanceConfig& cfg, const NoiseEstimator& vanilla,
                                         const NoiseEstimator& dilated,
                                         const NoiseSchedule& schedule, const LatentCodec& codec,
                                         bool record, int preview_every = 5);

// The comparison branch: omega-guided reverse from a noise draw. When
// t <= tau the combine damps with the vanilla unconditional prediction,
// otherwise it is plain dilated guidance; the renoise direction is the guided
// prediction in both branches.
Tensor scalecrafter_latent(const Tensor& z_T, const Conditioning& cond, double omega, int tau,
                           const NoiseEstimator& vanilla, const NoiseEstimator& dilated,
                           const NoiseSchedule& schedule);

Tensor scalecrafter_generate(const Tensor& z_T, const Conditioning& cond, double omega, int tau,
                             const NoiseEstimator& vanilla, const NoiseEstimator& dilated,
                             const NoiseSchedule& schedule, const LatentCodec& codec);

// Unconditional reverse from the inverted latent. With use_cache the run is a
// pure algebraic replay of the stored per-tile epsilons (no estimator calls);
// otherwise the estimator supplies fresh unconditional predictions on the
// whole canvas.
Tensor reconstruct_latent(const InvertedLatent& inv, const NoiseSchedule& schedule,
                          const NoiseEstimator& estimator, bool use_cache);

Tensor reconstruct(const InvertedLatent& inv, const NoiseSchedule& schedule,
                   const NoiseEstimator& estimator, const LatentCodec& codec, bool use_cache);

}  // namespace tiledit
