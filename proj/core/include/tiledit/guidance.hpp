#pragma once

#include <memory>
#include <string>

#include "tiledit/estimator.hpp"
#include "tiledit/manifest.hpp"

namespace tiledit {

// The four guidance rules. The lambda modes (CFGPP, NDCFGPP) interpolate
// between the unconditional and conditional predictions; the omega modes
// (CFG, NDCFG) may extrapolate past the conditional one.
enum class GuidanceMode { cfg, cfgpp, ndcfg, ndcfgpp };

const char* to_string(GuidanceMode mode);
GuidanceMode guidance_mode_from_string(const std::string& s);

bool is_lambda_mode(GuidanceMode mode);

// How the vanilla (undilated) estimator is applied to an oversize canvas:
// one full-canvas call (convolutions are size-agnostic) or one call per
// base-size tile for backends with a strict input contract.
enum class VanillaEval { full_canvas, tile_wise };

const char* to_string(VanillaEval eval);
VanillaEval vanilla_eval_from_string(const std::string& s);

struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::ndcfgpp;
  double scale = 0.5;       // omega for CFG/NDCFG, lambda for CFGPP/NDCFGPP
  int tau = 0;              // switch step; branch condition is t <= tau
  int dilation_factor = 1;
  bool invert_switch = false;  // flips the branch condition to t > tau
  VanillaEval vanilla_eval = VanillaEval::full_canvas;

  // num_steps bounds tau. Lambda modes require scale in [0,1]; omega modes
  // require scale >= 0. Out-of-range scale is an error, never a clamp.
  void validate(int num_steps) const;

  void to_manifest(Manifest& m, const std::string& prefix) const;
  static GuidanceConfig from_manifest(const Manifest& m, const std::string& prefix);
};

// One guided reverse step. eps_uncond_vanilla is the unconditional estimate
// that entered the combine: the vanilla estimator's in the ND modes, the
// dilated estimator's in the plain modes (which never consult a vanilla one).
struct StepOutput {
  Tensor z_prev;
  Tensor eps_guided;
  Tensor eps_uncond_vanilla;
  Tensor residual;  // dilated conditional minus dilated unconditional
};

// eps_uncond + omega * (eps_cond - eps_uncond), elementwise.
Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond, double omega);

// Guided combine eps_vanilla_uncond + omega * residual; clean estimate and
// renoise direction both use the combined prediction.
StepOutput ndcfg_step(const Tensor& z_t, int t, int t_prev, const NoiseEstimator& vanilla,
                      const NoiseEstimator& dilated, const Conditioning& cond, double omega,
                      const NoiseSchedule& schedule);

// Guided combine eps_vanilla_uncond + lam * residual; clean estimate uses the
// combined prediction but the renoise direction is the vanilla unconditional
// prediction itself. That renoising choice is what separates this rule from
// ndcfg_step.
StepOutput ndcfgpp_step(const Tensor& z_t, int t, int t_prev, const NoiseEstimator& vanilla,
                        const NoiseEstimator& dilated, const Conditioning& cond, double lam,
                        const NoiseSchedule& schedule);

// Dilated-only rule: combine eps_dilated_uncond + lam * residual for the clean
// estimate, renoise in the direction of the dilated unconditional prediction.
StepOutput cfgpp_step(const Tensor& z_t, int t, int t_prev, const NoiseEstimator& dilated,
                      const Conditioning& cond, double lam, const NoiseSchedule& schedule);

// Wraps an estimator so oversize inputs are evaluated one base-size tile at a
// time and stitched back together. Input dims must be multiples of the base.
std::shared_ptr<const NoiseEstimator> tile_wise(std::shared_ptr<const NoiseEstimator> estimator);

}  // namespace tiledit
