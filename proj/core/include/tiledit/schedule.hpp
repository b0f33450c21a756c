#pragma once

#include <cstdint>
#include <vector>

#include "tiledit/tensor.hpp"

namespace tiledit {

// How betas are laid out over the training steps. "quadratic" interpolates
// sqrt(beta) linearly and squares (the scaled-linear curve common in latent
// diffusion checkpoints).
enum class BetaSpacing { linear, quadratic };

struct ScheduleParams {
  int num_train_steps = 1000;
  int num_sample_steps = 50;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  BetaSpacing spacing = BetaSpacing::linear;
};

// Diffusion coefficient tables for a (possibly subsampled) sampler schedule.
// Indexing: sampler steps run t = 1..num_steps; t = 0 is the clean level with
// alpha_bar(0) == 1 by convention so terminal steps and inversion from a clean
// latent need no special casing.
//
// For subsampled schedules the alpha_bar values are computed on the full
// training schedule and gathered at the mapped timesteps; betas/alphas are the
// effective per-sampler-step values (alpha(t) = alpha_bar(t)/alpha_bar(t-1))
// so the running-product invariant holds on the sampler index too.
class NoiseSchedule {
 public:
  static NoiseSchedule build(int num_train_steps, int num_sample_steps,
                             double beta_start, double beta_end, BetaSpacing spacing);
  static NoiseSchedule build(const ScheduleParams& p) {
    return build(p.num_train_steps, p.num_sample_steps, p.beta_start, p.beta_end, p.spacing);
  }

  // Test constructor: takes a raw beta sequence (degenerate beta = 0 allowed)
  // and uses it directly as the sampler schedule. Not serializable.
  static NoiseSchedule from_betas(const std::vector<double>& betas);

  int num_steps() const { return static_cast<int>(betas_.size()); }

  double beta(int t) const { check_step(t); return betas_[t - 1]; }
  double alpha(int t) const { check_step(t); return alphas_[t - 1]; }

  // t in [0, num_steps]; alpha_bar(0) == 1.
  double alpha_bar(int t) const {
    check_level(t);
    return t == 0 ? 1.0 : alpha_bars_[t - 1];
  }

  // Underlying training timestep for sampler step t; model_timestep(0) == 0.
  int model_timestep(int t) const {
    check_level(t);
    return t == 0 ? 0 : timestep_map_[t - 1];
  }

  bool has_params() const { return has_params_; }
  const ScheduleParams& params() const;

  // Value equality of the coefficient tables; used to guard against running a
  // sampler with an estimator bound to a different schedule.
  bool same_as(const NoiseSchedule& other) const;

 private:
  void check_step(int t) const;
  void check_level(int t) const;

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
  std::vector<int> timestep_map_;
  bool has_params_ = false;
  ScheduleParams params_;
};

// z0_hat = (z_t - sqrt(1 - alpha_bar_t) * eps) / sqrt(alpha_bar_t).
Tensor predict_clean(const Tensor& z_t, const Tensor& eps, int t, const NoiseSchedule& schedule);

// Deterministic reverse step t -> t_prev:
//   z_prev = sqrt(ab_prev) * z0_hat(eps_for_clean) + sqrt(1 - ab_prev) * eps_for_direction.
// Two eps arguments because some guidance rules renoise with a different
// prediction than the one used for the clean estimate; pass the same tensor
// twice for the standard step.
Tensor ddim_step(const Tensor& z_t, const Tensor& eps_for_direction, const Tensor& eps_for_clean,
                 int t, int t_prev, const NoiseSchedule& schedule);

// Inversion step t -> t_next (t_next > t):
//   z_next = sqrt(ab_next) * z0_hat + sqrt(1 - ab_next) * eps.
Tensor ddim_inverse_step(const Tensor& z_t, const Tensor& eps, int t, int t_next,
                         const NoiseSchedule& schedule);

const char* to_string(BetaSpacing spacing);
BetaSpacing beta_spacing_from_string(const std::string& s);

}  // namespace tiledit
