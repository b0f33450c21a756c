#include "tiledit/schedule.hpp"

#include <cmath>
#include <string>

#include "tiledit/errors.hpp"

namespace tiledit {

NoiseSchedule NoiseSchedule::build(int num_train_steps, int num_sample_steps,
                                   double beta_start, double beta_end, BetaSpacing spacing) {
  if (num_train_steps < 1 || num_sample_steps < 1 || num_sample_steps > num_train_steps) {
    throw Error(ErrorCode::invalid_range,
                "need 1 <= num_sample_steps <= num_train_steps, got " +
                    std::to_string(num_sample_steps) + "/" + std::to_string(num_train_steps));
  }
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    throw Error(ErrorCode::invalid_range, "need 0 < beta_start <= beta_end < 1");
  }

  // Full training-resolution tables.
  std::vector<double> train_betas(num_train_steps);
  for (int j = 0; j < num_train_steps; ++j) {
    double u = num_train_steps == 1 ? 0.0 : static_cast<double>(j) / (num_train_steps - 1);
    if (spacing == BetaSpacing::linear) {
      train_betas[j] = beta_start + (beta_end - beta_start) * u;
    } else {
      double r = std::sqrt(beta_start) + (std::sqrt(beta_end) - std::sqrt(beta_start)) * u;
      train_betas[j] = r * r;
    }
  }
  std::vector<double> train_alpha_bars(num_train_steps);
  double prod = 1.0;
  for (int j = 0; j < num_train_steps; ++j) {
    prod *= 1.0 - train_betas[j];
    train_alpha_bars[j] = prod;
  }

  // Leading subsampling: t_i = 1 + (i-1) * floor(train/sample), i = 1..num_sample.
  int stride = num_train_steps / num_sample_steps;
  NoiseSchedule s;
  s.timestep_map_.resize(num_sample_steps);
  s.alpha_bars_.resize(num_sample_steps);
  s.betas_.resize(num_sample_steps);
  s.alphas_.resize(num_sample_steps);
  double prev_ab = 1.0;
  for (int i = 0; i < num_sample_steps; ++i) {
    int t = 1 + i * stride;
    s.timestep_map_[i] = t;
    double ab = train_alpha_bars[t - 1];
    s.alpha_bars_[i] = ab;
    // Effective per-sampler-step alpha so the product invariant telescopes.
    s.alphas_[i] = ab / prev_ab;
    s.betas_[i] = 1.0 - s.alphas_[i];
    prev_ab = ab;
  }
  s.has_params_ = true;
  s.params_ = {num_train_steps, num_sample_steps, beta_start, beta_end, spacing};
  return s;
}

NoiseSchedule NoiseSchedule::from_betas(const std::vector<double>& betas) {
  if (betas.empty()) {
    throw Error(ErrorCode::invalid_range, "from_betas needs at least one beta");
  }
  NoiseSchedule s;
  double prod = 1.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    double b = betas[i];
    if (!(b >= 0.0) || !(b < 1.0)) {
      throw Error(ErrorCode::invalid_range, "beta out of [0,1) at index " + std::to_string(i));
    }
    s.betas_.push_back(b);
    s.alphas_.push_back(1.0 - b);
    prod *= 1.0 - b;
    s.alpha_bars_.push_back(prod);
    s.timestep_map_.push_back(static_cast<int>(i) + 1);
  }
  return s;
}

const ScheduleParams& NoiseSchedule::params() const {
  if (!has_params_) {
    throw Error(ErrorCode::bad_format, "schedule was built from raw betas, no build params");
  }
  return params_;
}

bool NoiseSchedule::same_as(const NoiseSchedule& other) const {
  return betas_ == other.betas_ && alpha_bars_ == other.alpha_bars_ &&
         timestep_map_ == other.timestep_map_;
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > num_steps()) {
    throw Error(ErrorCode::index_out_of_range,
                "step " + std::to_string(t) + " outside [1," + std::to_string(num_steps()) + "]");
  }
}

void NoiseSchedule::check_level(int t) const {
  if (t < 0 || t > num_steps()) {
    throw Error(ErrorCode::index_out_of_range,
                "level " + std::to_string(t) + " outside [0," + std::to_string(num_steps()) + "]");
  }
}

Tensor predict_clean(const Tensor& z_t, const Tensor& eps, int t, const NoiseSchedule& schedule) {
  require_same_shape(z_t, eps, "predict_clean");
  double ab = schedule.alpha_bar(t);
  double sa = std::sqrt(ab);
  double sn = std::sqrt(1.0 - ab);
  Tensor out = zeros_like(z_t);
  const float* z = z_t.data();
  const float* e = eps.data();
  float* o = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    o[i] = static_cast<float>((z[i] - sn * e[i]) / sa);
  }
  return out;
}

Tensor ddim_step(const Tensor& z_t, const Tensor& eps_for_direction, const Tensor& eps_for_clean,
                 int t, int t_prev, const NoiseSchedule& schedule) {
  require_same_shape(z_t, eps_for_direction, "ddim_step direction");
  require_same_shape(z_t, eps_for_clean, "ddim_step clean");
  if (t_prev >= t) {
    throw Error(ErrorCode::index_out_of_range,
                "ddim_step needs t_prev < t, got " + std::to_string(t_prev) + " >= " + std::to_string(t));
  }
  double ab_t = schedule.alpha_bar(t);
  double ab_p = schedule.alpha_bar(t_prev);
  double sa_t = std::sqrt(ab_t);
  double sn_t = std::sqrt(1.0 - ab_t);
  double sa_p = std::sqrt(ab_p);
  double sn_p = std::sqrt(1.0 - ab_p);
  Tensor out = zeros_like(z_t);
  const float* z = z_t.data();
  const float* ed = eps_for_direction.data();
  const float* ec = eps_for_clean.data();
  float* o = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double z0 = (z[i] - sn_t * ec[i]) / sa_t;
    o[i] = static_cast<float>(sa_p * z0 + sn_p * ed[i]);
  }
  return out;
}

Tensor ddim_inverse_step(const Tensor& z_t, const Tensor& eps, int t, int t_next,
                         const NoiseSchedule& schedule) {
  require_same_shape(z_t, eps, "ddim_inverse_step");
  if (t_next <= t) {
    throw Error(ErrorCode::index_out_of_range,
                "ddim_inverse_step needs t_next > t, got " + std::to_string(t_next) + " <= " + std::to_string(t));
  }
  double ab_t = schedule.alpha_bar(t);
  double ab_n = schedule.alpha_bar(t_next);
  double sa_t = std::sqrt(ab_t);
  double sn_t = std::sqrt(1.0 - ab_t);
  double sa_n = std::sqrt(ab_n);
  double sn_n = std::sqrt(1.0 - ab_n);
  Tensor out = zeros_like(z_t);
  const float* z = z_t.data();
  const float* e = eps.data();
  float* o = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double z0 = (z[i] - sn_t * e[i]) / sa_t;
    o[i] = static_cast<float>(sa_n * z0 + sn_n * e[i]);
  }
  return out;
}

const char* to_string(BetaSpacing spacing) {
  return spacing == BetaSpacing::linear ? "linear" : "quadratic";
}

BetaSpacing beta_spacing_from_string(const std::string& s) {
  if (s == "linear") return BetaSpacing::linear;
  if (s == "quadratic") return BetaSpacing::quadratic;
  throw Error(ErrorCode::invalid_range, "unknown beta spacing '" + s + "'");
}

}  // namespace tiledit
