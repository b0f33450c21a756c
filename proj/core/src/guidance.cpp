#include "tiledit/guidance.hpp"

#include <utility>

#include "tiledit/errors.hpp"
#include "tiledit/schedule.hpp"

namespace tiledit {

const char* to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::cfg: return "CFG";
    case GuidanceMode::cfgpp: return "CFGPP";
    case GuidanceMode::ndcfg: return "NDCFG";
    case GuidanceMode::ndcfgpp: return "NDCFGPP";
  }
  return "NDCFGPP";
}

GuidanceMode guidance_mode_from_string(const std::string& s) {
  if (s == "CFG") return GuidanceMode::cfg;
  if (s == "CFGPP") return GuidanceMode::cfgpp;
  if (s == "NDCFG") return GuidanceMode::ndcfg;
  if (s == "NDCFGPP") return GuidanceMode::ndcfgpp;
  throw Error(ErrorCode::bad_format, "unknown guidance mode '" + s + "'");
}

bool is_lambda_mode(GuidanceMode mode) {
  return mode == GuidanceMode::cfgpp || mode == GuidanceMode::ndcfgpp;
}

const char* to_string(VanillaEval eval) {
  return eval == VanillaEval::full_canvas ? "full-canvas" : "tile-wise";
}

VanillaEval vanilla_eval_from_string(const std::string& s) {
  if (s == "full-canvas") return VanillaEval::full_canvas;
  if (s == "tile-wise") return VanillaEval::tile_wise;
  throw Error(ErrorCode::bad_format, "unknown vanilla evaluation mode '" + s + "'");
}

void GuidanceConfig::validate(int num_steps) const {
  if (is_lambda_mode(mode)) {
    if (scale < 0.0 || scale > 1.0) {
      throw Error(ErrorCode::scale_out_of_range,
                  "lambda must lie in [0,1], got " + std::to_string(scale));
    }
  } else if (scale < 0.0) {
    throw Error(ErrorCode::scale_out_of_range,
                "omega must be non-negative, got " + std::to_string(scale));
  }
  if (tau < 0 || tau > num_steps) {
    throw Error(ErrorCode::invalid_range,
                "tau must lie in [0," + std::to_string(num_steps) + "], got " +
                    std::to_string(tau));
  }
  if (dilation_factor < 1) {
    throw Error(ErrorCode::invalid_factor, "dilation factor must be >= 1");
  }
}

void GuidanceConfig::to_manifest(Manifest& m, const std::string& prefix) const {
  m.set(prefix + "mode", to_string(mode));
  m.set_double(prefix + "scale", scale);
  m.set_int(prefix + "tau", tau);
  m.set_int(prefix + "dilation_factor", dilation_factor);
  m.set_bool(prefix + "invert_switch", invert_switch);
  m.set(prefix + "vanilla_eval", to_string(vanilla_eval));
}

GuidanceConfig GuidanceConfig::from_manifest(const Manifest& m, const std::string& prefix) {
  GuidanceConfig cfg;
  cfg.mode = guidance_mode_from_string(m.get(prefix + "mode"));
  cfg.scale = m.get_double(prefix + "scale");
  cfg.tau = static_cast<int>(m.get_int(prefix + "tau"));
  cfg.dilation_factor = static_cast<int>(m.get_int(prefix + "dilation_factor"));
  cfg.invert_switch = m.get_bool(prefix + "invert_switch");
  cfg.vanilla_eval = vanilla_eval_from_string(m.get(prefix + "vanilla_eval"));
  return cfg;
}

Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond, double omega) {
  require_same_shape(eps_cond, eps_uncond, "cfg_combine");
  Tensor out(eps_cond.height(), eps_cond.width(), eps_cond.channels());
  // Per-cell math in double so omega = 0 and omega = 1 return the inputs
  // exactly after the final rounding.
  for (std::size_t i = 0; i < out.size(); ++i) {
    double u = eps_uncond.data()[i];
    double c = eps_cond.data()[i];
    out.data()[i] = static_cast<float>(u + omega * (c - u));
  }
  return out;
}

namespace {

Tensor subtract(const Tensor& a, const Tensor& b) {
  Tensor out(a.height(), a.width(), a.channels());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

// eps_base + scale * residual, the shared combine of all four rules. Double
// per-cell math keeps scale in [0,1] an interpolation along the residual
// segment even after rounding.
Tensor combine_along(const Tensor& eps_base, const Tensor& residual, double scale) {
  Tensor out(eps_base.height(), eps_base.width(), eps_base.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double b = eps_base.data()[i];
    out.data()[i] = static_cast<float>(b + scale * residual.data()[i]);
  }
  return out;
}

void check_lambda(double lam) {
  if (lam < 0.0 || lam > 1.0) {
    throw Error(ErrorCode::scale_out_of_range,
                "lambda must lie in [0,1], got " + std::to_string(lam));
  }
}

}  // namespace

StepOutput ndcfg_step(const Tensor& z_t, int t, int t_prev, const NoiseEstimator& vanilla,
                      const NoiseEstimator& dilated, const Conditioning& cond, double omega,
                      const NoiseSchedule& schedule) {
  require_same_schedule(vanilla, schedule);
  require_same_schedule(dilated, schedule);
  Tensor eps_dc = dilated.predict(z_t, t, cond);
  Tensor eps_du = dilated.predict(z_t, t, Conditioning::null_conditioning());
  Tensor eps_vu = vanilla.predict(z_t, t, Conditioning::null_conditioning());
  require_same_shape(eps_dc, z_t, "ndcfg_step");
  require_same_shape(eps_vu, z_t, "ndcfg_step");
  StepOutput out;
  out.residual = subtract(eps_dc, eps_du);
  out.eps_guided = combine_along(eps_vu, out.residual, omega);
  out.eps_uncond_vanilla = std::move(eps_vu);
  out.z_prev = ddim_step(z_t, out.eps_guided, out.eps_guided, t, t_prev, schedule);
  return out;
}

StepOutput ndcfgpp_step(const Tensor& z_t, int t, int t_prev, const NoiseEstimator& vanilla,
                        const NoiseEstimator& dilated, const Conditioning& cond, double lam,
                        const NoiseSchedule& schedule) {
  check_lambda(lam);
  require_same_schedule(vanilla, schedule);
  require_same_schedule(dilated, schedule);
  Tensor eps_dc = dilated.predict(z_t, t, cond);
  Tensor eps_du = dilated.predict(z_t, t, Conditioning::null_conditioning());
  Tensor eps_vu = vanilla.predict(z_t, t, Conditioning::null_conditioning());
  require_same_shape(eps_dc, z_t, "ndcfgpp_step");
  require_same_shape(eps_vu, z_t, "ndcfgpp_step");
  StepOutput out;
  out.residual = subtract(eps_dc, eps_du);
  out.eps_guided = combine_along(eps_vu, out.residual, lam);
  out.eps_uncond_vanilla = std::move(eps_vu);
  // Renoise in the direction of the vanilla unconditional prediction; the
  // guided prediction only shapes the clean estimate.
  out.z_prev = ddim_step(z_t, out.eps_uncond_vanilla, out.eps_guided, t, t_prev, schedule);
  return out;
}

StepOutput cfgpp_step(const Tensor& z_t, int t, int t_prev, const NoiseEstimator& dilated,
                      const Conditioning& cond, double lam, const NoiseSchedule& schedule) {
  check_lambda(lam);
  require_same_schedule(dilated, schedule);
  Tensor eps_dc = dilated.predict(z_t, t, cond);
  Tensor eps_du = dilated.predict(z_t, t, Conditioning::null_conditioning());
  require_same_shape(eps_dc, z_t, "cfgpp_step");
  StepOutput out;
  out.residual = subtract(eps_dc, eps_du);
  out.eps_guided = combine_along(eps_du, out.residual, lam);
  out.eps_uncond_vanilla = std::move(eps_du);
  out.z_prev = ddim_step(z_t, out.eps_uncond_vanilla, out.eps_guided, t, t_prev, schedule);
  return out;
}

namespace {

class TileWiseEstimator : public NoiseEstimator {
 public:
  explicit TileWiseEstimator(std::shared_ptr<const NoiseEstimator> inner)
      : inner_(std::move(inner)) {}

  int base_height() const override { return inner_->base_height(); }
  int base_width() const override { return inner_->base_width(); }
  int channels() const override { return inner_->channels(); }
  bool supports_dilation() const override { return false; }
  const NoiseSchedule& schedule() const override { return inner_->schedule(); }
  std::string id() const override { return "tile-wise:" + inner_->id(); }

  Tensor predict(const Tensor& z_t, int t, const Conditioning& cond) const override {
    const int th = inner_->base_height(), tw = inner_->base_width();
    if (z_t.height() % th != 0 || z_t.width() % tw != 0) {
      throw Error(ErrorCode::shape_mismatch,
                  "canvas " + z_t.shape_string() + " is not a multiple of the base tile " +
                      std::to_string(th) + "x" + std::to_string(tw));
    }
    if (z_t.channels() != inner_->channels()) {
      throw Error(ErrorCode::shape_mismatch, "channel count mismatch in tile-wise evaluation");
    }
    Tensor out(z_t.height(), z_t.width(), z_t.channels());
    for (int ty = 0; ty < z_t.height(); ty += th) {
      for (int tx = 0; tx < z_t.width(); tx += tw) {
        Tensor tile(th, tw, z_t.channels());
        for (int y = 0; y < th; ++y) {
          for (int x = 0; x < tw; ++x) {
            for (int c = 0; c < z_t.channels(); ++c) {
              tile.at(y, x, c) = z_t.at(ty + y, tx + x, c);
            }
          }
        }
        Tensor pred = inner_->predict(tile, t, cond);
        for (int y = 0; y < th; ++y) {
          for (int x = 0; x < tw; ++x) {
            for (int c = 0; c < z_t.channels(); ++c) {
              out.at(ty + y, tx + x, c) = pred.at(y, x, c);
            }
          }
        }
      }
    }
    return out;
  }

 private:
  std::shared_ptr<const NoiseEstimator> inner_;
};

}  // namespace

std::shared_ptr<const NoiseEstimator> tile_wise(std::shared_ptr<const NoiseEstimator> estimator) {
  return std::make_shared<TileWiseEstimator>(std::move(estimator));
}

}  // namespace tiledit
