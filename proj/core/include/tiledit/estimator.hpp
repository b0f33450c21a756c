#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tiledit/conditioning.hpp"
#include "tiledit/schedule.hpp"
#include "tiledit/tensor.hpp"

namespace tiledit {

// One re-dilation rule: convolution layers whose name matches `pattern`
// (exact name or a trailing-'*' prefix glob) run with dilation `factor`
// while the sampler step t is inside [t_min, t_max]. Steps are indices of
// the estimator's bound schedule.
struct DilationRule {
  std::string pattern;
  int factor = 1;
  int t_min = 0;
  int t_max = 1 << 30;
};

// Declarative description of which layers get dilated when. Serialized as
// one rule per line: "pattern factor t_min t_max".
struct DilationProfile {
  std::vector<DilationRule> rules;

  // Every convolution, every timestep, one factor. What the toy backend uses
  // when redilate(f) is called without a custom profile.
  static DilationProfile uniform(int factor);

  static DilationProfile parse(const std::string& text);
  std::string serialize() const;

  bool empty() const { return rules.empty(); }

  // Dilation for `layer` at step t: the first matching rule wins; no match
  // means undilated (1).
  int factor_for(const std::string& layer, int t) const;
};

// The noise-estimator contract: predict the noise component of z_t at step t
// under a conditioning signal. Implementations are immutable after
// construction and safe for concurrent predict calls.
class NoiseEstimator : public std::enable_shared_from_this<NoiseEstimator> {
 public:
  virtual ~NoiseEstimator() = default;

  virtual int base_height() const = 0;
  virtual int base_width() const = 0;
  virtual int channels() const = 0;
  virtual bool supports_dilation() const = 0;
  virtual const NoiseSchedule& schedule() const = 0;
  virtual std::string id() const = 0;

  // pre: t in [0, T] of the bound schedule; z_t spatial dims accepted by the
  // backend (base dims, or a positive multiple where the backend allows).
  virtual Tensor predict(const Tensor& z_t, int t, const Conditioning& cond) const = 0;

  // Returns an estimator sharing this one's weights with convolution layers
  // re-dilated per the profile. Default: not supported.
  virtual std::shared_ptr<const NoiseEstimator> redilate_with(
      int factor, const DilationProfile& profile) const;

 protected:
  std::shared_ptr<const NoiseEstimator> shared_self() const {
    return shared_from_this();
  }
};

// Re-dilation entry point. factor == 1 returns the estimator unchanged;
// resolution-agnostic backends (the analytic oracle) return themselves;
// everything else defers to redilate_with using the backend's own default
// profile (uniform(factor) for the toy denoiser).
std::shared_ptr<const NoiseEstimator> redilate(std::shared_ptr<const NoiseEstimator> estimator,
                                               int factor);
std::shared_ptr<const NoiseEstimator> redilate(std::shared_ptr<const NoiseEstimator> estimator,
                                               int factor, const DilationProfile& profile);

// Guard used by sampling ops: the estimator must be bound to the same
// coefficient tables the op was handed. Throws ScheduleMismatch.
void require_same_schedule(const NoiseEstimator& estimator, const NoiseSchedule& schedule);

}  // namespace tiledit
