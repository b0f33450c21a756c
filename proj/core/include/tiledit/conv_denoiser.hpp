#pragma once

#include <memory>
#include <string>

#include "tiledit/estimator.hpp"
#include "tiledit/nn.hpp"

namespace tiledit {

struct ConvDenoiserSpec {
  int base_height = 32;
  int base_width = 32;
  int channels = 3;
  int hidden = 16;
  int embed_dim = 4;
  int num_classes = 2;  // plus one internal null class
};

// Tiny class-conditional convolutional noise predictor. Input features are
// the latent channels, two noise-level channels (sqrt(ab), sqrt(1-ab) from
// the bound schedule) and a learned class embedding broadcast over space;
// the null conditioning is a dedicated embedding row. Three 3x3 conv layers,
// ReLU between them. Accepts any positive multiple of the base dims (the
// layers are size-agnostic); the dilated view pins the multiple to its factor.
class ConvDenoiser : public NoiseEstimator {
 public:
  struct Params {
    Conv2d conv1, conv2, conv3;
    std::vector<float> class_embed;  // [(num_classes + 1) x embed_dim], null row last
  };

  ConvDenoiser(ConvDenoiserSpec spec, NoiseSchedule schedule, std::uint64_t init_seed);

  int base_height() const override { return spec_.base_height; }
  int base_width() const override { return spec_.base_width; }
  int channels() const override { return spec_.channels; }
  bool supports_dilation() const override { return true; }
  const NoiseSchedule& schedule() const override { return schedule_; }
  std::string id() const override { return "conv-denoiser"; }

  Tensor predict(const Tensor& z_t, int t, const Conditioning& cond) const override;
  std::shared_ptr<const NoiseEstimator> redilate_with(
      int factor, const DilationProfile& profile) const override;

  // Forward pass with an explicit dilation profile (null = undilated).
  Tensor forward(const Tensor& z_t, int t, const Conditioning& cond,
                 const DilationProfile* profile) const;

  const ConvDenoiserSpec& spec() const { return spec_; }
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  // Profile used by redilate() when the caller does not supply one; defaults
  // to uniform (every conv layer, every step).
  void set_default_profile(DilationProfile profile) { default_profile_ = std::move(profile); }
  const DilationProfile& default_profile() const { return default_profile_; }

  // Same weights bound to different coefficient tables. The net conditions on
  // the noise level (sqrt(ab)), not the raw index, so rebinding is legitimate.
  std::shared_ptr<ConvDenoiser> with_schedule(NoiseSchedule schedule) const;

  // Model directory: model.manifest + one container per parameter tensor
  // (+ dilation.profile when a custom default is set).
  void save(const std::string& dir) const;
  static std::shared_ptr<ConvDenoiser> load(const std::string& dir);

  int class_index(const Conditioning& cond) const;  // null -> num_classes

 private:
  ConvDenoiserSpec spec_;
  NoiseSchedule schedule_;
  Params params_;
  DilationProfile default_profile_;
};

}  // namespace tiledit
