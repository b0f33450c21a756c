#pragma once

#include <memory>
#include <string>

#include "tiledit/tensor.hpp"

namespace tiledit {

// Encoder/decoder pair bridging pixel space and latent space. Pixel values
// are reals in [0,1]; decode clamps to that range. encode divides spatial
// dims by spatial_factor, decode multiplies them back.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;

  virtual int spatial_factor() const = 0;
  virtual int pixel_channels() const = 0;
  virtual int latent_channels() const = 0;
  virtual std::string id() const = 0;

  // pre: image dims divisible by spatial_factor, channels == pixel_channels.
  virtual Tensor encode(const Tensor& image) const = 0;
  // pre: latent channels == latent_channels. Output clamped to [0,1].
  virtual Tensor decode(const Tensor& latent) const = 0;
};

// Pass-through codec (factor 1). channels is configurable so toy worlds with
// one or two channels can run the full pipeline.
class IdentityCodec : public LatentCodec {
 public:
  explicit IdentityCodec(int channels = 3) : channels_(channels) {}
  int spatial_factor() const override { return 1; }
  int pixel_channels() const override { return channels_; }
  int latent_channels() const override { return channels_; }
  std::string id() const override;
  Tensor encode(const Tensor& image) const override;
  Tensor decode(const Tensor& latent) const override;

 private:
  int channels_;
};

// Box-average downsample on encode, nearest-neighbor upsample on decode.
// Lossless for latents already in [0,1] (decode then encode returns the
// latent bit-near-exactly), lossy on pixel detail below the factor scale.
class BoxCodec : public LatentCodec {
 public:
  BoxCodec(int factor, int channels = 3);
  int spatial_factor() const override { return factor_; }
  int pixel_channels() const override { return channels_; }
  int latent_channels() const override { return channels_; }
  std::string id() const override;
  Tensor encode(const Tensor& image) const override;
  Tensor decode(const Tensor& latent) const override;

 private:
  int factor_;
  int channels_;
};

// Names: "identity", "boxN" (N = 2, 4, 8, ...), "external:<locator>" reserved
// for autoencoder adapters (raises ModelUnavailable; no adapter ships here).
std::shared_ptr<const LatentCodec> make_codec(const std::string& name, int channels = 3);

}  // namespace tiledit
