#include "tiledit/codec.hpp"

#include <algorithm>
#include <cstdlib>

#include "tiledit/errors.hpp"

namespace tiledit {

namespace {

void check_channels(const Tensor& t, int want, const char* what) {
  if (t.channels() != want) {
    throw Error(ErrorCode::shape_mismatch,
                std::string(what) + " expects " + std::to_string(want) + " channels, got " +
                    std::to_string(t.channels()));
  }
}

void check_divisible(const Tensor& t, int f) {
  if (t.height() % f != 0 || t.width() % f != 0) {
    throw Error(ErrorCode::not_divisible,
                "image " + t.shape_string() + " not divisible by codec factor " + std::to_string(f));
  }
}

}  // namespace

std::string IdentityCodec::id() const { return "identity"; }

Tensor IdentityCodec::encode(const Tensor& image) const {
  check_channels(image, channels_, "identity encode");
  return image;
}

Tensor IdentityCodec::decode(const Tensor& latent) const {
  check_channels(latent, channels_, "identity decode");
  Tensor out = latent;
  for (float& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

BoxCodec::BoxCodec(int factor, int channels) : factor_(factor), channels_(channels) {
  if (factor < 2) {
    throw Error(ErrorCode::invalid_factor, "box codec factor must be >= 2");
  }
}

std::string BoxCodec::id() const { return "box" + std::to_string(factor_); }

Tensor BoxCodec::encode(const Tensor& image) const {
  check_channels(image, channels_, "box encode");
  check_divisible(image, factor_);
  int oh = image.height() / factor_;
  int ow = image.width() / factor_;
  Tensor out(oh, ow, channels_);
  float inv = 1.0f / (factor_ * factor_);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      for (int c = 0; c < channels_; ++c) {
        float sum = 0.0f;
        for (int dy = 0; dy < factor_; ++dy) {
          for (int dx = 0; dx < factor_; ++dx) {
            sum += image.at(y * factor_ + dy, x * factor_ + dx, c);
          }
        }
        out.at(y, x, c) = sum * inv;
      }
    }
  }
  return out;
}

Tensor BoxCodec::decode(const Tensor& latent) const {
  check_channels(latent, channels_, "box decode");
  Tensor out(latent.height() * factor_, latent.width() * factor_, channels_);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < channels_; ++c) {
        out.at(y, x, c) = std::clamp(latent.at(y / factor_, x / factor_, c), 0.0f, 1.0f);
      }
    }
  }
  return out;
}

std::shared_ptr<const LatentCodec> make_codec(const std::string& name, int channels) {
  if (name == "identity") {
    return std::make_shared<IdentityCodec>(channels);
  }
  if (name.rfind("box", 0) == 0) {
    const std::string digits = name.substr(3);
    if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos) {
      return std::make_shared<BoxCodec>(std::atoi(digits.c_str()), channels);
    }
  }
  if (name.rfind("external:", 0) == 0) {
    throw Error(ErrorCode::model_unavailable,
                "no autoencoder adapter is bundled; cannot load '" + name + "'");
  }
  throw Error(ErrorCode::unsupported_backend, "unknown codec '" + name + "'");
}

}  // namespace tiledit
