#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tiledit/errors.hpp"

namespace tiledit {

// Dense rank-3 float tensor in (height, width, channels) layout, row-major
// with channels fastest. This is the only latent carrier in the library;
// spatial dims are latent cells, not pixels.
class Tensor {
 public:
  Tensor() = default;

  Tensor(int height, int width, int channels)
      : height_(height), width_(width), channels_(channels) {
    if (height <= 0 || width <= 0 || channels <= 0) {
      throw Error(ErrorCode::invalid_range,
                  "tensor dims must be positive, got " + shape_string(height, width, channels));
    }
    values_.assign(static_cast<std::size_t>(height) * width * channels, 0.0f);
  }

  static Tensor full(int height, int width, int channels, float value) {
    Tensor t(height, width, channels);
    for (float& v : t.values_) v = value;
    return t;
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  bool empty() const { return values_.empty(); }
  std::size_t size() const { return values_.size(); }

  float& at(int y, int x, int c) { return values_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return values_[index(y, x, c)]; }

  float* data() { return values_.data(); }
  const float* data() const { return values_.data(); }
  std::vector<float>& values() { return values_; }
  const std::vector<float>& values() const { return values_; }

  bool same_shape(const Tensor& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  std::string shape_string() const { return shape_string(height_, width_, channels_); }

  static std::string shape_string(int h, int w, int c) {
    return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
  }

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> values_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::shape_mismatch,
                std::string(what) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

inline Tensor zeros_like(const Tensor& t) {
  return Tensor(t.height(), t.width(), t.channels());
}

}  // namespace tiledit
