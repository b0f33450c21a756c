#include "tiledit/nn.hpp"

#include <cmath>

#include "tiledit/errors.hpp"

namespace tiledit {

Conv2d::Conv2d(std::string layer_name, int in_ch, int out_ch, int k)
    : name(std::move(layer_name)), in_channels(in_ch), out_channels(out_ch), ksize(k) {
  if (in_ch < 1 || out_ch < 1 || k < 1 || k % 2 == 0) {
    throw Error(ErrorCode::invalid_range, "conv needs positive channels and odd kernel size");
  }
  weight.assign(weight_count(), 0.0f);
  bias.assign(out_channels, 0.0f);
}

void Conv2d::init_he(Prng& rng) {
  float scale = std::sqrt(2.0f / (static_cast<float>(ksize) * ksize * in_channels));
  for (float& w : weight) w = rng.normal_f() * scale;
  for (float& b : bias) b = 0.0f;
}

Tensor Conv2d::forward(const Tensor& x, int dilation) const {
  if (x.channels() != in_channels) {
    throw Error(ErrorCode::shape_mismatch,
                "conv '" + name + "' expects " + std::to_string(in_channels) +
                    " input channels, got " + std::to_string(x.channels()));
  }
  if (dilation < 1) {
    throw Error(ErrorCode::invalid_factor, "dilation must be >= 1");
  }
  const int h = x.height(), w = x.width();
  const int half = ksize / 2;
  Tensor out(h, w, out_channels);
  for (int y = 0; y < h; ++y) {
    for (int xc = 0; xc < w; ++xc) {
      float* op = out.data() + (static_cast<std::size_t>(y) * w + xc) * out_channels;
      for (int oc = 0; oc < out_channels; ++oc) {
        float acc = bias[oc];
        const float* wp = weight.data() +
                          static_cast<std::size_t>(oc) * ksize * ksize * in_channels;
        for (int ky = 0; ky < ksize; ++ky) {
          int yi = y + (ky - half) * dilation;
          if (yi < 0 || yi >= h) continue;
          for (int kx = 0; kx < ksize; ++kx) {
            int xi = xc + (kx - half) * dilation;
            if (xi < 0 || xi >= w) continue;
            const float* ip = x.data() + (static_cast<std::size_t>(yi) * w + xi) * in_channels;
            const float* wk = wp + (static_cast<std::size_t>(ky) * ksize + kx) * in_channels;
            for (int ic = 0; ic < in_channels; ++ic) acc += wk[ic] * ip[ic];
          }
        }
        op[oc] = acc;
      }
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& grad_out, int dilation,
                        std::vector<float>& grad_weight, std::vector<float>& grad_bias) const {
  if (grad_out.height() != x.height() || grad_out.width() != x.width() ||
      grad_out.channels() != out_channels) {
    throw Error(ErrorCode::shape_mismatch, "conv backward shape mismatch");
  }
  if (grad_weight.size() != weight.size() || grad_bias.size() != bias.size()) {
    throw Error(ErrorCode::count_mismatch, "gradient buffers have the wrong size");
  }
  const int h = x.height(), w = x.width();
  const int half = ksize / 2;
  Tensor grad_in(h, w, in_channels);
  for (int y = 0; y < h; ++y) {
    for (int xc = 0; xc < w; ++xc) {
      const float* gp = grad_out.data() + (static_cast<std::size_t>(y) * w + xc) * out_channels;
      for (int oc = 0; oc < out_channels; ++oc) {
        float g = gp[oc];
        grad_bias[oc] += g;
        float* gwp = grad_weight.data() +
                     static_cast<std::size_t>(oc) * ksize * ksize * in_channels;
        const float* wp = weight.data() +
                          static_cast<std::size_t>(oc) * ksize * ksize * in_channels;
        for (int ky = 0; ky < ksize; ++ky) {
          int yi = y + (ky - half) * dilation;
          if (yi < 0 || yi >= h) continue;
          for (int kx = 0; kx < ksize; ++kx) {
            int xi = xc + (kx - half) * dilation;
            if (xi < 0 || xi >= w) continue;
            const float* ip = x.data() + (static_cast<std::size_t>(yi) * w + xi) * in_channels;
            float* gip = grad_in.data() + (static_cast<std::size_t>(yi) * w + xi) * in_channels;
            float* gwk = gwp + (static_cast<std::size_t>(ky) * ksize + kx) * in_channels;
            const float* wk = wp + (static_cast<std::size_t>(ky) * ksize + kx) * in_channels;
            for (int ic = 0; ic < in_channels; ++ic) {
              gwk[ic] += g * ip[ic];
              gip[ic] += g * wk[ic];
            }
          }
        }
      }
    }
  }
  return grad_in;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (float& v : out.values()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_y) {
  require_same_shape(x, grad_y, "relu_backward");
  Tensor out = grad_y;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (x.data()[i] <= 0.0f) out.data()[i] = 0.0f;
  }
  return out;
}

Tensor nn_upsample(const Tensor& x, int factor) {
  if (factor < 1) {
    throw Error(ErrorCode::invalid_factor, "upsample factor must be >= 1");
  }
  Tensor out(x.height() * factor, x.width() * factor, x.channels());
  int ch = x.channels();
  for (int y = 0; y < out.height(); ++y) {
    for (int xc = 0; xc < out.width(); ++xc) {
      const float* src = x.data() + (static_cast<std::size_t>(y / factor) * x.width() + xc / factor) * ch;
      float* dst = out.data() + (static_cast<std::size_t>(y) * out.width() + xc) * ch;
      for (int c = 0; c < ch; ++c) dst[c] = src[c];
    }
  }
  return out;
}

void Adam::init(std::size_t n) {
  m.assign(n, 0.0);
  v.assign(n, 0.0);
  steps = 0;
}

void Adam::update(std::vector<float>& params, const std::vector<float>& grads) {
  if (params.size() != m.size() || grads.size() != m.size()) {
    throw Error(ErrorCode::count_mismatch, "adam buffers out of sync");
  }
  ++steps;
  double bc1 = 1.0 - std::pow(beta1, steps);
  double bc2 = 1.0 - std::pow(beta2, steps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    double mh = m[i] / bc1;
    double vh = v[i] / bc2;
    params[i] -= static_cast<float>(lr * mh / (std::sqrt(vh) + eps));
  }
}

}  // namespace tiledit
