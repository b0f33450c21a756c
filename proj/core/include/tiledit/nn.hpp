#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tiledit/rng.hpp"
#include "tiledit/tensor.hpp"

namespace tiledit {

// Stride-1 square convolution with zero "same" padding. Dilation widens the
// receptive field without touching the weights: tap offsets are multiplied by
// the dilation rate and the padding grows to keep output dims equal to input
// dims. Weight layout [oc][ky][kx][ic], channels fastest, matching the HWC
// tensor layout so inner loops stay contiguous.
struct Conv2d {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  int ksize = 3;
  std::vector<float> weight;
  std::vector<float> bias;

  Conv2d() = default;
  Conv2d(std::string layer_name, int in_ch, int out_ch, int k);

  void init_he(Prng& rng);
  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * ksize * ksize * in_channels;
  }

  Tensor forward(const Tensor& x, int dilation) const;

  // Accumulates dL/dweight and dL/dbias into the provided buffers and returns
  // dL/dinput. Buffers must be pre-sized and zeroed by the caller.
  Tensor backward(const Tensor& x, const Tensor& grad_out, int dilation,
                  std::vector<float>& grad_weight, std::vector<float>& grad_bias) const;
};

Tensor relu(const Tensor& x);
// dL/dx given the forward input x and dL/dy.
Tensor relu_backward(const Tensor& x, const Tensor& grad_y);

// Nearest-neighbor spatial upsample by an integer factor.
Tensor nn_upsample(const Tensor& x, int factor);

// Per-parameter-group Adam.
struct Adam {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long steps = 0;
  std::vector<double> m;
  std::vector<double> v;

  void init(std::size_t n);
  void update(std::vector<float>& params, const std::vector<float>& grads);
};

}  // namespace tiledit
