#pragma once

#include <memory>
#include <vector>

#include "tiledit/conv_denoiser.hpp"

namespace tiledit {

// Procedural class-conditional texture corpus at base latent resolution.
// Class 0: horizontal stripes. Class 1: checkerboard. Values live in [0,1]
// with per-image randomized band size, phase and a little additive noise.
struct CorpusSpec {
  int base_height = 32;
  int base_width = 32;
  int channels = 3;
  int num_classes = 2;
  int images_per_class = 64;
};

// Deterministic in (spec, seed, cls, index).
Tensor corpus_image(const CorpusSpec& spec, int cls, std::uint64_t seed, int index);

struct TrainOptions {
  double lr = 2e-3;
  double null_drop = 0.1;  // classifier-free conditioning dropout
};

struct TrainResult {
  std::shared_ptr<ConvDenoiser> estimator;
  std::vector<double> epoch_loss;  // mean noise-prediction MSE per epoch
};

// Train the toy denoiser on the forward-process noise-prediction objective:
// sample an image, a step t and a noise draw, build z_t and regress the
// predicted noise against the true one. Single-threaded; fixed seed gives
// bit-identical weights.
TrainResult train_toy(const CorpusSpec& corpus, const NoiseSchedule& schedule, int epochs,
                      std::uint64_t seed, const TrainOptions& options = {});

}  // namespace tiledit
