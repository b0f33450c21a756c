#pragma once

#include <memory>
#include <string>

#include "tiledit/estimator.hpp"

namespace tiledit {

// Loads an externally trained denoiser from a model locator and wraps it
// behind the NoiseEstimator contract (re-dilation included). The only
// locator scheme bundled here is a local conv-denoiser model directory as
// written by ConvDenoiser::save / the train-toy command; anything else
// (remote checkpoints, full-scale latent diffusion weights) raises
// ModelUnavailable so callers can degrade gracefully.
std::shared_ptr<const NoiseEstimator> pretrained_adapter(const std::string& model_locator);

}  // namespace tiledit
