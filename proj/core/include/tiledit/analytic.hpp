#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tiledit/estimator.hpp"
#include "tiledit/manifest.hpp"
#include "tiledit/rng.hpp"
#include "tiledit/tensor.hpp"

namespace tiledit {

// One mixture component over a flattened world block (d = h*w*c values,
// row-major). Covariance is either a diagonal (d entries) or a full matrix
// (d*d entries, row-major). Schedule math runs in doubles, so means and
// covariances are stored as doubles too.
struct GaussianComponent {
  std::vector<double> mean;
  bool diagonal = true;
  std::vector<double> cov;
};

// Closed-form toy data distribution: latents are made of independent
// (block_height x block_width x block_channels) blocks, each drawn from this
// Gaussian mixture. Block independence is what lets the analytic estimator
// accept canvases of any block-multiple size.
struct GaussianMixtureWorld {
  std::string name = "world";
  int block_height = 1;
  int block_width = 1;
  int block_channels = 1;
  std::vector<GaussianComponent> components;
  std::vector<double> class_priors;

  int dim() const { return block_height * block_width * block_channels; }
  int num_classes() const { return static_cast<int>(components.size()); }

  void validate() const;

  Manifest to_manifest() const;
  static GaussianMixtureWorld from_manifest(const Manifest& m);
  void save(const std::string& path) const;
  static GaussianMixtureWorld load(const std::string& path);

  // Built-in worlds, addressable by name from the CLI.
  //   "unit"     1x1x2 single zero-mean unit-covariance class
  //   "blob"     1x1x2 single class, nonzero mean, anisotropic diagonal
  //   "twoclass" 2x2x1 two classes with distinct means, diagonal covariance
  //   "texture"  4x4x1 stripe-mean vs checker-mean classes, diagonal covariance
  static GaussianMixtureWorld builtin(const std::string& name);
};

// Exact posterior mean of the noise: eps = (z_t - sqrt(ab) E[z0|z_t, cond]) /
// sqrt(1 - ab), with E[z0|...] by Gaussian conditioning per class; null
// conditioning mixes classes by their posterior probabilities. ab == 1 returns
// zeros (no-noise limit).
Tensor analytic_epsilon(const GaussianMixtureWorld& world, const Tensor& z_t, int t,
                        const Conditioning& cond, const NoiseSchedule& schedule);

// Draw a canvas of independent world blocks. cls picks one component for all
// blocks; cls == -1 draws each block's class from the priors.
Tensor sample_world(const GaussianMixtureWorld& world, int canvas_height, int canvas_width,
                    int cls, Prng& rng);

class AnalyticEstimator : public NoiseEstimator {
 public:
  AnalyticEstimator(GaussianMixtureWorld world, NoiseSchedule schedule);

  int base_height() const override { return world_.block_height; }
  int base_width() const override { return world_.block_width; }
  int channels() const override { return world_.block_channels; }
  bool supports_dilation() const override { return false; }
  const NoiseSchedule& schedule() const override { return schedule_; }
  std::string id() const override { return "analytic:" + world_.name; }

  Tensor predict(const Tensor& z_t, int t, const Conditioning& cond) const override {
    return analytic_epsilon(world_, z_t, t, cond, schedule_);
  }

  const GaussianMixtureWorld& world() const { return world_; }

 private:
  GaussianMixtureWorld world_;
  NoiseSchedule schedule_;
};

}  // namespace tiledit
