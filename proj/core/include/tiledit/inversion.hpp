#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tiledit/codec.hpp"
#include "tiledit/estimator.hpp"
#include "tiledit/schedule.hpp"
#include "tiledit/tiling.hpp"

namespace tiledit {

// Product of the tiled inversion: the assembled terminal latent plus enough
// metadata to run editing or reconstruction as a separate invocation.
struct InvertedLatent {
  Tensor z_T_star;   // latent canvas at the terminal step, dims (H/f, W/f, c)
  TilePlan plan;
  NoiseSchedule schedule;
  // Per tile, per step noise evaluations in step order (exactly T per tile);
  // empty when caching was off. Enables exact algebraic replay.
  std::vector<std::vector<Tensor>> eps_cache;
  std::uint64_t seed = 0;
  std::string backend_id;

  bool has_cache() const { return !eps_cache.empty(); }

  // Directory layout: latent.lts + inverted.manifest (+ eps_tile<i>.lts when
  // cached, each packing the tile's T epsilons as one rank-4 container).
  void save(const std::string& dir) const;
  static InvertedLatent load(const std::string& dir);
};

// The per-tile recursion: starting from the clean encoded tile, evaluate the
// unconditional noise at the current level j and step j -> j+1, T times.
// Returns the terminal tile latent and, when cache_eps, the T evaluations in
// step order.
std::pair<Tensor, std::vector<Tensor>> invert_single_tile(const Tensor& z0,
                                                          const NoiseSchedule& schedule,
                                                          const NoiseEstimator& estimator,
                                                          bool cache_eps);

// Crops each pixel tile of the plan, encodes it, inverts it at base latent
// resolution and places the result at the tile's latent rect. Conditioning is
// fixed to null internally; no conditional estimator call ever happens here.
// Tiles are independent and run in parallel; the assembled canvas is
// bit-identical to sequential processing.
InvertedLatent tiled_ddim_invert(const Tensor& image, const TilePlan& plan,
                                 const NoiseSchedule& schedule, const NoiseEstimator& estimator,
                                 const LatentCodec& codec, bool cache_eps,
                                 std::uint64_t seed = 0);

}  // namespace tiledit
