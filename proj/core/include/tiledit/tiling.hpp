#pragma once

#include <vector>

#include "tiledit/tensor.hpp"

namespace tiledit {

// Whether tile geometry is expressed in pixels or in latent cells
// (pixel dims divided by the codec's spatial factor).
enum class Space { pixel, latent };

struct TileRect {
  int row0 = 0;
  int col0 = 0;
  int height = 0;
  int width = 0;
};

// Non-overlapping row-major partition of an (H, W) canvas into fixed-size
// tiles, with the codec factor carried along so the same plan addresses both
// pixel and latent space.
struct TilePlan {
  int canvas_height = 0;
  int canvas_width = 0;
  int tile_height = 0;
  int tile_width = 0;
  int latent_factor = 1;
  std::vector<TileRect> rects;  // row-major, top-left origin

  int rows() const { return canvas_height / tile_height; }
  int cols() const { return canvas_width / tile_width; }
  int tile_count() const { return static_cast<int>(rects.size()); }

  // The i-th tile's rect in latent cells (pixel rect divided by the factor).
  TileRect latent_rect(int i) const;
};

TilePlan plan_tiles(int canvas_height, int canvas_width, int tile_height, int tile_width,
                    int latent_factor);

// Copy of the rect region; channels preserved.
Tensor crop(const Tensor& canvas, const TileRect& rect);

// Assemble tiles (in plan order) into a canvas. space selects whether the
// tiles are pixel-sized or latent-sized.
Tensor stitch(const std::vector<Tensor>& tiles, const TilePlan& plan, Space space);

}  // namespace tiledit
