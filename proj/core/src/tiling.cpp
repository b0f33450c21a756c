#include "tiledit/tiling.hpp"

#include <cstring>
#include <string>

#include "tiledit/errors.hpp"

namespace tiledit {

TileRect TilePlan::latent_rect(int i) const {
  if (i < 0 || i >= tile_count()) {
    throw Error(ErrorCode::index_out_of_range,
                "tile index " + std::to_string(i) + " outside [0," +
                    std::to_string(tile_count()) + ")");
  }
  const TileRect& r = rects[i];
  return {r.row0 / latent_factor, r.col0 / latent_factor,
          r.height / latent_factor, r.width / latent_factor};
}

TilePlan plan_tiles(int canvas_height, int canvas_width, int tile_height, int tile_width,
                    int latent_factor) {
  if (canvas_height < 1 || canvas_width < 1 || tile_height < 1 || tile_width < 1) {
    throw Error(ErrorCode::invalid_range, "canvas and tile dims must be positive");
  }
  if (canvas_height % tile_height != 0 || canvas_width % tile_width != 0) {
    throw Error(ErrorCode::not_divisible,
                "canvas " + std::to_string(canvas_height) + "x" + std::to_string(canvas_width) +
                    " not a multiple of tile " + std::to_string(tile_height) + "x" +
                    std::to_string(tile_width));
  }
  if (latent_factor < 1 || tile_height % latent_factor != 0 || tile_width % latent_factor != 0) {
    throw Error(ErrorCode::invalid_factor,
                "tile size must be a positive multiple of latent factor " +
                    std::to_string(latent_factor));
  }
  TilePlan plan;
  plan.canvas_height = canvas_height;
  plan.canvas_width = canvas_width;
  plan.tile_height = tile_height;
  plan.tile_width = tile_width;
  plan.latent_factor = latent_factor;
  for (int r = 0; r < canvas_height / tile_height; ++r) {
    for (int c = 0; c < canvas_width / tile_width; ++c) {
      plan.rects.push_back({r * tile_height, c * tile_width, tile_height, tile_width});
    }
  }
  return plan;
}

Tensor crop(const Tensor& canvas, const TileRect& rect) {
  if (rect.row0 < 0 || rect.col0 < 0 || rect.height < 1 || rect.width < 1 ||
      rect.row0 + rect.height > canvas.height() || rect.col0 + rect.width > canvas.width()) {
    throw Error(ErrorCode::out_of_bounds,
                "rect [" + std::to_string(rect.row0) + "," + std::to_string(rect.col0) + " " +
                    std::to_string(rect.height) + "x" + std::to_string(rect.width) +
                    "] outside canvas " + canvas.shape_string());
  }
  int ch = canvas.channels();
  Tensor out(rect.height, rect.width, ch);
  std::size_t row_bytes = static_cast<std::size_t>(rect.width) * ch * sizeof(float);
  for (int y = 0; y < rect.height; ++y) {
    const float* src =
        canvas.data() + (static_cast<std::size_t>(rect.row0 + y) * canvas.width() + rect.col0) * ch;
    std::memcpy(out.data() + static_cast<std::size_t>(y) * rect.width * ch, src, row_bytes);
  }
  return out;
}

Tensor stitch(const std::vector<Tensor>& tiles, const TilePlan& plan, Space space) {
  if (static_cast<int>(tiles.size()) != plan.tile_count()) {
    throw Error(ErrorCode::count_mismatch,
                "got " + std::to_string(tiles.size()) + " tiles, plan has " +
                    std::to_string(plan.tile_count()));
  }
  int f = space == Space::latent ? plan.latent_factor : 1;
  int th = plan.tile_height / f;
  int tw = plan.tile_width / f;
  int channels = tiles.empty() ? 0 : tiles[0].channels();
  for (const Tensor& t : tiles) {
    if (t.height() != th || t.width() != tw || t.channels() != channels) {
      throw Error(ErrorCode::shape_mismatch,
                  "tile " + t.shape_string() + " does not match expected " +
                      Tensor::shape_string(th, tw, channels));
    }
  }
  Tensor out(plan.canvas_height / f, plan.canvas_width / f, channels);
  std::size_t row_bytes = static_cast<std::size_t>(tw) * channels * sizeof(float);
  for (int i = 0; i < plan.tile_count(); ++i) {
    const TileRect& r = plan.rects[i];
    int row0 = r.row0 / f;
    int col0 = r.col0 / f;
    for (int y = 0; y < th; ++y) {
      float* dst = out.data() + (static_cast<std::size_t>(row0 + y) * out.width() + col0) * channels;
      const float* src = tiles[i].data() + static_cast<std::size_t>(y) * tw * channels;
      std::memcpy(dst, src, row_bytes);
    }
  }
  return out;
}

}  // namespace tiledit
