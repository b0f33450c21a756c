#include "tiledit/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tiledit/errors.hpp"

namespace tiledit {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp back to the setjmp point below; these
// callbacks keep it from also printing to stderr.
void on_png_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }
void on_png_warning(png_structp, png_const_charp) {}

}  // namespace

Tensor read_png(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::input_not_found, "no such file: '" + path + "'");
  }
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) {
    throw Error(ErrorCode::input_not_found, "cannot open '" + path + "'");
  }
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorCode::bad_format, "'" + path + "' is not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error,
                                           on_png_warning);
  if (!png) throw Error(ErrorCode::io_failure, "png reader allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::io_failure, "png info allocation failed");
  }

  // Declared ahead of setjmp; only written inside the protected region.
  std::vector<unsigned char> bytes;
  std::vector<png_bytep> rows;
  int h = 0, w = 0;
  bool bad_channels = false;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::bad_format, "png decode failed for '" + path + "'");
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  h = static_cast<int>(png_get_image_height(png, info));
  w = static_cast<int>(png_get_image_width(png, info));
  bad_channels = png_get_channels(png, info) != 3;
  if (!bad_channels) {
    bytes.resize(static_cast<std::size_t>(h) * w * 3);
    rows.resize(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
      rows[static_cast<std::size_t>(y)] = bytes.data() + static_cast<std::size_t>(y) * w * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (bad_channels) {
    throw Error(ErrorCode::bad_format, "'" + path + "' did not normalize to RGB");
  }
  Tensor out(h, w, 3);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    out.data()[i] = static_cast<float>(bytes[i]) / 255.0f;
  }
  return out;
}

void write_png(const std::string& path, const Tensor& image) {
  if (image.channels() != 3) {
    throw Error(ErrorCode::shape_mismatch,
                "png output requires 3 channels, got " + std::to_string(image.channels()));
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) {
    throw Error(ErrorCode::io_failure, "cannot open '" + path + "' for writing");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error,
                                            on_png_warning);
  if (!png) throw Error(ErrorCode::io_failure, "png writer allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::io_failure, "png info allocation failed");
  }

  const int h = image.height(), w = image.width();
  std::vector<unsigned char> row(static_cast<std::size_t>(w) * 3);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::io_failure, "png encode failed for '" + path + "'");
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = image.at(y, x, c);
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] =
            static_cast<unsigned char>(std::floor(v * 255.0 + 0.5));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor to_rgb(const Tensor& t) {
  Tensor out(t.height(), t.width(), 3);
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        float v = 0.0f;
        if (t.channels() == 1) {
          v = t.at(y, x, 0);
        } else if (c < t.channels()) {
          v = t.at(y, x, c);
        }
        out.at(y, x, c) = v;
      }
    }
  }
  return out;
}

}  // namespace tiledit
