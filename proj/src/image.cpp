#include "fsr/image.hpp"

#include <png.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "fsr/error.hpp"

namespace fsr {

ImageTensor::ImageTensor(int h, int w, float fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w * channels, fill) {
  if (h < 1 || w < 1) throw ArgumentError("image dimensions must be positive");
}

Mask::Mask(int h, int w, std::uint8_t fill)
    : height(h), width(w), bits(static_cast<std::size_t>(h) * w, fill) {
  if (h < 1 || w < 1) throw ArgumentError("mask dimensions must be positive");
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports fatal errors through a longjmp; the message is stashed
// here first so we can rethrow it as an exception after unwinding.
struct PngErrorContext {
  std::string message;
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* ctx = static_cast<PngErrorContext*>(png_get_error_ptr(png));
  if (ctx) ctx->message = msg;
  longjmp(png_jmpbuf(png), 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

ImageTensor load_image(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open '" + path + "': " + std::strerror(errno));

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError("'" + path + "' is not a PNG file");

  PngErrorContext err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           png_error_handler, png_warning_handler);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }

  std::vector<png_bytep> rows;
  std::vector<unsigned char> pixels;
  png_uint_32 w = 0, h = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("undecodable PNG '" + path + "': " + err.message);
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported bit depth 16 in '" + path + "' (8-bit PNG required)");
  }

  // Normalize every supported layout to 8-bit RGB.
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  if (png_get_channels(png, info) != 3 || png_get_rowbytes(png, info) != w * 3) {
    const unsigned ch = png_get_channels(png, info);
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG layout in '" + path + "' (" + std::to_string(ch) +
                  " channels after expansion)");
  }

  pixels.resize(static_cast<std::size_t>(h) * w * 3);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  ImageTensor img(static_cast<int>(h), static_cast<int>(w));
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(pixels[i]);
  return img;
}

void save_image(const ImageTensor& img, const std::string& path) {
  if (img.height < 1 || img.width < 1 ||
      img.data.size() != static_cast<std::size_t>(img.height) * img.width * 3)
    throw ArgumentError("save_image: malformed ImageTensor");

  // Clamp then round half-up; 127.5 stores as 128.
  std::vector<unsigned char> pixels(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    double v = img.data[i];
    if (!(v >= 0.0)) v = 0.0;  // also catches NaN
    if (v > 255.0) v = 255.0;
    pixels[i] = static_cast<unsigned char>(std::floor(v + 0.5));
  }

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write '" + path + "': " + std::strerror(errno));

  PngErrorContext err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            png_error_handler, png_warning_handler);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }

  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * img.width * 3;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot encode PNG '" + path + "': " + err.message);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("resize_bilinear: output dimensions must be >= 1");
  if (img.height < 1 || img.width < 1) throw ArgumentError("resize_bilinear: empty input image");

  ImageTensor out(out_h, out_w);
  const double scale_y = static_cast<double>(img.height) / out_h;
  const double scale_x = static_cast<double>(img.width) / out_w;

  for (int y = 0; y < out_h; ++y) {
    double sy = (y + 0.5) * scale_y - 0.5;
    if (sy < 0.0) sy = 0.0;
    if (sy > img.height - 1) sy = img.height - 1;
    const int y0 = static_cast<int>(sy);
    const int y1 = y0 < img.height - 1 ? y0 + 1 : y0;
    const double fy = sy - y0;

    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * scale_x - 0.5;
      if (sx < 0.0) sx = 0.0;
      if (sx > img.width - 1) sx = img.width - 1;
      const int x0 = static_cast<int>(sx);
      const int x1 = x0 < img.width - 1 ? x0 + 1 : x0;
      const double fx = sx - x0;

      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
        const double bot = (1.0 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
        out.at(y, x, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
      }
    }
  }
  return out;
}

ImageTensor degrade(const ImageTensor& img, int scale_percent) {
  if (scale_percent < 1 || scale_percent > 100)
    throw ArgumentError("degrade: scale_percent must be in [1, 100], got " +
                        std::to_string(scale_percent));

  const int low_h = static_cast<int>(std::llround(img.height * scale_percent / 100.0));
  const int low_w = static_cast<int>(std::llround(img.width * scale_percent / 100.0));
  if (low_h < 1 || low_w < 1)
    throw ArgumentError("degrade: intermediate dimension rounds to zero for " +
                        std::to_string(img.height) + "x" + std::to_string(img.width) +
                        " at scale " + std::to_string(scale_percent) + "%");

  const ImageTensor low = resize_bilinear(img, low_h, low_w);
  return resize_bilinear(low, img.height, img.width);
}

}  // namespace fsr
