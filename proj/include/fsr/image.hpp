#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsr {

/// H x W x 3 RGB image, row-major float storage, values in [0, 255].
/// The universal pixel container of the toolkit; immutable by convention
/// once an operation has returned it.
struct ImageTensor {
  int height = 0;
  int width = 0;
  static constexpr int channels = 3;
  std::vector<float> data;  // height * width * 3, index [y][x][c]

  ImageTensor() = default;
  ImageTensor(int h, int w, float fill = 0.0f);

  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const ImageTensor& o) const { return height == o.height && width == o.width; }
};

/// H x W binary foreground map; values are exactly 0 or 1.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;  // height * width, row-major

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0);

  std::uint8_t& at(int y, int x) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x]; }
};

/// Decodes an 8-bit PNG (gray, gray+alpha, palette, RGB or RGBA; alpha
/// dropped, gray replicated to RGB) into float [0, 255] values.
/// Throws IoError for missing files, undecodable streams and 16-bit depth.
ImageTensor load_image(const std::string& path);

/// Encodes to 8-bit RGB PNG. Values are clamped to [0, 255] and rounded
/// half-up before encoding, so load_image(save_image(x)) == round(clamp(x)).
void save_image(const ImageTensor& img, const std::string& path);

/// Bilinear resampling with half-pixel center alignment:
/// source coordinate = (dst + 0.5) * (in / out) - 0.5, clamped to bounds.
ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w);

/// LR degradation: resize to round(dim * scale_percent / 100) and back,
/// both bilinear. scale_percent = 50 is the usual LR generation setting;
/// 100 is the identity. Throws if an intermediate dimension rounds to 0.
ImageTensor degrade(const ImageTensor& img, int scale_percent);

}  // namespace fsr
