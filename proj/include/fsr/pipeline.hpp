#pragma once

#include <string>
#include <vector>

#include "fsr/image.hpp"
#include "fsr/tensor.hpp"
#include "fsr/unet.hpp"

namespace fsr {

/// Per-pixel blend weight in [0, 1]. Equals the binary mask exactly at
/// feather radius 0.
struct AlphaMatte {
  int height = 0;
  int width = 0;
  std::vector<float> alpha;

  AlphaMatte() = default;
  AlphaMatte(int h, int w, float fill = 0.0f);

  float& at(int y, int x) { return alpha[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return alpha[static_cast<std::size_t>(y) * width + x]; }
};

/// Reads a mask PNG (single channel or RGB); pixels with luminance > 127
/// are foreground.
Mask load_mask(const std::string& path);

/// Union of instance masks; all must share dimensions.
Mask combine_masks(const std::vector<Mask>& masks);

/// Pixel-wise product: background zeroed, foreground kept.
ImageTensor extract_foreground(const ImageTensor& lr, const Mask& mask);

/// Radius 0 copies the mask. Radius r > 0 convolves the binary mask with a
/// unit-peak Gaussian (sigma = r/2, half-width ceil(3*sigma), zero-padded)
/// and clamps to [0, 1], so strictly interior pixels stay exactly 1 and the
/// deep background stays 0 while the boundary gains a soft ramp.
AlphaMatte feather_mask(const Mask& mask, double radius);

/// out = alpha * sr + (1 - alpha) * lr, clamped to [0, 255].
ImageTensor composite(const ImageTensor& sr, const ImageTensor& lr, const AlphaMatte& alpha);

enum class SrInputMode { masked, full };

/// The whole foreground-SR flow: extract the foreground (masked mode) or
/// keep the full frame, run SR inference, and blend the result over the LR
/// background through the feathered mask.
ImageTensor run_pipeline(const UNetModel& model, const ImageTensor& lr_image,
                         const std::vector<Mask>& masks, double feather_radius,
                         SrInputMode mode = SrInputMode::masked);

/// ImageTensor (H x W x 3) -> Tensor4 (1 x H x W x 3), values untouched.
Tensor4 image_to_tensor(const ImageTensor& img);

/// Batch item `n` of a Tensor4 -> ImageTensor, clamped to [0, 255].
ImageTensor tensor_to_image(const Tensor4& t, int n = 0);

}  // namespace fsr
