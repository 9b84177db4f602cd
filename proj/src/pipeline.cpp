#include "fsr/pipeline.hpp"

#include <cmath>

#include "fsr/error.hpp"

namespace fsr {

namespace {

void require_mask_fits(const ImageTensor& img, const Mask& mask, const char* op) {
  if (img.height != mask.height || img.width != mask.width)
    throw ArgumentError(std::string(op) + ": mask " + std::to_string(mask.height) + "x" +
                        std::to_string(mask.width) + " does not match image " +
                        std::to_string(img.height) + "x" + std::to_string(img.width));
}

}  // namespace

AlphaMatte::AlphaMatte(int h, int w, float fill)
    : height(h), width(w), alpha(static_cast<std::size_t>(h) * w, fill) {
  if (h < 1 || w < 1) throw ArgumentError("alpha matte dimensions must be positive");
}

Mask load_mask(const std::string& path) {
  const ImageTensor img = load_image(path);  // gray PNGs arrive replicated to RGB
  Mask mask(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double luma =
          0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
      mask.at(y, x) = luma > 127.0 ? 1 : 0;
    }
  return mask;
}

Mask combine_masks(const std::vector<Mask>& masks) {
  if (masks.empty()) throw ArgumentError("combine_masks: no masks given");
  Mask out = masks.front();
  for (std::size_t i = 1; i < masks.size(); ++i) {
    if (masks[i].height != out.height || masks[i].width != out.width)
      throw ArgumentError("combine_masks: instance masks disagree on dimensions");
    for (std::size_t j = 0; j < out.bits.size(); ++j)
      out.bits[j] = out.bits[j] | masks[i].bits[j];
  }
  return out;
}

ImageTensor extract_foreground(const ImageTensor& lr, const Mask& mask) {
  require_mask_fits(lr, mask, "extract_foreground");
  ImageTensor out = lr;
  for (int y = 0; y < lr.height; ++y)
    for (int x = 0; x < lr.width; ++x)
      if (mask.at(y, x) == 0)
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = 0.0f;
  return out;
}

AlphaMatte feather_mask(const Mask& mask, double radius) {
  if (radius < 0.0) throw ArgumentError("feather_mask: radius must be >= 0");

  AlphaMatte matte(mask.height, mask.width);
  if (radius == 0.0) {
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
      matte.alpha[i] = static_cast<float>(mask.bits[i]);
    return matte;
  }

  const double sigma = radius / 2.0;
  const int hw = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * hw + 1);
  for (int d = -hw; d <= hw; ++d)
    kernel[d + hw] = std::exp(-(static_cast<double>(d) * d) / (2.0 * sigma * sigma));

  // Separable unit-peak Gaussian over the 0/1 mask, zero padding outside.
  std::vector<double> tmp(mask.bits.size(), 0.0);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      double acc = 0.0;
      for (int d = -hw; d <= hw; ++d) {
        const int xx = x + d;
        if (xx < 0 || xx >= mask.width) continue;
        acc += kernel[d + hw] * mask.at(y, xx);
      }
      tmp[static_cast<std::size_t>(y) * mask.width + x] = acc;
    }
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      double acc = 0.0;
      for (int d = -hw; d <= hw; ++d) {
        const int yy = y + d;
        if (yy < 0 || yy >= mask.height) continue;
        acc += kernel[d + hw] * tmp[static_cast<std::size_t>(yy) * mask.width + x];
      }
      matte.at(y, x) = static_cast<float>(acc < 1.0 ? acc : 1.0);
    }
  return matte;
}

ImageTensor composite(const ImageTensor& sr, const ImageTensor& lr, const AlphaMatte& alpha) {
  if (!sr.same_shape(lr))
    throw ArgumentError("composite: SR and LR dimensions differ");
  if (alpha.height != lr.height || alpha.width != lr.width)
    throw ArgumentError("composite: alpha matte dimensions differ from images");

  ImageTensor out(lr.height, lr.width);
  for (int y = 0; y < lr.height; ++y)
    for (int x = 0; x < lr.width; ++x) {
      const float a = alpha.at(y, x);
      for (int c = 0; c < 3; ++c) {
        float v = a * sr.at(y, x, c) + (1.0f - a) * lr.at(y, x, c);
        if (v < 0.0f) v = 0.0f;
        if (v > 255.0f) v = 255.0f;
        out.at(y, x, c) = v;
      }
    }
  return out;
}

ImageTensor run_pipeline(const UNetModel& model, const ImageTensor& lr_image,
                         const std::vector<Mask>& masks, double feather_radius, SrInputMode mode) {
  if (lr_image.height % 4 != 0 || lr_image.width % 4 != 0)
    throw ArgumentError("run_pipeline: image dimensions must be divisible by 4");

  const Mask mask = combine_masks(masks);
  require_mask_fits(lr_image, mask, "run_pipeline");

  const ImageTensor sr_input =
      mode == SrInputMode::masked ? extract_foreground(lr_image, mask) : lr_image;
  const Tensor4 sr_out = unet_infer(model, image_to_tensor(sr_input));
  return composite(tensor_to_image(sr_out), lr_image, feather_mask(mask, feather_radius));
}

Tensor4 image_to_tensor(const ImageTensor& img) {
  Tensor4 t(1, img.height, img.width, 3);
  t.data = img.data;
  return t;
}

ImageTensor tensor_to_image(const Tensor4& t, int n) {
  if (t.c != 3) throw ArgumentError("tensor_to_image: tensor must have 3 channels");
  if (n < 0 || n >= t.n) throw ArgumentError("tensor_to_image: batch index out of range");

  ImageTensor img(t.h, t.w);
  const std::size_t base = t.offset(n, 0, 0, 0);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    float v = t.data[base + i];
    if (v < 0.0f) v = 0.0f;
    if (v > 255.0f) v = 255.0f;
    img.data[i] = v;
  }
  return img;
}

}  // namespace fsr
