#pragma once

#include <string>

#include "fsr/image.hpp"

namespace fsr {

enum class PsnrVariant { paper, standard };
enum class StatMode { global, windowed };

/// SSIM stability constants and window configuration. Defaults follow the
/// usual convention: C1 = (0.01 * 255)^2, C2 = (0.03 * 255)^2, 11x11
/// Gaussian window with sigma 1.5.
struct SsimParams {
  double c1 = 6.5025;
  double c2 = 58.5225;
  int window_size = 11;
  double window_sigma = 1.5;
  StatMode mode = StatMode::windowed;
};

enum class MetricKind { mse, psnr, ssim, uqi };

struct MetricValue {
  MetricKind name;
  double value;
  PsnrVariant variant = PsnrVariant::paper;  // meaningful for PSNR only
};

std::string metric_kind_name(MetricKind kind);
MetricKind metric_kind_from_name(const std::string& name);

/// Mean squared error over all pixels and all 3 channels.
double mse(const ImageTensor& x, const ImageTensor& y);

/// 10 * log10(P^2 / MSE). Paper variant: P = max pixel value over both
/// images; standard variant: P = 255. Identical images have infinite PSNR
/// and raise NumericError.
double psnr(const ImageTensor& x, const ImageTensor& y, PsnrVariant variant);

/// Per-channel SSIM averaged over channels. Global mode plugs whole-channel
/// statistics into the product form; windowed mode averages Gaussian-weighted
/// local SSIM over all valid window centers (no padding).
double ssim(const ImageTensor& x, const ImageTensor& y, const SsimParams& params = {});

/// Universal Quality Index, per channel averaged over channels.
/// UQI = 4*cov*mx*my / ((vx+vy)*(mx^2+my^2)). Windowed mode slides an
/// unweighted window (stride 1), skipping windows whose stabilizer-free
/// denominator falls below 1e-12; if every window degenerates, NumericError.
double uqi(const ImageTensor& x, const ImageTensor& y,
           StatMode mode = StatMode::windowed, int window = 8);

}  // namespace fsr
