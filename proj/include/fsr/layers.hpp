#pragma once

#include <cstdint>
#include <vector>

#include "fsr/tensor.hpp"

namespace fsr {
class Rng;

/// 3x3 stride-1 same-padded convolution layer (zero padding).
/// Weight layout is [ky][kx][c_in][c_out] so the innermost loops run over
/// contiguous output channels.
struct ConvLayer {
  static constexpr int kernel = 3;
  int c_in = 0;
  int c_out = 0;
  std::vector<float> weights;  // kernel * kernel * c_in * c_out
  std::vector<float> bias;     // c_out

  ConvLayer() = default;
  ConvLayer(int in, int out);

  std::size_t w_offset(int ky, int kx, int ci, int co) const {
    return ((static_cast<std::size_t>(ky) * kernel + kx) * c_in + ci) * c_out + co;
  }

  /// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  void init_he_uniform(Rng& rng);
};

struct ConvGrads {
  Tensor4 input;               // d loss / d input
  std::vector<float> weights;  // d loss / d weights
  std::vector<float> bias;     // d loss / d bias
};

Tensor4 conv2d_forward(const Tensor4& input, const ConvLayer& layer);

/// Exact gradients of conv2d_forward. grad_bias is the sum of grad_out over
/// N, H, W per output channel.
ConvGrads conv2d_backward(const Tensor4& input, const ConvLayer& layer, const Tensor4& grad_out);

Tensor4 relu_forward(const Tensor4& input);
/// Routes gradient where the forward output was > 0.
Tensor4 relu_backward(const Tensor4& output, const Tensor4& grad_out);

struct MaxPoolResult {
  Tensor4 output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

/// 2x2 stride-2 max pooling; requires even H and W. First maximum wins ties.
MaxPoolResult maxpool2_forward(const Tensor4& input);
Tensor4 maxpool2_backward(const MaxPoolResult& pooled, int in_h, int in_w, const Tensor4& grad_out);

/// Nearest-neighbor 2x upsampling: each pixel replicated into a 2x2 block.
Tensor4 upsample_nearest2_forward(const Tensor4& input);
Tensor4 upsample_nearest2_backward(const Tensor4& grad_out);

struct DropoutResult {
  Tensor4 output;
  std::vector<float> scale;  // per element: 0 (dropped) or 1/(1-p) (kept)
};

/// Inverted dropout: zero with probability `rate`, survivors scaled by
/// 1/(1-rate). Identity when train_mode is false. Deterministic given seed.
DropoutResult dropout_forward(const Tensor4& input, float rate, bool train_mode,
                              std::uint64_t rng_seed);
Tensor4 dropout_backward(const DropoutResult& result, const Tensor4& grad_out);

}  // namespace fsr
