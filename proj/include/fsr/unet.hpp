#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsr/layers.hpp"
#include "fsr/tensor.hpp"

namespace fsr {

/// Channel plan of the 2-down / 2-up additive-skip network. The default
/// (32, 64) is the smallest conventional plan; tests shrink it.
struct UNetConfig {
  int in_channels = 3;
  int base_channels = 32;  // down1 / up2 width
  int mid_channels = 64;   // down2 / bottleneck / up1 width
  float dropout_rate = 0.25f;

  bool operator==(const UNetConfig&) const = default;
};

/// All learnable parameters of the network:
///   down1: conv(in->base), conv(base->base), dropout, maxpool
///   down2: conv(base->mid), conv(mid->mid), maxpool
///   bottleneck: conv(mid->mid)
///   up1: upsample x2, conv(mid->mid), conv(mid->mid), + skip from down2
///   up2: upsample x2, conv(mid->base), conv(base->base), + skip from down1
///   head: conv(base->in), linear
/// Hidden activations are ReLU; skips are element-wise additions, which the
/// channel plan keeps shape-compatible for inputs with H, W divisible by 4.
struct UNetModel {
  UNetConfig config;
  ConvLayer down1_conv1, down1_conv2;
  ConvLayer down2_conv1, down2_conv2;
  ConvLayer bottleneck_conv;
  ConvLayer up1_conv1, up1_conv2;
  ConvLayer up2_conv1, up2_conv2;
  ConvLayer head;

  explicit UNetModel(const UNetConfig& cfg = {});

  /// Seeded He-uniform weight init, zero biases.
  void init_parameters(std::uint64_t seed);

  struct ParamRef {
    std::string name;
    std::vector<float>* values;
    std::vector<int> dims;
  };
  struct ConstParamRef {
    std::string name;
    const std::vector<float>* values;
    std::vector<int> dims;
  };

  /// Parameter registry in fixed order; checkpoints, Adam and gradients all
  /// index against this order.
  std::vector<ParamRef> parameters();
  std::vector<ConstParamRef> parameters() const;
  std::size_t parameter_count() const;
};

/// Gradients aligned with UNetModel::parameters() order.
using ParameterGradients = std::vector<std::vector<float>>;

/// Every intermediate needed by unet_backward.
struct UNetTape {
  Tensor4 input;
  Tensor4 d1_pre1, d1_act1, d1_pre2, d1_act2;  // pre = conv output, act = relu output
  DropoutResult d1_drop;
  MaxPoolResult d1_pool;
  Tensor4 d2_pre1, d2_act1, d2_pre2, d2_act2;
  MaxPoolResult d2_pool;
  Tensor4 b_pre, b_act;
  Tensor4 u1_up, u1_pre1, u1_act1, u1_pre2, u1_act2, u1_sum;
  Tensor4 u2_up, u2_pre1, u2_act1, u2_pre2, u2_act2, u2_sum;
  Tensor4 output;
};

struct UNetForwardResult {
  Tensor4 output;
  UNetTape tape;
};

/// Forward pass. Requires H, W divisible by 4 and C == config.in_channels.
/// Dropout is active only in train mode; eval mode is deterministic.
UNetForwardResult unet_forward(const UNetModel& model, const Tensor4& input, bool train_mode,
                               std::uint64_t rng_seed);

/// Output-only forward for inference (tape discarded).
Tensor4 unet_infer(const UNetModel& model, const Tensor4& input);

/// Exact parameter gradients for the forward pass recorded on `tape`.
/// Skip additions propagate grad_out into both branches.
ParameterGradients unet_backward(const UNetModel& model, const UNetTape& tape,
                                 const Tensor4& grad_output);

/// loss = mean((pred - target)^2) over all elements (64-bit accumulation);
/// grad = 2 (pred - target) / numel.
struct MseLossResult {
  double loss;
  Tensor4 grad;
};
MseLossResult mse_loss_and_grad(const Tensor4& pred, const Tensor4& target);

}  // namespace fsr
