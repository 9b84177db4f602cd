#include "fsr/unet.hpp"

#include <cmath>

#include "fsr/error.hpp"
#include "fsr/rng.hpp"

namespace fsr {

namespace {

Tensor4 add(const Tensor4& a, const Tensor4& b) {
  if (!a.same_shape(b))
    throw ArgumentError("skip addition: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  Tensor4 out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

}  // namespace

UNetModel::UNetModel(const UNetConfig& cfg)
    : config(cfg),
      down1_conv1(cfg.in_channels, cfg.base_channels),
      down1_conv2(cfg.base_channels, cfg.base_channels),
      down2_conv1(cfg.base_channels, cfg.mid_channels),
      down2_conv2(cfg.mid_channels, cfg.mid_channels),
      bottleneck_conv(cfg.mid_channels, cfg.mid_channels),
      up1_conv1(cfg.mid_channels, cfg.mid_channels),
      up1_conv2(cfg.mid_channels, cfg.mid_channels),
      up2_conv1(cfg.mid_channels, cfg.base_channels),
      up2_conv2(cfg.base_channels, cfg.base_channels),
      head(cfg.base_channels, cfg.in_channels) {
  if (cfg.dropout_rate < 0.0f || cfg.dropout_rate >= 1.0f)
    throw ArgumentError("UNetConfig: dropout_rate must be in [0, 1)");
}

void UNetModel::init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : parameters())
    if (p.dims.size() == 4) {
      // weight tensors: He-uniform over fan_in = 3*3*c_in
      const double bound = std::sqrt(6.0 / (9.0 * p.dims[2]));
      for (float& w : *p.values) w = static_cast<float>(rng.uniform(-bound, bound));
    } else {
      for (float& b : *p.values) b = 0.0f;
    }
}

namespace {

template <typename Layer, typename Ref>
void push_layer(std::vector<Ref>& out, const std::string& prefix, Layer& l) {
  out.push_back({prefix + ".weight", &l.weights, {ConvLayer::kernel, ConvLayer::kernel, l.c_in, l.c_out}});
  out.push_back({prefix + ".bias", &l.bias, {l.c_out}});
}

template <typename Model, typename Ref>
std::vector<Ref> build_registry(Model& m) {
  std::vector<Ref> refs;
  push_layer(refs, "down1.conv1", m.down1_conv1);
  push_layer(refs, "down1.conv2", m.down1_conv2);
  push_layer(refs, "down2.conv1", m.down2_conv1);
  push_layer(refs, "down2.conv2", m.down2_conv2);
  push_layer(refs, "bottleneck.conv", m.bottleneck_conv);
  push_layer(refs, "up1.conv1", m.up1_conv1);
  push_layer(refs, "up1.conv2", m.up1_conv2);
  push_layer(refs, "up2.conv1", m.up2_conv1);
  push_layer(refs, "up2.conv2", m.up2_conv2);
  push_layer(refs, "head", m.head);
  return refs;
}

}  // namespace

std::vector<UNetModel::ParamRef> UNetModel::parameters() {
  return build_registry<UNetModel, ParamRef>(*this);
}

std::vector<UNetModel::ConstParamRef> UNetModel::parameters() const {
  return build_registry<const UNetModel, ConstParamRef>(*this);
}

std::size_t UNetModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : parameters()) total += p.values->size();
  return total;
}

UNetForwardResult unet_forward(const UNetModel& model, const Tensor4& input, bool train_mode,
                               std::uint64_t rng_seed) {
  if (input.c != model.config.in_channels)
    throw ArgumentError("unet_forward: expected " + std::to_string(model.config.in_channels) +
                        " channels, got " + std::to_string(input.c));
  if (input.h % 4 != 0 || input.w % 4 != 0)
    throw ArgumentError("unet_forward: H and W must be divisible by 4, got " + input.shape_str());

  UNetForwardResult r;
  UNetTape& t = r.tape;
  t.input = input;

  t.d1_pre1 = conv2d_forward(input, model.down1_conv1);
  t.d1_act1 = relu_forward(t.d1_pre1);
  t.d1_pre2 = conv2d_forward(t.d1_act1, model.down1_conv2);
  t.d1_act2 = relu_forward(t.d1_pre2);
  t.d1_drop = dropout_forward(t.d1_act2, model.config.dropout_rate, train_mode, rng_seed);
  t.d1_pool = maxpool2_forward(t.d1_drop.output);

  t.d2_pre1 = conv2d_forward(t.d1_pool.output, model.down2_conv1);
  t.d2_act1 = relu_forward(t.d2_pre1);
  t.d2_pre2 = conv2d_forward(t.d2_act1, model.down2_conv2);
  t.d2_act2 = relu_forward(t.d2_pre2);
  t.d2_pool = maxpool2_forward(t.d2_act2);

  t.b_pre = conv2d_forward(t.d2_pool.output, model.bottleneck_conv);
  t.b_act = relu_forward(t.b_pre);

  t.u1_up = upsample_nearest2_forward(t.b_act);
  t.u1_pre1 = conv2d_forward(t.u1_up, model.up1_conv1);
  t.u1_act1 = relu_forward(t.u1_pre1);
  t.u1_pre2 = conv2d_forward(t.u1_act1, model.up1_conv2);
  t.u1_act2 = relu_forward(t.u1_pre2);
  t.u1_sum = add(t.u1_act2, t.d2_act2);  // skip from down2 pre-pool output

  t.u2_up = upsample_nearest2_forward(t.u1_sum);
  t.u2_pre1 = conv2d_forward(t.u2_up, model.up2_conv1);
  t.u2_act1 = relu_forward(t.u2_pre1);
  t.u2_pre2 = conv2d_forward(t.u2_act1, model.up2_conv2);
  t.u2_act2 = relu_forward(t.u2_pre2);
  t.u2_sum = add(t.u2_act2, t.d1_drop.output);  // skip from down1 pre-pool output

  t.output = conv2d_forward(t.u2_sum, model.head);
  r.output = t.output;
  return r;
}

Tensor4 unet_infer(const UNetModel& model, const Tensor4& input) {
  return unet_forward(model, input, /*train_mode=*/false, /*rng_seed=*/0).output;
}

ParameterGradients unet_backward(const UNetModel& model, const UNetTape& tape,
                                 const Tensor4& grad_output) {
  if (!grad_output.same_shape(tape.output))
    throw ArgumentError("unet_backward: grad_output shape " + grad_output.shape_str() +
                        " does not match forward output " + tape.output.shape_str());

  ConvGrads head_g = conv2d_backward(tape.u2_sum, model.head, grad_output);

  // u2_sum = u2_act2 + d1_drop.output: gradient flows into both branches.
  const Tensor4& g_u2_sum = head_g.input;
  Tensor4 g = relu_backward(tape.u2_act2, g_u2_sum);
  ConvGrads u2c2_g = conv2d_backward(tape.u2_act1, model.up2_conv2, g);
  g = relu_backward(tape.u2_act1, u2c2_g.input);
  ConvGrads u2c1_g = conv2d_backward(tape.u2_up, model.up2_conv1, g);
  Tensor4 g_u1_sum = upsample_nearest2_backward(u2c1_g.input);

  g = relu_backward(tape.u1_act2, g_u1_sum);
  ConvGrads u1c2_g = conv2d_backward(tape.u1_act1, model.up1_conv2, g);
  g = relu_backward(tape.u1_act1, u1c2_g.input);
  ConvGrads u1c1_g = conv2d_backward(tape.u1_up, model.up1_conv1, g);
  Tensor4 g_b_act = upsample_nearest2_backward(u1c1_g.input);

  g = relu_backward(tape.b_act, g_b_act);
  ConvGrads b_g = conv2d_backward(tape.d2_pool.output, model.bottleneck_conv, g);

  // down2: pooled-path gradient plus the skip contribution from u1_sum.
  Tensor4 g_d2_act2 = maxpool2_backward(tape.d2_pool, tape.d2_act2.h, tape.d2_act2.w, b_g.input);
  g_d2_act2 = add(g_d2_act2, g_u1_sum);
  g = relu_backward(tape.d2_act2, g_d2_act2);
  ConvGrads d2c2_g = conv2d_backward(tape.d2_act1, model.down2_conv2, g);
  g = relu_backward(tape.d2_act1, d2c2_g.input);
  ConvGrads d2c1_g = conv2d_backward(tape.d1_pool.output, model.down2_conv1, g);

  // down1: pooled path plus the skip contribution from u2_sum, through dropout.
  Tensor4 g_d1_drop =
      maxpool2_backward(tape.d1_pool, tape.d1_drop.output.h, tape.d1_drop.output.w, d2c1_g.input);
  g_d1_drop = add(g_d1_drop, g_u2_sum);
  Tensor4 g_d1_act2 = dropout_backward(tape.d1_drop, g_d1_drop);
  g = relu_backward(tape.d1_act2, g_d1_act2);
  ConvGrads d1c2_g = conv2d_backward(tape.d1_act1, model.down1_conv2, g);
  g = relu_backward(tape.d1_act1, d1c2_g.input);
  ConvGrads d1c1_g = conv2d_backward(tape.input, model.down1_conv1, g);

  ParameterGradients grads;
  grads.reserve(20);
  auto push = [&grads](ConvGrads& cg) {
    grads.push_back(std::move(cg.weights));
    grads.push_back(std::move(cg.bias));
  };
  push(d1c1_g);
  push(d1c2_g);
  push(d2c1_g);
  push(d2c2_g);
  push(b_g);
  push(u1c1_g);
  push(u1c2_g);
  push(u2c1_g);
  push(u2c2_g);
  push(head_g);
  return grads;
}

MseLossResult mse_loss_and_grad(const Tensor4& pred, const Tensor4& target) {
  if (!pred.same_shape(target))
    throw ArgumentError("mse_loss_and_grad: shape mismatch " + pred.shape_str() + " vs " +
                        target.shape_str());

  MseLossResult r;
  r.grad = Tensor4(pred.n, pred.h, pred.w, pred.c);
  const double inv_n = 1.0 / static_cast<double>(pred.numel());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred.data[i]) - target.data[i];
    sum += d * d;
    r.grad.data[i] = static_cast<float>(2.0 * d * inv_n);
  }
  r.loss = sum * inv_n;
  return r;
}

}  // namespace fsr
