#include "fsr/layers.hpp"

#include <cmath>
#include <limits>

#include "fsr/error.hpp"
#include "fsr/rng.hpp"

namespace fsr {

Tensor4 Tensor4::slice(int i) const {
  Tensor4 out(1, h, w, c);
  const std::size_t stride = static_cast<std::size_t>(h) * w * c;
  std::copy(data.begin() + i * stride, data.begin() + (i + 1) * stride, out.data.begin());
  return out;
}

ConvLayer::ConvLayer(int in, int out)
    : c_in(in), c_out(out),
      weights(static_cast<std::size_t>(kernel) * kernel * in * out, 0.0f),
      bias(out, 0.0f) {
  if (in < 1 || out < 1) throw ArgumentError("ConvLayer: channel counts must be positive");
}

void ConvLayer::init_he_uniform(Rng& rng) {
  const double bound = std::sqrt(6.0 / (kernel * kernel * c_in));
  for (float& w : weights) w = static_cast<float>(rng.uniform(-bound, bound));
  for (float& b : bias) b = 0.0f;
}

namespace {

// One output pixel. `base` indexes the (ky=0, kx=0) tap and may be negative
// at the border; the clipped tap ranges guarantee only valid indices are
// formed.
inline void conv_accumulate_px(const float* __restrict data, std::ptrdiff_t base,
                               std::ptrdiff_t row_stride, std::ptrdiff_t px_stride,
                               const float* __restrict weights, std::size_t w_tap_stride,
                               int ky0, int ky1, int kx0, int kx1, int ci_count, int co_count,
                               float* __restrict acc) {
  for (int ky = ky0; ky < ky1; ++ky)
    for (int kx = kx0; kx < kx1; ++kx) {
      const float* __restrict in_px = data + (base + ky * row_stride + kx * px_stride);
      const float* __restrict w_px =
          weights + (static_cast<std::size_t>(ky) * 3 + kx) * w_tap_stride;
      for (int ci = 0; ci < ci_count; ++ci) {
        const float xv = in_px[ci];
        const float* __restrict w_row = w_px + static_cast<std::size_t>(ci) * co_count;
        for (int co = 0; co < co_count; ++co) acc[co] += xv * w_row[co];
      }
    }
}

}  // namespace

Tensor4 conv2d_forward(const Tensor4& input, const ConvLayer& layer) {
  if (input.c != layer.c_in)
    throw ArgumentError("conv2d_forward: input has " + std::to_string(input.c) +
                        " channels, layer expects " + std::to_string(layer.c_in));

  const int H = input.h, W = input.w, CI = layer.c_in, CO = layer.c_out;
  Tensor4 out(input.n, H, W, CO);
  std::vector<float> acc(CO);
  const std::size_t row_stride = static_cast<std::size_t>(W) * CI;
  const std::size_t w_tap = static_cast<std::size_t>(CI) * CO;

  for (int n = 0; n < input.n; ++n) {
    for (int y = 0; y < H; ++y) {
      const int ky0 = y > 0 ? 0 : 1;
      const int ky1 = y < H - 1 ? 3 : 2;
      for (int x = 0; x < W; ++x) {
        const int kx0 = x > 0 ? 0 : 1;
        const int kx1 = x < W - 1 ? 3 : 2;
        for (int co = 0; co < CO; ++co) acc[co] = layer.bias[co];
        // base indexes the (ky=0, kx=0) tap of this pixel's receptive field
        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(input.offset(n, y, x, 0)) -
                                    static_cast<std::ptrdiff_t>(row_stride) - CI;
        conv_accumulate_px(input.data.data(), base, static_cast<std::ptrdiff_t>(row_stride), CI,
                           layer.weights.data(), w_tap, ky0, ky1, kx0, kx1, CI, CO, acc.data());
        float* out_px = &out.data[out.offset(n, y, x, 0)];
        for (int co = 0; co < CO; ++co) out_px[co] = acc[co];
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor4& input, const ConvLayer& layer, const Tensor4& grad_out) {
  if (input.c != layer.c_in)
    throw ArgumentError("conv2d_backward: input/layer channel mismatch");
  if (grad_out.n != input.n || grad_out.h != input.h || grad_out.w != input.w ||
      grad_out.c != layer.c_out)
    throw ArgumentError("conv2d_backward: grad_out shape " + grad_out.shape_str() +
                        " inconsistent with forward output");

  const int H = input.h, W = input.w, CI = layer.c_in, CO = layer.c_out;
  ConvGrads g;
  g.input = Tensor4(input.n, H, W, CI);
  g.weights.assign(layer.weights.size(), 0.0f);
  g.bias.assign(layer.bias.size(), 0.0f);

  // Per-tap transposed weights [ky][kx][co][ci] so the grad-input inner loop
  // streams over contiguous ci (both inner loops below are plain elementwise
  // FMA, no reductions).
  std::vector<float> wt(layer.weights.size());
  for (int ky = 0; ky < 3; ++ky)
    for (int kx = 0; kx < 3; ++kx)
      for (int ci = 0; ci < CI; ++ci)
        for (int co = 0; co < CO; ++co)
          wt[((static_cast<std::size_t>(ky) * 3 + kx) * CO + co) * CI + ci] =
              layer.weights[layer.w_offset(ky, kx, ci, co)];

  const std::ptrdiff_t in_row = static_cast<std::ptrdiff_t>(W) * CI;

  for (int n = 0; n < input.n; ++n) {
    for (int y = 0; y < H; ++y) {
      const int ky0 = y > 0 ? 0 : 1;
      const int ky1 = y < H - 1 ? 3 : 2;
      for (int x = 0; x < W; ++x) {
        const int kx0 = x > 0 ? 0 : 1;
        const int kx1 = x < W - 1 ? 3 : 2;
        const float* __restrict go_px = &grad_out.data[grad_out.offset(n, y, x, 0)];
        for (int co = 0; co < CO; ++co) g.bias[co] += go_px[co];

        const std::ptrdiff_t base =
            static_cast<std::ptrdiff_t>(input.offset(n, y, x, 0)) - in_row - CI;
        for (int ky = ky0; ky < ky1; ++ky)
          for (int kx = kx0; kx < kx1; ++kx) {
            const std::ptrdiff_t px = base + ky * in_row + kx * CI;
            const float* __restrict in_px = input.data.data() + px;
            float* __restrict gi_px = g.input.data.data() + px;
            const std::size_t tap = (static_cast<std::size_t>(ky) * 3 + kx);
            float* __restrict gw_base = g.weights.data() + tap * CI * CO;
            const float* __restrict wt_base = wt.data() + tap * CI * CO;

            for (int ci = 0; ci < CI; ++ci) {
              const float xv = in_px[ci];
              float* __restrict gw_row = gw_base + static_cast<std::size_t>(ci) * CO;
              for (int co = 0; co < CO; ++co) gw_row[co] += xv * go_px[co];
            }
            for (int co = 0; co < CO; ++co) {
              const float gv = go_px[co];
              const float* __restrict wt_row = wt_base + static_cast<std::size_t>(co) * CI;
              for (int ci = 0; ci < CI; ++ci) gi_px[ci] += gv * wt_row[ci];
            }
          }
      }
    }
  }
  return g;
}

Tensor4 relu_forward(const Tensor4& input) {
  Tensor4 out = input;
  for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor4 relu_backward(const Tensor4& output, const Tensor4& grad_out) {
  if (!output.same_shape(grad_out)) throw ArgumentError("relu_backward: shape mismatch");
  Tensor4 g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i)
    if (output.data[i] <= 0.0f) g.data[i] = 0.0f;
  return g;
}

MaxPoolResult maxpool2_forward(const Tensor4& input) {
  if (input.h % 2 != 0 || input.w % 2 != 0)
    throw ArgumentError("maxpool2: H and W must be even, got " + input.shape_str());

  MaxPoolResult r;
  r.output = Tensor4(input.n, input.h / 2, input.w / 2, input.c);
  r.argmax.resize(r.output.numel());

  for (int n = 0; n < input.n; ++n)
    for (int y = 0; y < r.output.h; ++y)
      for (int x = 0; x < r.output.w; ++x)
        for (int c = 0; c < input.c; ++c) {
          float best = -std::numeric_limits<float>::infinity();
          std::size_t best_idx = 0;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = input.offset(n, 2 * y + dy, 2 * x + dx, c);
              if (input.data[idx] > best) {
                best = input.data[idx];
                best_idx = idx;
              }
            }
          const std::size_t o = r.output.offset(n, y, x, c);
          r.output.data[o] = best;
          r.argmax[o] = static_cast<std::uint32_t>(best_idx);
        }
  return r;
}

Tensor4 maxpool2_backward(const MaxPoolResult& pooled, int in_h, int in_w,
                          const Tensor4& grad_out) {
  if (!pooled.output.same_shape(grad_out)) throw ArgumentError("maxpool2_backward: shape mismatch");
  Tensor4 g(grad_out.n, in_h, in_w, grad_out.c);
  for (std::size_t i = 0; i < grad_out.data.size(); ++i)
    g.data[pooled.argmax[i]] += grad_out.data[i];
  return g;
}

Tensor4 upsample_nearest2_forward(const Tensor4& input) {
  Tensor4 out(input.n, input.h * 2, input.w * 2, input.c);
  for (int n = 0; n < input.n; ++n)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        const float* src = &input.data[input.offset(n, y / 2, x / 2, 0)];
        float* dst = &out.data[out.offset(n, y, x, 0)];
        for (int c = 0; c < input.c; ++c) dst[c] = src[c];
      }
  return out;
}

Tensor4 upsample_nearest2_backward(const Tensor4& grad_out) {
  if (grad_out.h % 2 != 0 || grad_out.w % 2 != 0)
    throw ArgumentError("upsample_nearest2_backward: grad shape must be even");
  Tensor4 g(grad_out.n, grad_out.h / 2, grad_out.w / 2, grad_out.c);
  for (int n = 0; n < grad_out.n; ++n)
    for (int y = 0; y < grad_out.h; ++y)
      for (int x = 0; x < grad_out.w; ++x) {
        const float* src = &grad_out.data[grad_out.offset(n, y, x, 0)];
        float* dst = &g.data[g.offset(n, y / 2, x / 2, 0)];
        for (int c = 0; c < grad_out.c; ++c) dst[c] += src[c];
      }
  return g;
}

DropoutResult dropout_forward(const Tensor4& input, float rate, bool train_mode,
                              std::uint64_t rng_seed) {
  if (rate < 0.0f || rate >= 1.0f) throw ArgumentError("dropout: rate must be in [0, 1)");

  DropoutResult r;
  r.output = input;
  if (!train_mode || rate == 0.0f) {
    r.scale.assign(input.numel(), 1.0f);
    return r;
  }

  r.scale.resize(input.numel());
  Rng rng(rng_seed);
  const float keep_scale = 1.0f / (1.0f - rate);
  for (std::size_t i = 0; i < input.numel(); ++i) {
    const bool keep = rng.next_double() >= rate;
    r.scale[i] = keep ? keep_scale : 0.0f;
    r.output.data[i] = input.data[i] * r.scale[i];
  }
  return r;
}

Tensor4 dropout_backward(const DropoutResult& result, const Tensor4& grad_out) {
  if (!result.output.same_shape(grad_out) || result.scale.size() != grad_out.numel())
    throw ArgumentError("dropout_backward: shape mismatch");
  Tensor4 g = grad_out;
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] *= result.scale[i];
  return g;
}

}  // namespace fsr
