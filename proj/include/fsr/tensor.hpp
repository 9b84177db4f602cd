#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fsr {

/// N x H x W x C row-major float tensor (NHWC). 32-bit storage; reductions
/// that need it accumulate in 64-bit.
struct Tensor4 {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<float> data;

  Tensor4() = default;
  Tensor4(int n_, int h_, int w_, int c_, float fill = 0.0f)
      : n(n_), h(h_), w(w_), c(c_),
        data(static_cast<std::size_t>(n_) * h_ * w_ * c_, fill) {}

  std::size_t numel() const { return data.size(); }

  std::size_t offset(int nn, int yy, int xx, int cc) const {
    return ((static_cast<std::size_t>(nn) * h + yy) * w + xx) * c + cc;
  }
  float& at(int nn, int yy, int xx, int cc) { return data[offset(nn, yy, xx, cc)]; }
  float at(int nn, int yy, int xx, int cc) const { return data[offset(nn, yy, xx, cc)]; }

  bool same_shape(const Tensor4& o) const {
    return n == o.n && h == o.h && w == o.w && c == o.c;
  }
  std::string shape_str() const {
    return std::to_string(n) + "x" + std::to_string(h) + "x" + std::to_string(w) + "x" +
           std::to_string(c);
  }

  /// Copies batch item `i` into a fresh N=1 tensor.
  Tensor4 slice(int i) const;
};

}  // namespace fsr
