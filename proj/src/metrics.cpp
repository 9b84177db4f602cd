#include "fsr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fsr/error.hpp"

namespace fsr {

namespace {

void require_same_shape(const ImageTensor& x, const ImageTensor& y, const char* op) {
  if (!x.same_shape(y))
    throw ArgumentError(std::string(op) + ": dimension mismatch (" + std::to_string(x.height) +
                        "x" + std::to_string(x.width) + " vs " + std::to_string(y.height) + "x" +
                        std::to_string(y.width) + ")");
}

// Whole-channel mean / variance / covariance, population convention.
struct ChannelStats {
  double mean_x, mean_y, var_x, var_y, cov;
};

ChannelStats global_stats(const ImageTensor& x, const ImageTensor& y, int c) {
  const std::size_t n = static_cast<std::size_t>(x.height) * x.width;
  double sx = 0.0, sy = 0.0;
  for (int yy = 0; yy < x.height; ++yy)
    for (int xx = 0; xx < x.width; ++xx) {
      sx += x.at(yy, xx, c);
      sy += y.at(yy, xx, c);
    }
  const double mx = sx / n, my = sy / n;
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (int yy = 0; yy < x.height; ++yy)
    for (int xx = 0; xx < x.width; ++xx) {
      const double dx = x.at(yy, xx, c) - mx;
      const double dy = y.at(yy, xx, c) - my;
      vx += dx * dx;
      vy += dy * dy;
      cov += dx * dy;
    }
  return {mx, my, vx / n, vy / n, cov / n};
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const int half = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double dy = i - half, dx = j - half;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(i) * size + j] = v;
      sum += v;
    }
  for (double& v : w) v /= sum;
  return w;
}

double ssim_term(double mx, double my, double vx, double vy, double cov, double c1, double c2) {
  return ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

}  // namespace

std::string metric_kind_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::mse: return "MSE";
    case MetricKind::psnr: return "PSNR";
    case MetricKind::ssim: return "SSIM";
    case MetricKind::uqi: return "UQI";
  }
  return "?";
}

MetricKind metric_kind_from_name(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  if (lower == "mse") return MetricKind::mse;
  if (lower == "psnr") return MetricKind::psnr;
  if (lower == "ssim") return MetricKind::ssim;
  if (lower == "uqi") return MetricKind::uqi;
  throw ArgumentError("unknown metric '" + name + "' (expected mse, psnr, ssim or uqi)");
}

double mse(const ImageTensor& x, const ImageTensor& y) {
  require_same_shape(x, y, "mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = static_cast<double>(x.data[i]) - y.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x.data.size());
}

double psnr(const ImageTensor& x, const ImageTensor& y, PsnrVariant variant) {
  require_same_shape(x, y, "psnr");
  const double err = mse(x, y);
  if (err == 0.0) throw NumericError("psnr: identical images give infinite PSNR");

  double peak = 255.0;
  if (variant == PsnrVariant::paper) {
    peak = 0.0;
    for (float v : x.data) peak = std::max(peak, static_cast<double>(v));
    for (float v : y.data) peak = std::max(peak, static_cast<double>(v));
  }
  return 10.0 * std::log10(peak * peak / err);
}

double ssim(const ImageTensor& x, const ImageTensor& y, const SsimParams& params) {
  require_same_shape(x, y, "ssim");
  if (params.c1 <= 0.0 || params.c2 <= 0.0) throw ArgumentError("ssim: C1 and C2 must be positive");
  if (params.window_size < 3 || params.window_size % 2 == 0)
    throw ArgumentError("ssim: window_size must be odd and >= 3");
  if (params.window_sigma <= 0.0) throw ArgumentError("ssim: window_sigma must be positive");

  if (params.mode == StatMode::global) {
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
      const ChannelStats s = global_stats(x, y, c);
      acc += ssim_term(s.mean_x, s.mean_y, s.var_x, s.var_y, s.cov, params.c1, params.c2);
    }
    return acc / 3.0;
  }

  const int ws = params.window_size;
  if (x.height < ws || x.width < ws)
    throw ArgumentError("ssim: image smaller than the " + std::to_string(ws) + "x" +
                        std::to_string(ws) + " window");

  const std::vector<double> w = gaussian_window(ws, params.window_sigma);
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    double channel_sum = 0.0;
    long count = 0;
    for (int wy = 0; wy + ws <= x.height; ++wy) {
      for (int wx = 0; wx + ws <= x.width; ++wx) {
        double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (int i = 0; i < ws; ++i)
          for (int j = 0; j < ws; ++j) {
            const double wij = w[static_cast<std::size_t>(i) * ws + j];
            const double xv = x.at(wy + i, wx + j, c);
            const double yv = y.at(wy + i, wx + j, c);
            mx += wij * xv;
            my += wij * yv;
            sxx += wij * xv * xv;
            syy += wij * yv * yv;
            sxy += wij * xv * yv;
          }
        const double vx = sxx - mx * mx;
        const double vy = syy - my * my;
        const double cov = sxy - mx * my;
        channel_sum += ssim_term(mx, my, vx, vy, cov, params.c1, params.c2);
        ++count;
      }
    }
    acc += channel_sum / count;
  }
  return acc / 3.0;
}

double uqi(const ImageTensor& x, const ImageTensor& y, StatMode mode, int window) {
  require_same_shape(x, y, "uqi");

  if (mode == StatMode::global) {
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
      const ChannelStats s = global_stats(x, y, c);
      const double denom = (s.var_x + s.var_y) * (s.mean_x * s.mean_x + s.mean_y * s.mean_y);
      if (std::abs(denom) < 1e-12)
        throw NumericError("uqi: degenerate input (zero variance and mean)");
      acc += (4.0 * s.cov * s.mean_x * s.mean_y) / denom;
    }
    return acc / 3.0;
  }

  if (window < 1) throw ArgumentError("uqi: window must be >= 1");
  const int ws = std::min({window, x.height, x.width});
  const double n = static_cast<double>(ws) * ws;

  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    double channel_sum = 0.0;
    long used = 0;
    for (int wy = 0; wy + ws <= x.height; ++wy) {
      for (int wx = 0; wx + ws <= x.width; ++wx) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (int i = 0; i < ws; ++i)
          for (int j = 0; j < ws; ++j) {
            const double xv = x.at(wy + i, wx + j, c);
            const double yv = y.at(wy + i, wx + j, c);
            sx += xv;
            sy += yv;
            sxx += xv * xv;
            syy += yv * yv;
            sxy += xv * yv;
          }
        const double mx = sx / n, my = sy / n;
        const double vx = sxx / n - mx * mx;
        const double vy = syy / n - my * my;
        const double cov = sxy / n - mx * my;
        const double denom = (vx + vy) * (mx * mx + my * my);
        if (std::abs(denom) < 1e-12) continue;  // constant window, skip
        channel_sum += (4.0 * cov * mx * my) / denom;
        ++used;
      }
    }
    if (used == 0) throw NumericError("uqi: all windows degenerate (constant images)");
    acc += channel_sum / used;
  }
  return acc / 3.0;
}

}  // namespace fsr
