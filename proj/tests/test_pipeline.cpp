#include <doctest.h>

#include <cmath>

#include "fsr/error.hpp"
#include "fsr/pipeline.hpp"
#include "fsr/rng.hpp"
#include "fsr/unet.hpp"
#include "test_support.hpp"

using fsr::AlphaMatte;
using fsr::ImageTensor;
using fsr::Mask;
using testsup::TempDir;

namespace {

Mask half_plane_mask(int h, int w) {
  Mask m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w / 2; ++x) m.at(y, x) = 1;
  return m;
}

// Sum of squared forward differences over a band around the mask boundary
// column; the measure used for the jittered-edge checks.
double boundary_gradient_energy(const ImageTensor& img, int band_lo, int band_hi) {
  double acc = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = band_lo; x < std::min(band_hi, img.width - 1); ++x)
      for (int c = 0; c < 3; ++c) {
        const double dx = img.at(y, x + 1, c) - img.at(y, x, c);
        acc += dx * dx;
      }
  return acc;
}

}  // namespace

TEST_CASE("load_mask thresholds white and black PNGs") {
  TempDir dir("mask");
  fsr::save_image(ImageTensor(4, 6, 255.0f), dir.file("white.png"));
  fsr::save_image(ImageTensor(4, 6, 0.0f), dir.file("black.png"));
  fsr::save_image(ImageTensor(4, 6, 127.0f), dir.file("mid.png"));

  const Mask white = fsr::load_mask(dir.file("white.png"));
  for (auto b : white.bits) CHECK(b == 1);
  const Mask black = fsr::load_mask(dir.file("black.png"));
  for (auto b : black.bits) CHECK(b == 0);
  // exactly 127 is not "> 127"
  const Mask mid = fsr::load_mask(dir.file("mid.png"));
  for (auto b : mid.bits) CHECK(b == 0);
}

TEST_CASE("combine_masks is the union of instances") {
  Mask left(4, 8), right(4, 8);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) left.at(y, x) = 1;
    for (int x = 4; x < 8; ++x) right.at(y, x) = 1;
  }
  const Mask both = fsr::combine_masks({left, right});
  for (auto b : both.bits) CHECK(b == 1);

  CHECK_THROWS_AS(fsr::combine_masks({left, Mask(3, 8)}), fsr::ArgumentError);
  CHECK_THROWS_AS(fsr::combine_masks({}), fsr::ArgumentError);
}

TEST_CASE("extract_foreground basics") {
  fsr::Rng rng(1);
  const ImageTensor img = testsup::random_image(rng, 6, 6);

  CHECK(fsr::extract_foreground(img, Mask(6, 6, 1)).data == img.data);

  const ImageTensor black = fsr::extract_foreground(img, Mask(6, 6, 0));
  for (float v : black.data) CHECK(v == 0.0f);

  Mask checker(6, 6);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) checker.at(y, x) = (x + y) % 2;
  const ImageTensor constant(6, 6, 100.0f);
  const ImageTensor out = fsr::extract_foreground(constant, checker);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == ((x + y) % 2 ? 100.0f : 0.0f));

  CHECK_THROWS_AS(fsr::extract_foreground(img, Mask(5, 6)), fsr::ArgumentError);
}

TEST_CASE("feather radius 0 equals the mask bit-exactly") {
  const Mask m = half_plane_mask(8, 8);
  const AlphaMatte a = fsr::feather_mask(m, 0.0);
  for (std::size_t i = 0; i < m.bits.size(); ++i)
    CHECK(a.alpha[i] == static_cast<float>(m.bits[i]));
}

TEST_CASE("feathering an all-ones mask keeps alpha at 1 for any radius") {
  const Mask ones(10, 7, 1);
  for (double r : {0.5, 1.0, 2.0, 5.0}) {
    const AlphaMatte a = fsr::feather_mask(ones, r);
    for (float v : a.alpha) CHECK(v == 1.0f);
  }
}

TEST_CASE("feathering keeps deep background at exactly 0 and interior at exactly 1") {
  Mask m(32, 32);
  for (int y = 12; y < 20; ++y)
    for (int x = 12; x < 20; ++x) m.at(y, x) = 1;
  const AlphaMatte a = fsr::feather_mask(m, 2.0);  // sigma 1, half-width 3
  CHECK(a.at(16, 16) == 1.0f);  // deep interior
  CHECK(a.at(0, 0) == 0.0f);    // far background
  CHECK(a.at(16, 22) > 0.0f);   // inside the 3-pixel feather band past col 19
  CHECK(a.at(16, 22) < 1.0f);
}

TEST_CASE("half-plane feather profile matches the 2D convolution oracle") {
  const Mask m = half_plane_mask(24, 24);
  for (double r : {1.0, 2.0, 4.0}) {
    const AlphaMatte got = fsr::feather_mask(m, r);
    const std::vector<double> want = testsup::oracle_feather(m, r);
    for (std::size_t i = 0; i < want.size(); ++i)
      CHECK(got.alpha[i] == doctest::Approx(want[i]).epsilon(1e-6));
  }
}

TEST_CASE("composite blend cases") {
  fsr::Rng rng(2);
  const ImageTensor lr = testsup::random_image(rng, 8, 8);
  ImageTensor sr = testsup::random_image(rng, 8, 8, -50.0, 300.0);  // out of range on purpose

  // alpha = 0: LR bit-exact
  const ImageTensor zero = fsr::composite(sr, lr, AlphaMatte(8, 8, 0.0f));
  CHECK(zero.data == lr.data);

  // alpha = 1: clamped SR
  const ImageTensor one = fsr::composite(sr, lr, AlphaMatte(8, 8, 1.0f));
  for (std::size_t i = 0; i < sr.data.size(); ++i)
    CHECK(one.data[i] == std::min(std::max(sr.data[i], 0.0f), 255.0f));

  // alpha = 0.5 of constants
  const ImageTensor blend =
      fsr::composite(ImageTensor(8, 8, 200.0f), ImageTensor(8, 8, 100.0f), AlphaMatte(8, 8, 0.5f));
  for (float v : blend.data) CHECK(v == 150.0f);

  CHECK_THROWS_AS(fsr::composite(sr, ImageTensor(7, 8), AlphaMatte(8, 8, 0.5f)),
                  fsr::ArgumentError);
  CHECK_THROWS_AS(fsr::composite(sr, lr, AlphaMatte(8, 7, 0.5f)), fsr::ArgumentError);
}

TEST_CASE("composite(x, x, any alpha) == clamp(x)") {
  fsr::Rng rng(3);
  const ImageTensor x = testsup::random_image(rng, 6, 6);
  AlphaMatte a(6, 6);
  for (float& v : a.alpha) v = static_cast<float>(rng.next_double());
  const ImageTensor out = fsr::composite(x, x, a);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(x.data[i]).epsilon(1e-6));
}

TEST_CASE("run_pipeline with an all-zeros mask returns the LR image") {
  fsr::UNetConfig cfg;
  cfg.base_channels = 4;
  cfg.mid_channels = 6;
  fsr::UNetModel model(cfg);
  model.init_parameters(9);

  fsr::Rng rng(4);
  const ImageTensor lr = testsup::random_image(rng, 16, 16);
  for (auto mode : {fsr::SrInputMode::masked, fsr::SrInputMode::full}) {
    const ImageTensor out = fsr::run_pipeline(model, lr, {Mask(16, 16, 0)}, 0.0, mode);
    CHECK(out.data == lr.data);
  }
}

TEST_CASE("run_pipeline with a zero-weight model and all-ones mask gives black") {
  fsr::UNetConfig cfg;
  cfg.base_channels = 4;
  cfg.mid_channels = 6;
  const fsr::UNetModel model(cfg);  // all-zero parameters

  fsr::Rng rng(5);
  const ImageTensor lr = testsup::random_image(rng, 16, 16);
  const ImageTensor out = fsr::run_pipeline(model, lr, {Mask(16, 16, 1)}, 0.0);
  for (float v : out.data) CHECK(v == 0.0f);
}

TEST_CASE("run_pipeline equals the hand-composed component sequence bit-exactly") {
  fsr::UNetConfig cfg;
  cfg.base_channels = 4;
  cfg.mid_channels = 6;
  fsr::UNetModel model(cfg);
  model.init_parameters(10);

  fsr::Rng rng(6);
  const ImageTensor lr = testsup::random_image(rng, 16, 16);
  Mask m(16, 16);
  for (int y = 4; y < 12; ++y)
    for (int x = 4; x < 12; ++x) m.at(y, x) = 1;

  SUBCASE("masked mode") {
    const ImageTensor got = fsr::run_pipeline(model, lr, {m}, 1.5, fsr::SrInputMode::masked);
    const ImageTensor fg = fsr::extract_foreground(lr, m);
    const fsr::Tensor4 sr = fsr::unet_infer(model, fsr::image_to_tensor(fg));
    const ImageTensor want =
        fsr::composite(fsr::tensor_to_image(sr), lr, fsr::feather_mask(m, 1.5));
    CHECK(got.data == want.data);
  }
  SUBCASE("full mode") {
    const ImageTensor got = fsr::run_pipeline(model, lr, {m}, 0.0, fsr::SrInputMode::full);
    const fsr::Tensor4 sr = fsr::unet_infer(model, fsr::image_to_tensor(lr));
    const ImageTensor want =
        fsr::composite(fsr::tensor_to_image(sr), lr, fsr::feather_mask(m, 0.0));
    CHECK(got.data == want.data);
  }
}

TEST_CASE("background preservation and foreground provenance at radius 0") {
  fsr::UNetConfig cfg;
  cfg.base_channels = 4;
  cfg.mid_channels = 6;
  fsr::UNetModel model(cfg);
  model.init_parameters(11);

  fsr::Rng rng(7);
  const ImageTensor lr = testsup::random_image(rng, 16, 16);
  const Mask m = half_plane_mask(16, 16);

  const ImageTensor out = fsr::run_pipeline(model, lr, {m}, 0.0);
  const fsr::Tensor4 sr =
      fsr::unet_infer(model, fsr::image_to_tensor(fsr::extract_foreground(lr, m)));
  const ImageTensor sr_img = fsr::tensor_to_image(sr);

  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) {
        if (m.at(y, x))
          CHECK(out.at(y, x, c) == sr_img.at(y, x, c));
        else
          CHECK(out.at(y, x, c) == lr.at(y, x, c));
      }
}

TEST_CASE("feathering monotonicity: wider radius never increases boundary energy") {
  // constructed jitter case: SR side bright, LR side dark, seam at w/2
  const int n = 32;
  const ImageTensor sr(n, n, 200.0f);
  const ImageTensor lr(n, n, 100.0f);
  const Mask m = half_plane_mask(n, n);

  double prev = std::numeric_limits<double>::infinity();
  for (double r : {0.0, 1.0, 2.0, 4.0, 8.0}) {
    const ImageTensor out = fsr::composite(sr, lr, fsr::feather_mask(m, r));
    const double energy = boundary_gradient_energy(out, n / 2 - 8, n / 2 + 8);
    CHECK(energy <= prev);
    prev = energy;
  }
}
