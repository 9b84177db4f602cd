#include <doctest.h>

#include "fsr/checkpoint.hpp"
#include "fsr/error.hpp"
#include "fsr/rng.hpp"
#include "fsr/unet.hpp"
#include "test_support.hpp"

using fsr::AdamState;
using fsr::UNetConfig;
using fsr::UNetModel;
using testsup::TempDir;

namespace {

struct Fixture {
  UNetModel model;
  AdamState state;

  Fixture() : model(make_config()), state() {
    model.init_parameters(55);
    state = AdamState::init_for(model, 2.5e-4);
    fsr::Rng rng(56);
    for (auto& t : state.m)
      for (float& v : t) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& t : state.v)
      for (float& v : t) v = static_cast<float>(rng.uniform(0.0, 1.0));
    state.t = 1234567890123ULL;
  }

  static UNetConfig make_config() {
    UNetConfig cfg;
    cfg.base_channels = 3;
    cfg.mid_channels = 5;
    return cfg;
  }
};

}  // namespace

TEST_CASE("checkpoint save/load round trip is bit-exact") {
  Fixture fx;
  TempDir dir("ckpt");
  fsr::checkpoint_save(fx.model, fx.state, dir.file("a.fsr"));

  const fsr::Checkpoint back = fsr::checkpoint_load(dir.file("a.fsr"));
  CHECK(back.model.config == fx.model.config);

  const auto orig = fx.model.parameters();
  const auto loaded = back.model.parameters();
  REQUIRE(orig.size() == loaded.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    CHECK(orig[i].name == loaded[i].name);
    CHECK(*orig[i].values == *loaded[i].values);  // float vectors, bitwise
  }
  CHECK(back.state.m == fx.state.m);
  CHECK(back.state.v == fx.state.v);
  CHECK(back.state.t == fx.state.t);
  CHECK(back.state.lr == fx.state.lr);

  // re-saving the loaded checkpoint reproduces the file byte for byte
  fsr::checkpoint_save(back.model, back.state, dir.file("b.fsr"));
  CHECK(testsup::read_file_bytes(dir.file("a.fsr")) ==
        testsup::read_file_bytes(dir.file("b.fsr")));
}

TEST_CASE("corrupted magic bytes are a distinct error") {
  Fixture fx;
  TempDir dir("ckpt");
  fsr::checkpoint_save(fx.model, fx.state, dir.file("x.fsr"));
  std::string bytes = testsup::read_file_bytes(dir.file("x.fsr"));
  bytes[0] = 'X';
  testsup::write_file_bytes(dir.file("x.fsr"), bytes);
  CHECK_THROWS_WITH_AS(fsr::checkpoint_load(dir.file("x.fsr")), doctest::Contains("bad magic"),
                       fsr::IoError);
}

TEST_CASE("unknown version is a distinct error") {
  Fixture fx;
  TempDir dir("ckpt");
  fsr::checkpoint_save(fx.model, fx.state, dir.file("x.fsr"));
  std::string bytes = testsup::read_file_bytes(dir.file("x.fsr"));
  bytes[4] = 9;  // version field
  testsup::write_file_bytes(dir.file("x.fsr"), bytes);
  CHECK_THROWS_WITH_AS(fsr::checkpoint_load(dir.file("x.fsr")), doctest::Contains("version"),
                       fsr::IoError);
}

TEST_CASE("truncation mid-tensor is a distinct error and returns no model") {
  Fixture fx;
  TempDir dir("ckpt");
  fsr::checkpoint_save(fx.model, fx.state, dir.file("x.fsr"));
  const std::string bytes = testsup::read_file_bytes(dir.file("x.fsr"));
  testsup::write_file_bytes(dir.file("x.fsr"), bytes.substr(0, bytes.size() / 3));
  CHECK_THROWS_WITH_AS(fsr::checkpoint_load(dir.file("x.fsr")), doctest::Contains("truncated"),
                       fsr::IoError);
}

TEST_CASE("payload corruption fails the CRC") {
  Fixture fx;
  TempDir dir("ckpt");
  fsr::checkpoint_save(fx.model, fx.state, dir.file("x.fsr"));
  std::string bytes = testsup::read_file_bytes(dir.file("x.fsr"));
  bytes[bytes.size() / 2] ^= 0x40;  // flip a bit inside some tensor
  testsup::write_file_bytes(dir.file("x.fsr"), bytes);
  CHECK_THROWS_WITH_AS(fsr::checkpoint_load(dir.file("x.fsr")), doctest::Contains("CRC"),
                       fsr::IoError);
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(fsr::checkpoint_load("/nonexistent/x.fsr"), fsr::IoError);
}

TEST_CASE("loaded model runs identically to the saved one") {
  Fixture fx;
  TempDir dir("ckpt");
  fsr::checkpoint_save(fx.model, fx.state, dir.file("m.fsr"));
  const fsr::Checkpoint back = fsr::checkpoint_load(dir.file("m.fsr"));

  fsr::Rng rng(57);
  const fsr::Tensor4 probe = testsup::random_tensor(rng, 1, 8, 8, 3, 0.0, 255.0);
  CHECK(fsr::unet_infer(fx.model, probe).data == fsr::unet_infer(back.model, probe).data);
}
