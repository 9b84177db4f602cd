#include "fsr/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "fsr/error.hpp"

namespace fsr {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'R', '1'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::vector<std::uint8_t>& buf, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(p);
  buf.insert(buf.end(), b, b + n);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_le(buf, bits);
}

void put_f64(std::vector<std::uint8_t>& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_le(buf, bits);
}

void put_tensor(std::vector<std::uint8_t>& buf, const std::string& name,
                const std::vector<int>& dims, const std::vector<float>& data) {
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(name.size()));
  put_bytes(buf, name.data(), name.size());
  put_le<std::uint8_t>(buf, static_cast<std::uint8_t>(dims.size()));
  for (int d : dims) put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
  for (float v : data) put_f32(buf, v);
}

// Bounds-checked reader; any overrun means a truncated file.
struct Reader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw IoError("truncated checkpoint");
  }
  template <typename T>
  T get_le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    pos += sizeof(T);
    return static_cast<T>(v);
  }
  float get_f32() {
    const std::uint32_t bits = get_le<std::uint32_t>();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double get_f64() {
    const std::uint64_t bits = get_le<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
};

struct RawTensor {
  std::string name;
  std::vector<int> dims;
  std::vector<float> data;
};

RawTensor read_tensor(Reader& r) {
  RawTensor t;
  const auto name_len = r.get_le<std::uint16_t>();
  t.name = r.get_string(name_len);
  const auto rank = r.get_le<std::uint8_t>();
  std::size_t numel = 1;
  for (int i = 0; i < rank; ++i) {
    const auto d = r.get_le<std::uint32_t>();
    t.dims.push_back(static_cast<int>(d));
    numel *= d;
  }
  r.need(numel * 4);
  t.data.resize(numel);
  for (std::size_t i = 0; i < numel; ++i) t.data[i] = r.get_f32();
  return t;
}

std::uint32_t crc_of(const std::vector<std::uint8_t>& buf, std::size_t len) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(buf.data()),
            static_cast<uInt>(len)));
}

}  // namespace

void checkpoint_save(const UNetModel& model, const AdamState& state, const std::string& path) {
  const auto params = model.parameters();
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ArgumentError("checkpoint_save: optimizer state does not match model");

  std::vector<std::uint8_t> buf;
  put_bytes(buf, kMagic, 4);
  put_le<std::uint32_t>(buf, kVersion);

  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) put_tensor(buf, p.name, p.dims, *p.values);

  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(2 * params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    put_tensor(buf, params[i].name + ".m", params[i].dims, state.m[i]);
    put_tensor(buf, params[i].name + ".v", params[i].dims, state.v[i]);
  }
  put_le<std::uint64_t>(buf, state.t);
  put_f64(buf, state.lr);
  put_le<std::uint32_t>(buf, crc_of(buf, buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for checkpoint '" + path + "'");
}

Checkpoint checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());

  if (buf.size() < 8) throw IoError("truncated checkpoint");
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw IoError("bad magic in checkpoint '" + path + "'");

  Reader r{buf};
  r.pos = 4;
  const auto version = r.get_le<std::uint32_t>();
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));

  const auto model_count = r.get_le<std::uint32_t>();
  std::vector<RawTensor> model_tensors;
  for (std::uint32_t i = 0; i < model_count; ++i) model_tensors.push_back(read_tensor(r));

  const auto opt_count = r.get_le<std::uint32_t>();
  std::vector<RawTensor> opt_tensors;
  for (std::uint32_t i = 0; i < opt_count; ++i) opt_tensors.push_back(read_tensor(r));

  const auto t = r.get_le<std::uint64_t>();
  const double lr = r.get_f64();

  const auto stored_crc = r.get_le<std::uint32_t>();
  if (r.pos != buf.size()) throw IoError("checkpoint has trailing bytes");
  if (stored_crc != crc_of(buf, buf.size() - 4))
    throw IoError("checkpoint CRC mismatch (corrupted file)");

  // Recover the channel plan from the first conv shapes.
  auto find = [&](const char* name) -> const RawTensor* {
    for (const auto& t_ : model_tensors)
      if (t_.name == name) return &t_;
    return nullptr;
  };
  const RawTensor* d1 = find("down1.conv1.weight");
  const RawTensor* d2 = find("down2.conv1.weight");
  if (!d1 || !d2 || d1->dims.size() != 4 || d2->dims.size() != 4)
    throw IoError("checkpoint shape disagreement: missing or malformed conv tensors");

  UNetConfig cfg;
  cfg.in_channels = d1->dims[2];
  cfg.base_channels = d1->dims[3];
  cfg.mid_channels = d2->dims[3];

  Checkpoint ckpt{UNetModel(cfg), AdamState{}};
  auto params = ckpt.model.parameters();
  if (params.size() != model_tensors.size() || opt_tensors.size() != 2 * params.size())
    throw IoError("checkpoint shape disagreement: unexpected tensor count");

  for (std::size_t i = 0; i < params.size(); ++i) {
    const RawTensor& mt = model_tensors[i];
    if (mt.name != params[i].name || mt.dims != params[i].dims ||
        mt.data.size() != params[i].values->size())
      throw IoError("checkpoint shape disagreement for tensor '" + mt.name + "'");
    *params[i].values = mt.data;

    const RawTensor& m = opt_tensors[2 * i];
    const RawTensor& v = opt_tensors[2 * i + 1];
    if (m.name != params[i].name + ".m" || v.name != params[i].name + ".v" ||
        m.data.size() != params[i].values->size() || v.data.size() != params[i].values->size())
      throw IoError("checkpoint shape disagreement in optimizer section for '" + params[i].name +
                    "'");
    ckpt.state.m.push_back(m.data);
    ckpt.state.v.push_back(v.data);
  }
  ckpt.state.t = t;
  ckpt.state.lr = lr;
  return ckpt;
}

}  // namespace fsr
