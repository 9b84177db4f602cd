#pragma once

#include <string>

#include "fsr/optim.hpp"
#include "fsr/unet.hpp"

namespace fsr {

/// Binary checkpoint, little-endian:
///   magic "FSR1" | version u32 = 1
///   model tensor count u32, then per tensor:
///     name length u16 | UTF-8 name | rank u8 | dims u32 each | f32 data
///   optimizer tensor count u32, same per-tensor layout ("<name>.m", "<name>.v")
///   t u64 | lr f64 | CRC32 u32 of all preceding bytes
void checkpoint_save(const UNetModel& model, const AdamState& state, const std::string& path);

struct Checkpoint {
  UNetModel model;
  AdamState state;
};

/// Round-trip is bit-exact. Distinct errors for bad magic, version mismatch,
/// truncation, CRC mismatch and shape disagreement.
Checkpoint checkpoint_load(const std::string& path);

}  // namespace fsr
