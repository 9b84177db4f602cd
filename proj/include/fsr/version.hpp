#pragma once

namespace fsr {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace fsr
