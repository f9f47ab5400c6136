#pragma once

namespace tmr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tmr
