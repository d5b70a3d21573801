#pragma once

namespace switchrd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace switchrd
