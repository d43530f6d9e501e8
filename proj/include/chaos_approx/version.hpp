#pragma once

namespace chaos {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace chaos
