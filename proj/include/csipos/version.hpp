#pragma once

namespace csipos {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace csipos
