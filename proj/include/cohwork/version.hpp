#pragma once

namespace cohwork {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cohwork
