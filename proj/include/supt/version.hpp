#pragma once

namespace supt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace supt
