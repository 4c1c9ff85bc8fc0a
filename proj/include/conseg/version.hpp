#pragma once

namespace conseg {

inline constexpr const char* kToolName = "conseg";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace conseg
