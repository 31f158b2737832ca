#pragma once

namespace absnf {

inline constexpr const char* kToolName = "absnf";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace absnf
