#pragma once

namespace lb {

inline constexpr const char* kVersion = "1.0.0";

#if defined(__VERSION__)
inline constexpr const char* kCompiler = __VERSION__;
#else
inline constexpr const char* kCompiler = "unknown";
#endif

}  // namespace lb
