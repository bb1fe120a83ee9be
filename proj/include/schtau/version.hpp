#pragma once

namespace schtau {

inline constexpr const char* kVersion = "0.1.0";

// Sampling choices are fixed per release so that identical (version, seed,
// parameters) reproduce identical output bytes.
inline constexpr const char* kRngName = "philox4x32-10";
inline constexpr const char* kNormalMethod = "box-muller";

}  // namespace schtau
