#pragma once

namespace ouphase {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ouphase
