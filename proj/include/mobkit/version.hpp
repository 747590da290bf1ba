#pragma once

namespace mobkit {

inline constexpr const char* kVersion = "0.1.0";

} // namespace mobkit
