#pragma once

namespace distract {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace distract
