#pragma once

namespace stiefel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stiefel
