#pragma once

namespace vecadvect {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace vecadvect
