#pragma once

namespace riskgrad {

inline constexpr const char* kVersion = "0.1.0";

} // namespace riskgrad
