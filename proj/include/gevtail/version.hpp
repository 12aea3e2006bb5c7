#pragma once

#include <string_view>

namespace gevtail {

inline constexpr std::string_view version = "0.1.0";

} // namespace gevtail
