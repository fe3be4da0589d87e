#pragma once

#include <string_view>

namespace t2ia {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace t2ia
