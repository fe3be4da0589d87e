#pragma once

#include <string_view>

namespace t2ia::bundled {

std::string_view homoglyphs();
std::string_view phonetics();
std::string_view reference_captions();
std::string_view synthetic_keywords();

}  // namespace t2ia::bundled
