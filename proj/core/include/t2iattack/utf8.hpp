#pragma once

#include <string>
#include <string_view>

namespace t2ia::utf8 {

// Invalid sequences decode to U+FFFD.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view scalars);
std::string encode(char32_t scalar);

bool is_ascii_punct(char32_t c);
bool is_space(char32_t c);
char32_t to_lower(char32_t c);
char32_t to_upper(char32_t c);
bool has_case(char32_t c);

std::string lower(std::string_view text);

}  // namespace t2ia::utf8
