#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace taglab {

// UTF-8 <-> code point conversion. Invalid input raises FormatError.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

char32_t to_lower(char32_t c);
std::string to_lower(std::string_view text);

// Number of Unicode scalar values in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

// Splits a UTF-8 string into one string per code point.
std::vector<std::string> utf8_chars(std::string_view text);

}  // namespace taglab
