/// @file text.hpp
/// @brief UTF-8 helpers used by tokenizers and metrics.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dtg::text {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

/// Same code point set as Python's str.isspace().
bool is_space(char32_t c);

/// Splits on runs of whitespace (Python str.split() semantics).
std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::u32string> split_whitespace(std::u32string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string trim(std::string_view s);

/// Unicode-aware lowercasing for Latin, Greek and Cyrillic; other scripts pass through.
char32_t to_lower(char32_t c);
std::string to_lower(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

}  // namespace dtg::text
