#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace infoseek::core {

std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);
std::vector<std::string_view> split_whitespace(std::string_view text);

// Lowercase, trim and collapse internal whitespace runs to one space.
std::string normalize_query(std::string_view text);

std::string replace_all(std::string_view text, std::string_view from, std::string_view to);
bool contains(std::string_view haystack, std::string_view needle);
bool starts_with_icase(std::string_view text, std::string_view prefix);

// Stable 64-bit FNV-1a digest, used for deterministic ids and seeds.
std::uint64_t fnv1a64(std::string_view text);
std::string hex_digest(std::string_view text, std::size_t width = 12);

// UTF-8 helpers: code point counts and offset conversions.
std::size_t utf8_length(std::string_view text);
std::size_t utf8_codepoint_offset(std::string_view text, std::size_t byte_offset);
std::size_t utf8_byte_offset(std::string_view text, std::size_t codepoint_offset);

// Keeps the first and last parts of `text` so the result is at most
// `budget` bytes, joined by a marker line.
std::string truncate_head_tail(std::string_view text, std::size_t budget);

// Replaces `{name}` placeholders. Unknown placeholders are left as is.
std::string render_template(std::string_view templ,
                            const std::vector<std::pair<std::string, std::string>>& values);

} // namespace infoseek::core
