#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace polyboost {

// All length and distance computations in this project count Unicode scalar
// values, never bytes. These helpers are the single UTF-8 boundary.

/// Decodes UTF-8 into a sequence of Unicode scalar values.
/// Throws std::invalid_argument on malformed input (overlong forms,
/// surrogates, truncated sequences).
std::vector<char32_t> decode_utf8(std::string_view text);

/// Encodes a sequence of Unicode scalar values back to UTF-8.
std::string encode_utf8(const std::vector<char32_t>& scalars);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t scalar_length(std::string_view text);

/// Trims ASCII whitespace (' ', '\t', '\r', '\n', '\f', '\v') from both ends.
std::string_view trim_whitespace(std::string_view text);

/// True if `text` is empty after whitespace trimming.
bool blank(std::string_view text);

/// At most `max_bytes` leading bytes, never splitting a UTF-8 sequence.
std::string_view utf8_clip_prefix(std::string_view text, std::size_t max_bytes);

/// At most `max_bytes` trailing bytes, never splitting a UTF-8 sequence.
std::string_view utf8_clip_suffix(std::string_view text, std::size_t max_bytes);

}  // namespace polyboost
