#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace polyboost {

/// Unit-cost Levenshtein distance between two UTF-8 strings, counted over
/// Unicode scalar values. Symmetric; zero iff the strings are equal.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Same distance over already-decoded scalar sequences.
std::size_t edit_distance(std::span<const char32_t> a, std::span<const char32_t> b);

}  // namespace polyboost
