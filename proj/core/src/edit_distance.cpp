#include "polyboost/edit_distance.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "polyboost/text.hpp"

namespace polyboost {

std::size_t edit_distance(std::span<const char32_t> a, std::span<const char32_t> b) {
  // Keep the shorter sequence as the DP row.
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();

  // Shared affixes never contribute to the distance; stripping them keeps the
  // quadratic part proportional to the revised region, which is what corpus
  // revisions look like in practice.
  std::size_t prefix = 0;
  while (prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < b.size() - prefix && a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  a = a.subspan(prefix, a.size() - prefix - suffix);
  b = b.subspan(prefix, b.size() - prefix - suffix);
  if (b.empty()) return a.size();

  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({row[j - 1] + 1, above + 1, substitute});
      diagonal = above;
    }
  }
  return row[b.size()];
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const auto a_scalars = decode_utf8(a);
  const auto b_scalars = decode_utf8(b);
  return edit_distance(std::span<const char32_t>(a_scalars), std::span<const char32_t>(b_scalars));
}

}  // namespace polyboost
