#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace polyboost {

enum class ResourceLevel { High, Medium, Low };

std::string_view to_string(ResourceLevel level);

/// One entry of the built-in 16-language registry.
struct LanguageInfo {
  std::string_view code;    // 2-letter uppercase identifier, e.g. "FR"
  std::string_view name;    // display name, e.g. "French"
  std::string_view region;  // geographic grouping, e.g. "Western Europe"
  ResourceLevel resource_level;
};

/// The fixed 16-entry registry, in canonical (registry) order.
std::span<const LanguageInfo> language_registry();

/// Looks up a language by its 2-letter code. Case-sensitive.
std::optional<LanguageInfo> find_language(std::string_view code);

bool known_language(std::string_view code);

/// Position of a code within registry order; registry size if unknown.
/// Used to sort per-language output deterministically.
std::size_t registry_rank(std::string_view code);

}  // namespace polyboost
