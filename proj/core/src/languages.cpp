#include "polyboost/languages.hpp"

#include <array>

namespace polyboost {

namespace {

// Registry order follows the published language table: Europe west to east,
// then MENA, East Asia, Southeast Asia.
constexpr std::array<LanguageInfo, 16> kRegistry{{
    {"FR", "French", "Western Europe", ResourceLevel::High},
    {"DE", "German", "Central Europe", ResourceLevel::High},
    {"CS", "Czech", "Central Europe", ResourceLevel::Medium},
    {"EL", "Greek", "Southern Europe", ResourceLevel::Low},
    {"IT", "Italian", "Southern Europe", ResourceLevel::Medium},
    {"PT", "Portuguese", "Southern Europe", ResourceLevel::Medium},
    {"ES", "Spanish", "Southern Europe", ResourceLevel::High},
    {"RU", "Russian", "Eastern Europe and Northern Asia", ResourceLevel::Medium},
    {"TR", "Turkish", "Eastern Europe and Northern Asia", ResourceLevel::Medium},
    {"AR", "Arabic", "Middle East and North Africa", ResourceLevel::High},
    {"JA", "Japanese", "East Asia", ResourceLevel::High},
    {"KO", "Korean", "East Asia", ResourceLevel::Medium},
    {"ID", "Indonesian", "Southeast Asia", ResourceLevel::Low},
    {"MS", "Malay", "Southeast Asia", ResourceLevel::Low},
    {"TH", "Thai", "Southeast Asia", ResourceLevel::Low},
    {"VI", "Vietnamese", "Southeast Asia", ResourceLevel::Medium},
}};

}  // namespace

std::string_view to_string(ResourceLevel level) {
  switch (level) {
    case ResourceLevel::High:
      return "High";
    case ResourceLevel::Medium:
      return "Medium";
    case ResourceLevel::Low:
      return "Low";
  }
  return "Unknown";
}

std::span<const LanguageInfo> language_registry() {
  return kRegistry;
}

std::optional<LanguageInfo> find_language(std::string_view code) {
  for (const auto& entry : kRegistry) {
    if (entry.code == code) return entry;
  }
  return std::nullopt;
}

bool known_language(std::string_view code) {
  return find_language(code).has_value();
}

std::size_t registry_rank(std::string_view code) {
  for (std::size_t i = 0; i < kRegistry.size(); ++i) {
    if (kRegistry[i].code == code) return i;
  }
  return kRegistry.size();
}

}  // namespace polyboost
