#include "polyboost/corpus.hpp"

#include <array>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "polyboost/text.hpp"

namespace polyboost {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 10> kContentCriteria{
    "Contextualization", "Relevance",         "Feasibility", "Timelineness", "Humanization",
    "Comprehensiveness", "Richness",          "Correctness", "Readability",  "Safety",
};
constexpr std::array<std::string_view, 6> kTranslationCriteria{
    "Fluency", "Grammar", "Translation Elegancy", "Omitted translation", "Spelling",
    "Incorrect translation",
};
constexpr std::array<std::string_view, 4> kLocalizationCriteria{
    "Culture localization", "Geocultural term repair", "Ideology localization",
    "Expression localization",
};

[[noreturn]] void line_error(std::size_t line, const std::string& detail) {
  throw ValidationError("line " + std::to_string(line) + ": " + detail);
}

std::string require_string(const json& object, const char* field, std::size_t line) {
  if (!object.contains(field)) line_error(line, std::string("missing field ") + field);
  const auto& value = object.at(field);
  if (!value.is_string()) line_error(line, std::string("field ") + field + " must be a string");
  return value.get<std::string>();
}

json parse_line(const std::string& text, std::size_t line) {
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) line_error(line, "invalid JSON");
  if (!value.is_object()) line_error(line, "record must be a JSON object");
  return value;
}

void check_record(const InstructionPair& pair, std::size_t line) {
  if (!known_language(pair.language)) line_error(line, "unknown language code " + pair.language);
  const auto violations = validate_pair(pair);
  if (!violations.empty()) line_error(line, "invalid record: " + violations.front().describe());
}

InstructionPair pair_from_json(const json& object, std::size_t line) {
  InstructionPair pair;
  pair.id = require_string(object, "id", line);
  pair.language = require_string(object, "language", line);
  pair.instruction = require_string(object, "instruction", line);
  pair.input = require_string(object, "input", line);
  pair.response = require_string(object, "output", line);
  return pair;
}

InstructionPair side_from_json(const json& object, const char* side, const std::string& id,
                               const std::string& language, std::size_t line) {
  if (!object.contains(side)) line_error(line, std::string("missing field ") + side);
  const auto& value = object.at(side);
  if (!value.is_object()) line_error(line, std::string("field ") + side + " must be an object");
  const auto nested = [&](const char* field) {
    if (!value.contains(field)) {
      line_error(line, std::string("missing field ") + side + "." + field);
    }
    if (!value.at(field).is_string()) {
      line_error(line, std::string("field ") + side + "." + field + " must be a string");
    }
    return value.at(field).get<std::string>();
  };
  InstructionPair pair;
  pair.id = id;
  pair.language = language;
  pair.instruction = nested("instruction");
  pair.input = nested("input");
  pair.response = nested("output");
  return pair;
}

/// Reads a JSON-lines file, invoking `consume(parsed_object, line_number)` per
/// non-blank line. Line numbers are 1-based and count blank lines too.
template <typename Consume>
void for_each_line(const std::filesystem::path& path, Consume&& consume) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (blank(text)) continue;
    consume(parse_line(text, line), line);
  }
}

class DuplicateGuard {
 public:
  void check(const std::string& language, const std::string& id, std::size_t line) {
    if (!seen_.insert(language + '\x1f' + id).second) {
      line_error(line, "duplicate id \"" + id + "\" for language " + language);
    }
  }

 private:
  std::unordered_set<std::string> seen_;
};

ordered_json pair_fields_json(const InstructionPair& pair) {
  return ordered_json{
      {"instruction", pair.instruction}, {"input", pair.input}, {"output", pair.response}};
}

void write_lines(const std::filesystem::path& path, const std::string& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << payload;
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char byte : text) {
    hash ^= byte;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t splitmix64(std::uint64_t value) {
  value += 0x9E3779B97F4A7C15ULL;
  value = (value ^ (value >> 30)) * 0xBF58476D1CE4E5B9ULL;
  value = (value ^ (value >> 27)) * 0x94D049BB133111EBULL;
  return value ^ (value >> 31);
}

/// Unbiased draw from [0, bound) via rejection sampling; keeps shuffles
/// reproducible across standard-library implementations.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (~bound + 1) % bound;
  while (true) {
    const std::uint64_t raw = rng();
    if (raw >= threshold) return raw % bound;
  }
}

}  // namespace

std::string_view to_string(CriterionCategory category) {
  switch (category) {
    case CriterionCategory::ContentBoosting:
      return "Content Boosting";
    case CriterionCategory::TranslationBoosting:
      return "Translation Boosting";
    case CriterionCategory::Localization:
      return "Localization";
  }
  return "Unknown";
}

std::span<const std::string_view> criteria_for(CriterionCategory category) {
  switch (category) {
    case CriterionCategory::ContentBoosting:
      return kContentCriteria;
    case CriterionCategory::TranslationBoosting:
      return kTranslationCriteria;
    case CriterionCategory::Localization:
      return kLocalizationCriteria;
  }
  return {};
}

CriterionTag parse_criterion_tag(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw ValidationError("criterion tag must be \"Category/Name\": " + std::string(text));
  }
  const std::string_view category_text = text.substr(0, slash);
  const std::string_view name = text.substr(slash + 1);
  CriterionCategory category;
  if (category_text == "Content Boosting") {
    category = CriterionCategory::ContentBoosting;
  } else if (category_text == "Translation Boosting") {
    category = CriterionCategory::TranslationBoosting;
  } else if (category_text == "Localization") {
    category = CriterionCategory::Localization;
  } else {
    throw ValidationError("unknown criterion category: " + std::string(category_text));
  }
  const auto names = criteria_for(category);
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ValidationError("criterion \"" + std::string(name) + "\" does not belong to category " +
                          std::string(category_text));
  }
  return CriterionTag{category, std::string(name)};
}

std::string format_criterion_tag(const CriterionTag& tag) {
  return std::string(to_string(tag.category)) + "/" + tag.name;
}

RevisionExample make_revision_example(InstructionPair original, InstructionPair boosted,
                                      std::vector<CriterionTag> tags) {
  if (original.language != boosted.language) {
    throw ValidationError("revision sides disagree on language: " + original.language + " vs " +
                          boosted.language);
  }
  if (original.id != boosted.id) {
    throw ValidationError("revision sides disagree on id: " + original.id + " vs " + boosted.id);
  }
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  return RevisionExample{std::move(original), std::move(boosted), std::move(tags), std::nullopt};
}

std::string_view to_string(ViolationRule rule) {
  switch (rule) {
    case ViolationRule::NonEmpty:
      return "NonEmpty";
    case ViolationRule::MarkerCollision:
      return "MarkerCollision";
    case ViolationRule::UnknownLanguage:
      return "UnknownLanguage";
  }
  return "Unknown";
}

std::string Violation::describe() const {
  return std::string(to_string(rule)) + "(" + field + ")";
}

std::vector<Violation> validate_pair(const InstructionPair& pair) {
  std::vector<Violation> violations;
  if (blank(pair.instruction)) violations.push_back({"instruction", ViolationRule::NonEmpty});
  if (blank(pair.response)) violations.push_back({"response", ViolationRule::NonEmpty});
  const auto has_marker = [](std::string_view text) {
    return text.find(kInstructionMarker) != std::string_view::npos ||
           text.find(kInputMarker) != std::string_view::npos ||
           text.find(kResponseMarker) != std::string_view::npos;
  };
  const std::pair<std::string_view, std::string_view> fields[] = {
      {"id", pair.id},
      {"instruction", pair.instruction},
      {"input", pair.input},
      {"response", pair.response},
  };
  for (const auto& [field, value] : fields) {
    if (has_marker(value)) violations.push_back({std::string(field), ViolationRule::MarkerCollision});
  }
  if (!known_language(pair.language)) {
    violations.push_back({"language", ViolationRule::UnknownLanguage});
  }
  return violations;
}

Dataset<InstructionPair> load_pairs(const std::filesystem::path& path) {
  std::vector<InstructionPair> records;
  DuplicateGuard duplicates;
  for_each_line(path, [&](const json& object, std::size_t line) {
    InstructionPair pair = pair_from_json(object, line);
    check_record(pair, line);
    duplicates.check(pair.language, pair.id, line);
    records.push_back(std::move(pair));
  });
  return Dataset<InstructionPair>(std::move(records));
}

Dataset<RevisionExample> load_revisions(const std::filesystem::path& path) {
  std::vector<RevisionExample> records;
  DuplicateGuard duplicates;
  for_each_line(path, [&](const json& object, std::size_t line) {
    const std::string id = require_string(object, "id", line);
    const std::string language = require_string(object, "language", line);
    InstructionPair original = side_from_json(object, "original", id, language, line);
    InstructionPair boosted = side_from_json(object, "boosted", id, language, line);
    check_record(original, line);
    check_record(boosted, line);
    duplicates.check(language, id, line);

    std::vector<CriterionTag> tags;
    if (object.contains("tags")) {
      const auto& raw = object.at("tags");
      if (!raw.is_array()) line_error(line, "field tags must be an array");
      for (const auto& entry : raw) {
        if (!entry.is_string()) line_error(line, "field tags must contain strings");
        try {
          tags.push_back(parse_criterion_tag(entry.get<std::string>()));
        } catch (const ValidationError& error) {
          line_error(line, error.what());
        }
      }
    }
    RevisionExample example =
        make_revision_example(std::move(original), std::move(boosted), std::move(tags));
    if (object.contains("distance")) {
      const auto& raw = object.at("distance");
      if (!raw.is_number_unsigned()) {
        line_error(line, "field distance must be a non-negative integer");
      }
      example.distance = raw.get<std::size_t>();
    }
    records.push_back(std::move(example));
  });
  return Dataset<RevisionExample>(std::move(records));
}

void save_pairs(const Dataset<InstructionPair>& dataset, const std::filesystem::path& path) {
  std::string payload;
  for (const auto& pair : dataset.records()) {
    ordered_json object{{"id", pair.id},
                        {"language", pair.language},
                        {"instruction", pair.instruction},
                        {"input", pair.input},
                        {"output", pair.response}};
    payload += object.dump();
    payload += '\n';
  }
  write_lines(path, payload);
}

void save_revisions(const Dataset<RevisionExample>& dataset, const std::filesystem::path& path) {
  std::string payload;
  for (const auto& example : dataset.records()) {
    ordered_json object{{"id", example.original.id},
                        {"language", example.original.language},
                        {"original", pair_fields_json(example.original)},
                        {"boosted", pair_fields_json(example.boosted)}};
    ordered_json tags = ordered_json::array();
    for (const auto& tag : example.tags) tags.push_back(format_criterion_tag(tag));
    object["tags"] = std::move(tags);
    if (example.distance) object["distance"] = *example.distance;
    payload += object.dump();
    payload += '\n';
  }
  write_lines(path, payload);
}

namespace detail {

std::vector<std::size_t> seeded_sample(std::vector<std::size_t> eligible, std::size_t n,
                                       std::uint64_t seed, std::string_view language) {
  if (eligible.size() < n) {
    throw ValidationError("language " + std::string(language) + ": " +
                          std::to_string(eligible.size()) + " < " + std::to_string(n));
  }
  std::mt19937_64 rng(splitmix64(seed) ^ fnv1a64(language));
  for (std::size_t i = eligible.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded_draw(rng, i));
    std::swap(eligible[i - 1], eligible[j]);
  }
  eligible.resize(n);
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

}  // namespace detail

}  // namespace polyboost
