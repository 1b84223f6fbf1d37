#pragma once

// Small factories for corpus records and multilingual random text, shared by
// the unit and acceptance suites.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyboost/corpus.hpp"
#include "polyboost/text.hpp"

namespace polyboost::testing {

inline InstructionPair make_pair_record(std::string id, std::string language,
                                        std::string instruction, std::string input,
                                        std::string response) {
  return InstructionPair{std::move(id), std::move(language), std::move(instruction),
                         std::move(input), std::move(response)};
}

inline RevisionExample make_revision(const InstructionPair& original, std::string boosted_response) {
  InstructionPair boosted = original;
  boosted.response = std::move(boosted_response);
  return make_revision_example(original, boosted);
}

/// Sample alphabets spanning the scripts the registry covers.
inline const std::vector<std::u32string>& script_alphabets() {
  static const std::vector<std::u32string> alphabets = {
      U"abcdefghij klmnopqrstuvwxyz",            // Latin
      U"абвгдежзийклмнопрстуфхцчшщ ъыьэюя",      // Cyrillic
      U"αβγδεζηθικλμνξοπρστυφχψω ς",             // Greek
      U"ابتثجحخدذرزسشصضطظعغفقكلمنهوي ",          // Arabic
      U"日本語の漢字とひらがなカタカナ、한국어 ",  // CJK + Hangul
      U"ฉันกินข้าวทุกวันแมวน้ำ ",               // Thai
  };
  return alphabets;
}

/// Random text in one script. Never contains marker strings (no '<' or '|').
inline std::string random_text(std::mt19937_64& rng, std::size_t max_scalars,
                               std::size_t alphabet = SIZE_MAX) {
  const auto& alphabets = script_alphabets();
  const auto& chosen =
      alphabets[alphabet == SIZE_MAX ? rng() % alphabets.size() : alphabet % alphabets.size()];
  const std::size_t length = rng() % (max_scalars + 1);
  std::vector<char32_t> scalars;
  scalars.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    scalars.push_back(chosen[rng() % chosen.size()]);
  }
  return encode_utf8(scalars);
}

/// Non-blank random text (instruction/response fields must not be blank).
inline std::string random_nonblank_text(std::mt19937_64& rng, std::size_t max_scalars,
                                        std::size_t alphabet = SIZE_MAX) {
  while (true) {
    std::string text = random_text(rng, max_scalars, alphabet);
    if (!blank(text)) return text;
  }
}

/// A random valid pair; scripts drawn across languages and writing systems.
inline InstructionPair random_pair(std::mt19937_64& rng, std::size_t index) {
  const auto registry = language_registry();
  const auto& language = registry[rng() % registry.size()];
  InstructionPair pair;
  pair.id = "r" + std::to_string(index);
  pair.language = std::string(language.code);
  pair.instruction = random_nonblank_text(rng, 24);
  pair.input = random_text(rng, 16);  // may be empty
  pair.response = random_nonblank_text(rng, 32);
  return pair;
}

inline std::string pairs_jsonl(const std::vector<InstructionPair>& pairs) {
  std::string out;
  for (const auto& pair : pairs) {
    out += nlohmann::ordered_json{{"id", pair.id},
                                  {"language", pair.language},
                                  {"instruction", pair.instruction},
                                  {"input", pair.input},
                                  {"output", pair.response}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace polyboost::testing
