#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "polyboost/errors.hpp"
#include "polyboost/languages.hpp"

namespace polyboost {

// Section markers used to concatenate a record into a single string.
// They must never occur inside record fields; validation enforces this so
// that rendering stays exactly invertible.
inline constexpr std::string_view kInstructionMarker = "<|instruction|>";
inline constexpr std::string_view kInputMarker = "<|input|>";
inline constexpr std::string_view kResponseMarker = "<|response|>";

/// One instruction/input/response record in a given language.
/// `input` may be empty; it is always the empty string, never absent.
struct InstructionPair {
  std::string id;
  std::string language;  // registry code, e.g. "KO"
  std::string instruction;
  std::string input;
  std::string response;

  friend bool operator==(const InstructionPair&, const InstructionPair&) = default;
};

enum class CriterionCategory { ContentBoosting, TranslationBoosting, Localization };

std::string_view to_string(CriterionCategory category);

/// A typed revision-criteria tag, e.g. Localization / "Expression localization".
struct CriterionTag {
  CriterionCategory category;
  std::string name;

  friend auto operator<=>(const CriterionTag&, const CriterionTag&) = default;
};

/// Criterion names belonging to one category, exactly as the taxonomy lists them.
std::span<const std::string_view> criteria_for(CriterionCategory category);

/// Parses "Category/Name" tag syntax; throws ValidationError when the category
/// is unknown or the name does not belong to it.
CriterionTag parse_criterion_tag(std::string_view text);

/// Formats a tag back to its "Category/Name" string form.
std::string format_criterion_tag(const CriterionTag& tag);

/// An original pair with its expert-boosted counterpart.
/// `distance` stays unset until the revision filter computes it.
struct RevisionExample {
  InstructionPair original;
  InstructionPair boosted;
  std::vector<CriterionTag> tags;  // sorted, unique
  std::optional<std::size_t> distance;

  friend bool operator==(const RevisionExample&, const RevisionExample&) = default;
};

/// Builds a RevisionExample, enforcing that both sides share id and language.
RevisionExample make_revision_example(InstructionPair original, InstructionPair boosted,
                                      std::vector<CriterionTag> tags = {});

inline const std::string& record_id(const InstructionPair& pair) { return pair.id; }
inline const std::string& record_id(const RevisionExample& example) { return example.original.id; }
inline const std::string& record_language(const InstructionPair& pair) { return pair.language; }
inline const std::string& record_language(const RevisionExample& example) {
  return example.original.language;
}

enum class ViolationRule { NonEmpty, MarkerCollision, UnknownLanguage };

std::string_view to_string(ViolationRule rule);

/// One invariant violation: which field broke which rule.
struct Violation {
  std::string field;
  ViolationRule rule;

  std::string describe() const;
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Checks all InstructionPair invariants. Empty result iff the pair is valid.
std::vector<Violation> validate_pair(const InstructionPair& pair);

/// An ordered record collection with a per-language index.
/// Record order is file order and is the tie-breaker everywhere downstream.
template <typename Record>
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<Record> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      by_language_[record_language(records_[i])].push_back(i);
    }
  }

  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  /// Language codes present, in registry order.
  std::vector<std::string> languages() const {
    std::vector<std::string> codes;
    codes.reserve(by_language_.size());
    for (const auto& [code, indices] : by_language_) codes.push_back(code);
    std::sort(codes.begin(), codes.end(), [](const std::string& a, const std::string& b) {
      return registry_rank(a) < registry_rank(b);
    });
    return codes;
  }

  /// Indices (into records()) of one language's records, in file order.
  std::span<const std::size_t> indices_for(std::string_view code) const {
    auto it = by_language_.find(code);
    if (it == by_language_.end()) return {};
    return it->second;
  }

  /// New dataset keeping only `indices`, in the relative order given.
  Dataset subset(const std::vector<std::size_t>& indices) const {
    std::vector<Record> kept;
    kept.reserve(indices.size());
    for (std::size_t i : indices) kept.push_back(records_[i]);
    return Dataset(std::move(kept));
  }

 private:
  std::vector<Record> records_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_language_;
};

/// Loads a JSON-lines pair corpus ({"id","language","instruction","input","output"}).
/// Every record is validated; errors name the offending line and field.
Dataset<InstructionPair> load_pairs(const std::filesystem::path& path);

/// Loads a JSON-lines revision corpus
/// ({"id","language","original":{...},"boosted":{...},"tags":[...]}).
/// An optional "distance" field per record is preserved when present.
Dataset<RevisionExample> load_revisions(const std::filesystem::path& path);

/// Writes a pair corpus back in the on-disk format. Deterministic bytes.
void save_pairs(const Dataset<InstructionPair>& dataset, const std::filesystem::path& path);

/// Writes a revision corpus; records with a computed distance carry it.
void save_revisions(const Dataset<RevisionExample>& dataset, const std::filesystem::path& path);

namespace detail {

/// Shuffles `eligible` with an RNG derived from (seed, language) and keeps the
/// first `n` entries, returned in ascending order. The shuffle is hand-rolled
/// (Fisher-Yates over mt19937_64 with rejection-sampled bounds) so results are
/// identical across standard libraries. Throws ValidationError naming the
/// language when fewer than `n` records are eligible.
std::vector<std::size_t> seeded_sample(std::vector<std::size_t> eligible, std::size_t n,
                                       std::uint64_t seed, std::string_view language);

}  // namespace detail

/// Draws exactly `n_per_language` records per language with a seeded,
/// platform-independent shuffle. Records whose id is in `exclude` are not
/// eligible. Selection within a language depends only on that language's
/// records, so editing one language never reshuffles another. The returned
/// dataset preserves file order.
template <typename Record>
Dataset<Record> sample_subset(const Dataset<Record>& dataset, std::size_t n_per_language,
                              std::uint64_t seed, const std::vector<std::string>& exclude = {}) {
  const std::unordered_set<std::string_view> excluded(exclude.begin(), exclude.end());
  std::vector<std::size_t> selected;
  for (const auto& code : dataset.languages()) {
    std::vector<std::size_t> eligible;
    for (std::size_t i : dataset.indices_for(code)) {
      if (!excluded.contains(record_id(dataset.records()[i]))) eligible.push_back(i);
    }
    auto picked = detail::seeded_sample(std::move(eligible), n_per_language, seed, code);
    selected.insert(selected.end(), picked.begin(), picked.end());
  }
  std::sort(selected.begin(), selected.end());
  return dataset.subset(selected);
}

}  // namespace polyboost
