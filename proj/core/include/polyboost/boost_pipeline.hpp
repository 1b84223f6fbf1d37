#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "polyboost/corpus.hpp"
#include "polyboost/gateway.hpp"
#include "polyboost/templating.hpp"

namespace polyboost {

enum class BoostStatus { Boosted, FallbackOriginal };

std::string_view to_string(BoostStatus status);

/// Outcome of boosting one record. FallbackOriginal keeps the input record
/// untouched so a failed boost never loses training-set coverage.
struct BoostResult {
  InstructionPair original;
  InstructionPair boosted;
  BoostStatus status = BoostStatus::FallbackOriginal;
  std::size_t attempts = 0;  // backend consultations for this record (1 or 2)
  std::vector<std::string> raw_failures;
  std::string completed_at;  // latest cache-entry creation time
};

/// Appended to the conversation when the booster's reply cannot be parsed.
/// Fixed wording: reruns must produce identical requests for cache hits.
extern const std::string kFormatReminder;

/// Boosts one record: sends prompt plus the rendered record, parses the reply
/// back into a record (same id and language), and revalidates it. On a parse
/// failure the booster is re-asked once with kFormatReminder appended; a
/// second failure falls back to the original. TransportError propagates.
BoostResult boost_pair(const InstructionPair& pair, const BoosterPrompt& prompt,
                       const BackendConfig& config, Gateway& gateway, ResponseCache& cache);

struct LanguageBoostCounts {
  std::size_t boosted = 0;
  std::size_t fallback = 0;
};

struct BoostStats {
  std::map<std::string, LanguageBoostCounts> per_language;
  std::size_t total_backend_calls = 0;  // logical requests, cache-served included
  std::vector<std::string> fallback_ids;
  std::string completed_at;
};

/// Boosts a whole dataset, record-parallel up to config.parallelism. Output
/// ids, languages, and order match the input exactly. Aborts on the first
/// TransportError, naming the failing record and the progress watermark;
/// a rerun resumes through the response cache.
std::pair<Dataset<InstructionPair>, BoostStats> boost_dataset(
    const Dataset<InstructionPair>& dataset, const BoosterPrompt& prompt,
    const BackendConfig& config, Gateway& gateway, ResponseCache& cache);

}  // namespace polyboost
