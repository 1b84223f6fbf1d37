#include "polyboost/boost_pipeline.hpp"

#include <algorithm>

#include "polyboost/parallel.hpp"

namespace polyboost {

const std::string kFormatReminder =
    "Your previous reply could not be parsed. Return only the improved record as three sections "
    "introduced by <|instruction|>, <|input|>, and <|response|>, in that order, with no other "
    "text.";

std::string_view to_string(BoostStatus status) {
  switch (status) {
    case BoostStatus::Boosted:
      return "Boosted";
    case BoostStatus::FallbackOriginal:
      return "FallbackOriginal";
  }
  return "Unknown";
}

BoostResult boost_pair(const InstructionPair& pair, const BoosterPrompt& prompt,
                       const BackendConfig& config, Gateway& gateway, ResponseCache& cache) {
  validate_booster_prompt(prompt);

  BoostResult result;
  result.original = pair;

  const std::vector<ChatMessage> request = {
      user_message(compose_booster_request(prompt, render_pair(pair)))};

  CachedCompletion completion = gateway.cached_complete(config, request, cache);
  result.attempts = 1;
  result.completed_at = completion.created_at;
  try {
    result.boosted = parse_rendered(completion.text, pair.language, pair.id);
    result.status = BoostStatus::Boosted;
    return result;
  } catch (const ParseFailure& failure) {
    result.raw_failures.push_back(failure.reason());
  }

  std::vector<ChatMessage> retry = request;
  retry.push_back(assistant_message(completion.text));
  retry.push_back(user_message(kFormatReminder));
  completion = gateway.cached_complete(config, retry, cache);
  result.attempts = 2;
  result.completed_at = std::max(result.completed_at, completion.created_at);
  try {
    result.boosted = parse_rendered(completion.text, pair.language, pair.id);
    result.status = BoostStatus::Boosted;
    return result;
  } catch (const ParseFailure& failure) {
    result.raw_failures.push_back(failure.reason());
  }

  result.boosted = pair;
  result.status = BoostStatus::FallbackOriginal;
  return result;
}

std::pair<Dataset<InstructionPair>, BoostStats> boost_dataset(
    const Dataset<InstructionPair>& dataset, const BoosterPrompt& prompt,
    const BackendConfig& config, Gateway& gateway, ResponseCache& cache) {
  const auto& records = dataset.records();

  std::size_t completed = 0;
  std::size_t failed_index = records.size();
  std::vector<BoostResult> results;
  try {
    results = parallel_map<BoostResult>(
        records.size(), config.parallelism,
        [&](std::size_t i) { return boost_pair(records[i], prompt, config, gateway, cache); },
        &completed, &failed_index);
  } catch (const TransportError& error) {
    const std::string id = failed_index < records.size() ? records[failed_index].id : "?";
    throw TransportError("boost aborted at record \"" + id + "\" (" + std::to_string(completed) +
                         " of " + std::to_string(records.size()) +
                         " records completed): " + error.what());
  }

  BoostStats stats;
  std::vector<InstructionPair> boosted;
  boosted.reserve(results.size());
  for (const auto& result : results) {
    auto& counts = stats.per_language[result.original.language];
    if (result.status == BoostStatus::Boosted) {
      ++counts.boosted;
    } else {
      ++counts.fallback;
      stats.fallback_ids.push_back(result.original.id);
    }
    stats.total_backend_calls += result.attempts;
    stats.completed_at = std::max(stats.completed_at, result.completed_at);
    boosted.push_back(result.boosted);
  }
  return {Dataset<InstructionPair>(std::move(boosted)), std::move(stats)};
}

}  // namespace polyboost
