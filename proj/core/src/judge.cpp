#include "polyboost/judge.hpp"

#include <algorithm>

#include "polyboost/parallel.hpp"
#include "polyboost/text.hpp"

namespace polyboost {

namespace {

// Pairwise judging prompt. The wording, including the verdict markers, is
// load-bearing: parse_verdict keys on the bracketed markers it mandates.
constexpr std::string_view kJudgeSystemText =
    "Please act as an impartial judge and evaluate the quality of the responses provided by two "
    "AI assistants to the user question displayed below. You should choose the assistant that "
    "follows the user’s instructions and answers the user’s question better. Your "
    "evaluation should consider factors such as the helpfulness, relevance, accuracy, depth, "
    "creativity, and level of detail of their responses. Begin your evaluation by comparing the "
    "two responses and provide a short explanation. Avoid any position biases and ensure that "
    "the order in which the responses were presented does not influence your decision. Do not "
    "allow the length of the responses to influence your evaluation. Do not favor certain names "
    "of the assistants. Be as objective as possible. After providing your explanation, output "
    "your final verdict by strictly following this format: \"[[1]]\" if assistant A is better, "
    "\"[[2]]\" if assistant B is better, and \"[[0]]\" for a tie.";

std::string excerpt_of(const std::string& text) {
  // Keep the tail: the verdict, when present, lives there.
  constexpr std::size_t kMax = 160;
  if (text.size() <= kMax) return text;
  return "..." + std::string(utf8_clip_suffix(text, kMax));
}

/// One judging run: ask, parse, re-ask once on an unparseable reply.
/// Returns the verdict actually used plus whether it stayed invalid.
struct RunResult {
  SingleVerdict verdict;
  bool invalid = false;
  std::string created_at;
};

RunResult run_single_judgement(const std::vector<ChatMessage>& messages,
                               const BackendConfig& judge_config, Gateway& gateway,
                               ResponseCache& cache) {
  RunResult result;
  CachedCompletion completion = gateway.cached_complete(judge_config, messages, cache);
  result.created_at = completion.created_at;
  result.verdict = parse_verdict(completion.text);
  if (result.verdict.value != VerdictValue::Invalid) return result;

  std::vector<ChatMessage> retry = messages;
  retry.push_back(assistant_message(completion.text));
  retry.push_back(user_message(kVerdictReminder));
  completion = gateway.cached_complete(judge_config, retry, cache);
  if (completion.created_at > result.created_at) result.created_at = completion.created_at;
  result.verdict = parse_verdict(completion.text);
  if (result.verdict.value == VerdictValue::Invalid) result.invalid = true;
  return result;
}

}  // namespace

const std::string kVerdictReminder =
    "Reply with your final verdict marker only: \"[[1]]\", \"[[2]]\", or \"[[0]]\".";

std::string_view to_string(VerdictValue value) {
  switch (value) {
    case VerdictValue::A:
      return "A";
    case VerdictValue::B:
      return "B";
    case VerdictValue::Tie:
      return "Tie";
    case VerdictValue::Invalid:
      return "Invalid";
  }
  return "Unknown";
}

std::string_view to_string(FinalVerdict verdict) {
  switch (verdict) {
    case FinalVerdict::Win:
      return "Win";
    case FinalVerdict::Lose:
      return "Lose";
    case FinalVerdict::Tie:
      return "Tie";
  }
  return "Unknown";
}

std::vector<ChatMessage> render_judge_prompt(const std::string& question,
                                             const std::string& answer_a,
                                             const std::string& answer_b) {
  if (blank(question) || blank(answer_a) || blank(answer_b)) {
    throw ValidationError("judge prompt requires non-empty question and answers");
  }
  std::string user_text;
  user_text.reserve(question.size() + answer_a.size() + answer_b.size() + 160);
  user_text += "[User Question]\n";
  user_text += question;
  user_text += "\n[The Start of Assistant A’s Answer]\n";
  user_text += answer_a;
  user_text += "\n[The End of Assistant A’s Answer]\n";
  user_text += "[The Start of Assistant B’s Answer]\n";
  user_text += answer_b;
  user_text += "\n[The End of Assistant B’s Answer]";
  return {system_message(std::string(kJudgeSystemText)), user_message(std::move(user_text))};
}

SingleVerdict parse_verdict(const std::string& text) {
  struct Marker {
    std::string_view token;
    VerdictValue value;
  };
  static constexpr Marker kMarkers[] = {
      {"[[1]]", VerdictValue::A},
      {"[[2]]", VerdictValue::B},
      {"[[0]]", VerdictValue::Tie},
  };
  VerdictValue value = VerdictValue::Invalid;
  std::size_t best = std::string::npos;
  for (const auto& marker : kMarkers) {
    const auto at = text.rfind(marker.token);
    if (at != std::string::npos && (best == std::string::npos || at > best)) {
      best = at;
      value = marker.value;
    }
  }
  return SingleVerdict{value, excerpt_of(text)};
}

RunOutcome correct_order(VerdictValue value, bool x_in_position_a) {
  switch (value) {
    case VerdictValue::A:
      return x_in_position_a ? RunOutcome::XWins : RunOutcome::YWins;
    case VerdictValue::B:
      return x_in_position_a ? RunOutcome::YWins : RunOutcome::XWins;
    case VerdictValue::Tie:
      return RunOutcome::Tie;
    case VerdictValue::Invalid:
      throw ValidationError("invalid verdicts must be resolved before order correction");
  }
  throw ValidationError("unreachable verdict value");
}

FinalVerdict aggregate_verdicts(RunOutcome first_order, RunOutcome second_order) {
  const auto score = [](RunOutcome outcome) {
    switch (outcome) {
      case RunOutcome::XWins:
        return 1;
      case RunOutcome::YWins:
        return -1;
      case RunOutcome::Tie:
        return 0;
    }
    return 0;
  };
  const int total = score(first_order) + score(second_order);
  if (total > 0) return FinalVerdict::Win;
  if (total < 0) return FinalVerdict::Lose;
  return FinalVerdict::Tie;
}

PairVerdict debiased_compare(const std::string& question, const std::string& response_x,
                             const std::string& response_y, const BackendConfig& judge_config,
                             Gateway& gateway, ResponseCache& cache) {
  PairVerdict verdict;

  const RunResult first = run_single_judgement(render_judge_prompt(question, response_x, response_y),
                                               judge_config, gateway, cache);
  const RunResult second = run_single_judgement(
      render_judge_prompt(question, response_y, response_x), judge_config, gateway, cache);

  verdict.first_order = first.verdict;
  verdict.second_order = second.verdict;
  verdict.invalid_singles = (first.invalid ? 1 : 0) + (second.invalid ? 1 : 0);
  verdict.completed_at = std::max(first.created_at, second.created_at);

  const RunOutcome outcome1 =
      first.invalid ? RunOutcome::Tie : correct_order(first.verdict.value, true);
  const RunOutcome outcome2 =
      second.invalid ? RunOutcome::Tie : correct_order(second.verdict.value, false);
  verdict.final_verdict = aggregate_verdicts(outcome1, outcome2);
  return verdict;
}

PairwiseEvaluation evaluate_pairwise(const std::vector<JudgeItem>& items,
                                     const BackendConfig& judge_config, Gateway& gateway,
                                     ResponseCache& cache) {
  if (items.empty()) throw ValidationError("pairwise evaluation needs a non-empty test set");

  std::size_t completed = 0;
  std::size_t failed_index = items.size();
  std::vector<PairVerdict> verdicts;
  try {
    verdicts = parallel_map<PairVerdict>(
        items.size(), judge_config.parallelism,
        [&](std::size_t i) {
          return debiased_compare(items[i].question, items[i].response_x, items[i].response_y,
                                  judge_config, gateway, cache);
        },
        &completed, &failed_index);
  } catch (const TransportError& error) {
    const std::string id = failed_index < items.size() ? items[failed_index].id : "?";
    throw TransportError("judging aborted at item \"" + id + "\" (" + std::to_string(completed) +
                         " of " + std::to_string(items.size()) +
                         " items completed): " + error.what());
  }

  PairwiseEvaluation evaluation;
  evaluation.verdicts = std::move(verdicts);
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& counts = evaluation.by_language[items[i].language];
    const auto& verdict = evaluation.verdicts[i];
    switch (verdict.final_verdict) {
      case FinalVerdict::Win:
        ++counts.win;
        break;
      case FinalVerdict::Lose:
        ++counts.lose;
        break;
      case FinalVerdict::Tie:
        ++counts.tie;
        break;
    }
    counts.invalid_singles += verdict.invalid_singles;
    if (verdict.completed_at > evaluation.completed_at) {
      evaluation.completed_at = verdict.completed_at;
    }
  }
  return evaluation;
}

Metrics compute_metrics(const VerdictCounts& counts) {
  const std::size_t n = counts.n();
  if (n == 0) throw ValidationError("cannot compute metrics over zero verdicts");
  const auto total = static_cast<double>(n);
  Metrics metrics;
  metrics.win_ratio = static_cast<double>(counts.win) / total;
  metrics.lose_ratio = static_cast<double>(counts.lose) / total;
  metrics.tie_ratio = static_cast<double>(counts.tie) / total;
  metrics.win_rate = static_cast<double>(counts.win + counts.tie) / total;
  metrics.winning_score =
      (static_cast<double>(counts.win) - static_cast<double>(counts.lose)) / total + 1.0;
  return metrics;
}

}  // namespace polyboost
