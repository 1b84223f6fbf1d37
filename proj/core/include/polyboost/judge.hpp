#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "polyboost/gateway.hpp"

namespace polyboost {

enum class VerdictValue { A, B, Tie, Invalid };

std::string_view to_string(VerdictValue value);

/// One judge reply, as parsed. Invalid means no verdict marker was found.
struct SingleVerdict {
  VerdictValue value = VerdictValue::Invalid;
  std::string raw_excerpt;
};

/// A per-run outcome already expressed relative to candidate X.
enum class RunOutcome { XWins, YWins, Tie };

enum class FinalVerdict { Win, Lose, Tie };

std::string_view to_string(FinalVerdict verdict);

/// Both orderings of one comparison, with the aggregated final verdict for
/// candidate X. `second_order` is the raw verdict of the swapped run (an A
/// there means X lost that run).
struct PairVerdict {
  SingleVerdict first_order;   // candidate X in position A
  SingleVerdict second_order;  // candidate X in position B
  FinalVerdict final_verdict = FinalVerdict::Tie;
  std::size_t invalid_singles = 0;  // runs that stayed unparseable after the re-ask
  std::string completed_at;         // latest cache-entry creation time among the runs
};

struct VerdictCounts {
  std::size_t win = 0;
  std::size_t lose = 0;
  std::size_t tie = 0;
  std::size_t invalid_singles = 0;  // diagnostic only, not part of n

  std::size_t n() const { return win + lose + tie; }
};

struct Metrics {
  double win_ratio = 0;
  double lose_ratio = 0;
  double tie_ratio = 0;
  double win_rate = 0;       // (win + tie) / n
  double winning_score = 0;  // (win - lose) / n + 1; above 1 means X wins overall
};

/// Builds the two-message pairwise judging prompt. The system text and the
/// user template are fixed; question and answers are substituted byte-exact.
std::vector<ChatMessage> render_judge_prompt(const std::string& question,
                                             const std::string& answer_a,
                                             const std::string& answer_b);

/// Scans for the last occurrence of [[1]], [[2]] or [[0]]; judges often
/// restate the format before concluding, so the final statement governs.
SingleVerdict parse_verdict(const std::string& text);

/// Maps a raw positional verdict to an X-centric run outcome. Invalid
/// verdicts must be resolved (re-ask, then Tie) before this call.
RunOutcome correct_order(VerdictValue value, bool x_in_position_a);

/// The aggregation table over the two order-corrected run outcomes:
/// X wins overall only by winning twice or winning once and tying once;
/// one win and one loss is a tie.
FinalVerdict aggregate_verdicts(RunOutcome first_order, RunOutcome second_order);

/// Runs the position-debiased comparison: one judge call per ordering, the
/// swapped run order-corrected, outcomes aggregated. A run whose verdict is
/// unparseable is re-asked once (with the verdict-format reminder appended)
/// and counts as Tie if still unparseable.
PairVerdict debiased_compare(const std::string& question, const std::string& response_x,
                             const std::string& response_y, const BackendConfig& judge_config,
                             Gateway& gateway, ResponseCache& cache);

/// Appended to the judge conversation when a reply carries no verdict marker.
extern const std::string kVerdictReminder;

struct JudgeItem {
  std::string id;
  std::string language;
  std::string question;
  std::string response_x;
  std::string response_y;
};

inline const std::string& record_id(const JudgeItem& item) { return item.id; }
inline const std::string& record_language(const JudgeItem& item) { return item.language; }

struct PairwiseEvaluation {
  std::map<std::string, VerdictCounts> by_language;
  std::vector<PairVerdict> verdicts;  // one per item, input order
  std::string completed_at;           // latest run timestamp across all items
};

/// Judges every item (two calls each, bounded by judge_config.parallelism)
/// and groups verdict counts by language. Languages with no items do not
/// appear. A TransportError aborts the evaluation with a progress watermark.
PairwiseEvaluation evaluate_pairwise(const std::vector<JudgeItem>& items,
                                     const BackendConfig& judge_config, Gateway& gateway,
                                     ResponseCache& cache);

/// The three reported metrics. Throws ValidationError when counts are empty.
Metrics compute_metrics(const VerdictCounts& counts);

}  // namespace polyboost
