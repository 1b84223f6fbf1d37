#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyboost/gateway.hpp"

namespace polyboost {

/// One cultural-knowledge question with its ground-truth entity set.
struct BlendQuestion {
  std::string id;
  std::string language;  // registry code
  std::string question;  // in its own language, asked untranslated
  std::vector<std::string> answer_set;  // non-empty entity strings, file order
};

void validate_blend_question(const BlendQuestion& question);

/// Loads a JSON-lines question file: {"id","language","question","answers":[...]}.
std::vector<BlendQuestion> load_blend_questions(const std::filesystem::path& path);

/// Per-question result under both prompt styles; model answers kept for audit.
struct BlendOutcome {
  std::string id;
  std::string language;
  bool direct_correct = false;
  bool persona_correct = false;
  std::string direct_answer;
  std::string persona_answer;
  bool excluded = false;  // entity judging failed even after the re-ask
  std::string exclusion_reason;
};

/// The question as a bare user message, verbatim and untranslated.
std::vector<ChatMessage> render_direct_prompt(const BlendQuestion& question);

/// Same user message, preceded by a system role assigning a native of the
/// question language's culture (language name and registry region fill the
/// fixed template).
std::vector<ChatMessage> render_persona_prompt(const BlendQuestion& question);

/// The entity-matching judge request: a fixed system instruction demanding a
/// first-line Yes/No, and a user message carrying the statement and the
/// candidate entity collection (serialized as a JSON array).
std::vector<ChatMessage> render_entity_prompt(const std::string& model_answer,
                                              const std::vector<std::string>& answer_set);

/// Interprets the first line of an entity-judge reply. Tolerates surrounding
/// whitespace, quotes, and trailing punctuation; anything else is unusable.
std::optional<bool> parse_entity_reply(const std::string& reply);

/// Asks the judge whether the model answer names any ground-truth entity.
/// Only the first reply line counts. An unusable reply is re-asked once;
/// a second unusable reply raises EntityJudgeError.
bool detect_entity(const std::string& model_answer, const std::vector<std::string>& answer_set,
                   const BackendConfig& judge_config, Gateway& gateway, ResponseCache& cache);

struct BlendLanguageScore {
  std::size_t scored_questions = 0;
  std::size_t correct_instances = 0;  // out of 2 * scored_questions
  std::size_t excluded_questions = 0;
  double accuracy = 0.0;  // 0..100
};

struct BlendScores {
  std::map<std::string, BlendLanguageScore> per_language;
  double overall_accuracy = 0.0;
  std::size_t total_scored = 0;
  std::size_t total_excluded = 0;
  std::vector<BlendOutcome> outcomes;  // one per input question, input order
  std::string completed_at;
};

/// Scores cultural-knowledge accuracy: every question is answered under the
/// direct and the persona prompt, each answer is entity-checked by the judge,
/// and accuracy pools correct prompt-instances over 2 * scored questions
/// (questions whose entity check fails are excluded and reported). Throws
/// EntityJudgeError when every question was excluded.
BlendScores blend_accuracy(const std::vector<BlendQuestion>& questions,
                           const BackendConfig& model_config, const BackendConfig& judge_config,
                           Gateway& gateway, ResponseCache& cache);

}  // namespace polyboost
