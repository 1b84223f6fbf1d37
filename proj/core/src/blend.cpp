#include "polyboost/blend.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "polyboost/corpus.hpp"
#include "polyboost/parallel.hpp"
#include "polyboost/text.hpp"

namespace polyboost {

namespace {

constexpr std::string_view kEntitySystemText =
    "Check whether an entity in the specified set is matched in a given statement. Return "
    "\"Yes\" or \"No\" only in the first line of the answer.";

std::string persona_system_text(const LanguageInfo& info) {
  std::string text = "You are a local person who has lived in the ";
  text += info.name;
  text += "-speaking region of ";
  text += info.region;
  text += " all your life. Answer as a native.";
  return text;
}

std::string first_line(const std::string& text) {
  const auto newline = text.find('\n');
  std::string line = newline == std::string::npos ? text : text.substr(0, newline);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool ascii_iequal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace

void validate_blend_question(const BlendQuestion& question) {
  if (blank(question.id)) throw ValidationError("blend question: id must be non-empty");
  if (!known_language(question.language)) {
    throw ValidationError("blend question " + question.id + ": unknown language code " +
                          question.language);
  }
  if (blank(question.question)) {
    throw ValidationError("blend question " + question.id + ": question text must be non-empty");
  }
  if (question.answer_set.empty()) {
    throw ValidationError("blend question " + question.id + ": answer set must be non-empty");
  }
  for (const auto& entity : question.answer_set) {
    if (blank(entity)) {
      throw ValidationError("blend question " + question.id + ": entities must be non-empty");
    }
  }
}

std::vector<BlendQuestion> load_blend_questions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<BlendQuestion> questions;
  std::unordered_set<std::string> seen_ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (blank(text)) continue;
    const auto fail = [&](const std::string& detail) -> void {
      throw ValidationError("line " + std::to_string(line) + ": " + detail);
    };
    auto value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded() || !value.is_object()) fail("invalid JSON");
    BlendQuestion question;
    for (const auto& [key, target] :
         std::initializer_list<std::pair<const char*, std::string*>>{
             {"id", &question.id}, {"language", &question.language},
             {"question", &question.question}}) {
      if (!value.contains(key) || !value.at(key).is_string()) {
        fail(std::string("missing field ") + key);
      }
      *target = value.at(key).get<std::string>();
    }
    if (!value.contains("answers") || !value.at("answers").is_array()) {
      fail("missing field answers");
    }
    for (const auto& entity : value.at("answers")) {
      if (!entity.is_string()) fail("field answers must contain strings");
      question.answer_set.push_back(entity.get<std::string>());
    }
    try {
      validate_blend_question(question);
    } catch (const ValidationError& error) {
      fail(error.what());
    }
    if (!seen_ids.insert(question.id).second) {
      fail("duplicate question id \"" + question.id + "\"");
    }
    questions.push_back(std::move(question));
  }
  return questions;
}

std::vector<ChatMessage> render_direct_prompt(const BlendQuestion& question) {
  validate_blend_question(question);
  return {user_message(question.question)};
}

std::vector<ChatMessage> render_persona_prompt(const BlendQuestion& question) {
  validate_blend_question(question);
  const auto info = find_language(question.language);
  return {system_message(persona_system_text(*info)), user_message(question.question)};
}

std::vector<ChatMessage> render_entity_prompt(const std::string& model_answer,
                                              const std::vector<std::string>& answer_set) {
  const nlohmann::json entities(answer_set);
  std::string user_text;
  user_text += "[Given statement]\n";
  user_text += model_answer;
  user_text += "\n\n[Given collection]\n";
  user_text += entities.dump();
  return {system_message(std::string(kEntitySystemText)), user_message(std::move(user_text))};
}

std::optional<bool> parse_entity_reply(const std::string& reply) {
  std::string_view line = trim_whitespace(first_line(reply));
  const auto strip = [&](char c) {
    while (!line.empty() && line.front() == c) line.remove_prefix(1);
    while (!line.empty() && line.back() == c) line.remove_suffix(1);
  };
  for (char c : {'"', '\'', '.', '!'}) strip(c);
  if (ascii_iequal(line, "yes")) return true;
  if (ascii_iequal(line, "no")) return false;
  return std::nullopt;
}

bool detect_entity(const std::string& model_answer, const std::vector<std::string>& answer_set,
                   const BackendConfig& judge_config, Gateway& gateway, ResponseCache& cache) {
  if (answer_set.empty()) throw ValidationError("entity detection needs a non-empty answer set");

  const std::vector<ChatMessage> request = render_entity_prompt(model_answer, answer_set);
  CachedCompletion completion = gateway.cached_complete(judge_config, request, cache);
  if (auto matched = parse_entity_reply(completion.text)) return *matched;

  std::vector<ChatMessage> retry = request;
  retry.push_back(assistant_message(completion.text));
  retry.push_back(user_message(std::string(kEntitySystemText)));
  completion = gateway.cached_complete(judge_config, retry, cache);
  if (auto matched = parse_entity_reply(completion.text)) return *matched;

  throw EntityJudgeError("entity judge did not answer Yes or No; first line was \"" +
                         first_line(completion.text) + "\"");
}

BlendScores blend_accuracy(const std::vector<BlendQuestion>& questions,
                           const BackendConfig& model_config, const BackendConfig& judge_config,
                           Gateway& gateway, ResponseCache& cache) {
  if (questions.empty()) throw ValidationError("blend scoring needs a non-empty question set");
  for (const auto& question : questions) validate_blend_question(question);

  struct ItemResult {
    BlendOutcome outcome;
    std::string completed_at;
  };

  std::size_t completed = 0;
  std::size_t failed_index = questions.size();
  std::vector<ItemResult> results;
  try {
    results = parallel_map<ItemResult>(
        questions.size(), model_config.parallelism,
        [&](std::size_t i) {
          const BlendQuestion& question = questions[i];
          ItemResult item;
          item.outcome.id = question.id;
          item.outcome.language = question.language;

          const auto direct =
              gateway.cached_complete(model_config, render_direct_prompt(question), cache);
          const auto persona =
              gateway.cached_complete(model_config, render_persona_prompt(question), cache);
          item.outcome.direct_answer = direct.text;
          item.outcome.persona_answer = persona.text;
          item.completed_at = std::max(direct.created_at, persona.created_at);

          try {
            item.outcome.direct_correct =
                detect_entity(direct.text, question.answer_set, judge_config, gateway, cache);
            item.outcome.persona_correct =
                detect_entity(persona.text, question.answer_set, judge_config, gateway, cache);
          } catch (const EntityJudgeError& error) {
            item.outcome.excluded = true;
            item.outcome.exclusion_reason = error.what();
            item.outcome.direct_correct = false;
            item.outcome.persona_correct = false;
          }
          return item;
        },
        &completed, &failed_index);
  } catch (const TransportError& error) {
    const std::string id = failed_index < questions.size() ? questions[failed_index].id : "?";
    throw TransportError("blend scoring aborted at question \"" + id + "\" (" +
                         std::to_string(completed) + " of " + std::to_string(questions.size()) +
                         " questions completed): " + error.what());
  }

  BlendScores scores;
  for (auto& item : results) {
    scores.outcomes.push_back(item.outcome);
    scores.completed_at = std::max(scores.completed_at, item.completed_at);
    auto& language = scores.per_language[item.outcome.language];
    if (item.outcome.excluded) {
      ++language.excluded_questions;
      ++scores.total_excluded;
      continue;
    }
    ++language.scored_questions;
    ++scores.total_scored;
    language.correct_instances += (item.outcome.direct_correct ? 1 : 0);
    language.correct_instances += (item.outcome.persona_correct ? 1 : 0);
  }
  if (scores.total_scored == 0) {
    throw EntityJudgeError("every question was excluded from scoring");
  }

  std::size_t total_correct = 0;
  for (auto& [code, language] : scores.per_language) {
    if (language.scored_questions > 0) {
      language.accuracy = 100.0 * static_cast<double>(language.correct_instances) /
                          (2.0 * static_cast<double>(language.scored_questions));
    }
    total_correct += language.correct_instances;
  }
  scores.overall_accuracy =
      100.0 * static_cast<double>(total_correct) / (2.0 * static_cast<double>(scores.total_scored));
  return scores;
}

}  // namespace polyboost
