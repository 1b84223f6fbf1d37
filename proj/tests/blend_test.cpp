#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "polyboost/blend.hpp"
#include "support/corpus_builders.hpp"
#include "support/mock_transport.hpp"
#include "support/tmpdir.hpp"

using namespace polyboost;
using namespace polyboost::testing;

namespace {

BackendConfig backend(const std::string& model_id) {
  BackendConfig config;
  config.endpoint = "http://mock.local/v1/chat/completions";
  config.model_id = model_id;
  config.max_retries = 0;
  return config;
}

BlendQuestion question(const std::string& id, const std::string& language, std::string text,
                       std::vector<std::string> answers) {
  return BlendQuestion{id, language, std::move(text), std::move(answers)};
}

/// Substring-matching entity judge: Yes iff any entity of the collection
/// occurs in the statement. Re-asked requests append extra messages, so the
/// statement-bearing message is located by its label rather than by position.
std::string entity_judge_reply(const nlohmann::json& body) {
  const std::string statement_label = "[Given statement]\n";
  const std::string collection_label = "\n\n[Given collection]\n";
  for (const auto& [role, content] : request_messages(body)) {
    const auto label_at = content.find(statement_label);
    if (label_at == std::string::npos) continue;
    const auto statement_at = label_at + statement_label.size();
    const auto collection_at = content.find(collection_label);
    const std::string statement = content.substr(statement_at, collection_at - statement_at);
    const auto entities =
        nlohmann::json::parse(content.substr(collection_at + collection_label.size()));
    for (const auto& entity : entities) {
      if (statement.find(entity.get<std::string>()) != std::string::npos) {
        return "Yes\nMatched an entity.";
      }
    }
    return "No\nNothing matched.";
  }
  return "No\nNothing to check.";
}

/// Routes requests by prompt shape: entity judging, persona model, or direct
/// model. Model answers come from the mark tables: a correct instance names
/// the entity, an incorrect one does not.
ScriptedTransport::Handler scripted_blend_handler(std::map<std::string, bool> direct_marks,
                                                  std::map<std::string, bool> persona_marks) {
  return [direct_marks = std::move(direct_marks),
          persona_marks = std::move(persona_marks)](const nlohmann::json& body) -> std::string {
    const auto messages = request_messages(body);
    if (messages.front().first == "system" &&
        messages.front().second.rfind("Check whether an entity", 0) == 0) {
      return entity_judge_reply(body);
    }
    const bool persona = messages.front().first == "system";
    const std::string& question_text = messages.back().second;
    const auto& marks = persona ? persona_marks : direct_marks;
    for (const auto& [id, correct] : marks) {
      if (question_text.find(id) != std::string::npos) {
        return correct ? "I believe the answer is entity-" + id + "."
                       : "I am not sure about this one.";
      }
    }
    return "I am not sure about this one.";
  };
}

}  // namespace

TEST_SUITE("blend") {

TEST_CASE("the direct prompt is the bare question, untranslated") {
  const auto q = question("q1", "KO", "김치는 무엇으로 만드나요?", {"배추"});
  const auto messages = render_direct_prompt(q);
  REQUIRE(messages.size() == 1);
  CHECK(messages[0].role == ChatRole::User);
  CHECK(messages[0].content == "김치는 무엇으로 만드나요?");
}

TEST_CASE("the persona prompt adds a native-role system message") {
  const auto q = question("q1", "KO", "김치는 무엇으로 만드나요?", {"배추"});
  const auto messages = render_persona_prompt(q);
  REQUIRE(messages.size() == 2);
  CHECK(messages[0].role == ChatRole::System);
  CHECK(messages[0].content.find("Korean") != std::string::npos);
  CHECK(messages[0].content.find("East Asia") != std::string::npos);
  CHECK(messages[0].content.find("Answer as a native.") != std::string::npos);
  CHECK(messages[1].content == render_direct_prompt(q)[0].content);

  const auto other = question("q2", "KO", "서울의 명물은?", {"남산"});
  CHECK(render_persona_prompt(other)[0].content == messages[0].content);

  const auto greek = question("q3", "EL", "ποια είναι η πιο διάσημη πίτα;", {"σπανακόπιτα"});
  CHECK(render_persona_prompt(greek)[0].content.find("Greek") != std::string::npos);
  CHECK(render_persona_prompt(greek)[0].content.find("Southern Europe") != std::string::npos);
}

TEST_CASE("the entity prompt carries the statement and collection slots") {
  const auto messages = render_entity_prompt("Greeks often learn English.", {"English", "French"});
  REQUIRE(messages.size() == 2);
  CHECK(messages[0].role == ChatRole::System);
  CHECK(messages[0].content ==
        "Check whether an entity in the specified set is matched in a given statement. Return "
        "\"Yes\" or \"No\" only in the first line of the answer.");
  CHECK(messages[1].content ==
        "[Given statement]\nGreeks often learn English.\n\n[Given collection]\n"
        "[\"English\",\"French\"]");
}

TEST_CASE("parse_entity_reply reads only the first line") {
  CHECK(parse_entity_reply("Yes") == true);
  CHECK(parse_entity_reply("No\nThe statement mentions something else entirely.") == false);
  CHECK(parse_entity_reply("yes.") == true);
  CHECK(parse_entity_reply(" \"No\" ") == false);
  CHECK(parse_entity_reply("Maybe") == std::nullopt);
  CHECK(parse_entity_reply("The first line talks, Yes comes later\nYes") == std::nullopt);
  CHECK(parse_entity_reply("") == std::nullopt);
}

TEST_CASE("first-line parsing is immune to arbitrary suffixes") {
  std::mt19937_64 rng(103);
  for (int i = 0; i < 100; ++i) {
    const std::string suffix = random_text(rng, 40);
    CHECK(parse_entity_reply("Yes\n" + suffix) == true);
    CHECK(parse_entity_reply("No\n" + suffix) == false);
  }
}

TEST_CASE("detect_entity follows the judge's first line") {
  MockGateway yes(ScriptedTransport::Handler([](const nlohmann::json&) { return "Yes"; }));
  ResponseCache cache_yes;
  CHECK(detect_entity("answer", {"entity"}, backend("judge"), yes.gateway, cache_yes) == true);

  MockGateway no(ScriptedTransport::Handler(
      [](const nlohmann::json&) { return "No\nThe statement mentions nothing."; }));
  ResponseCache cache_no;
  CHECK(detect_entity("answer", {"entity"}, backend("judge"), no.gateway, cache_no) == false);
}

TEST_CASE("detect_entity re-asks once, then gives up") {
  int calls = 0;
  MockGateway flaky(ScriptedTransport::Handler([&](const nlohmann::json&) -> std::string {
    return ++calls == 1 ? "Maybe" : "Yes";
  }));
  ResponseCache cache;
  CHECK(detect_entity("answer", {"entity"}, backend("judge"), flaky.gateway, cache) == true);
  CHECK(flaky.transport->calls() == 2);

  MockGateway hopeless(ScriptedTransport::Handler([](const nlohmann::json&) { return "Maybe"; }));
  ResponseCache cache2;
  CHECK_THROWS_AS(detect_entity("answer", {"entity"}, backend("judge"), hopeless.gateway, cache2),
                  EntityJudgeError);
  CHECK(hopeless.transport->calls() == 2);
}

TEST_CASE("pooled accuracy: the 62.5 example") {
  // 4 questions: both prompts correct on 2, one prompt on 1, neither on 1
  // -> 100 * 5/8 = 62.5.
  const std::vector<BlendQuestion> questions = {
      question("qa", "KO", "question qa", {"entity-qa"}),
      question("qb", "KO", "question qb", {"entity-qb"}),
      question("qc", "KO", "question qc", {"entity-qc"}),
      question("qd", "KO", "question qd", {"entity-qd"}),
  };
  MockGateway mock(scripted_blend_handler(
      {{"qa", true}, {"qb", true}, {"qc", true}, {"qd", false}},
      {{"qa", true}, {"qb", true}, {"qc", false}, {"qd", false}}));
  ResponseCache cache;
  const auto scores =
      blend_accuracy(questions, backend("model"), backend("judge"), mock.gateway, cache);
  CHECK(scores.overall_accuracy == 62.5);
  CHECK(scores.per_language.at("KO").accuracy == 62.5);
  CHECK(scores.per_language.at("KO").scored_questions == 4);
  CHECK(scores.per_language.at("KO").correct_instances == 5);
}

TEST_CASE("all correct scores 100") {
  const std::vector<BlendQuestion> questions = {
      question("qa", "AR", "question qa", {"entity-qa"}),
      question("qb", "AR", "question qb", {"entity-qb"}),
  };
  MockGateway mock(scripted_blend_handler({{"qa", true}, {"qb", true}},
                                          {{"qa", true}, {"qb", true}}));
  ResponseCache cache;
  const auto scores =
      blend_accuracy(questions, backend("model"), backend("judge"), mock.gateway, cache);
  CHECK(scores.overall_accuracy == 100.0);
}

TEST_CASE("a scripted 10-question transcript scores the hand-computed 60.0") {
  // Hand-marked key (direct, persona):
  //   KO: q0 (1,1) q1 (1,1) q2 (1,0) q3 (0,1) q4 (0,0) -> 6 of 10
  //   AR: q5 (1,1) q6 (0,1) q7 (1,0) q8 (0,0) q9 (1,1) -> 6 of 10
  // Pooled: 12 correct instances over 20 -> 60.0 overall, 60.0 per language.
  std::vector<BlendQuestion> questions;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "q" + std::to_string(i);
    questions.push_back(
        question(id, i < 5 ? "KO" : "AR", "question " + id + " text", {"entity-" + id}));
  }
  const std::map<std::string, bool> direct = {
      {"q0", true}, {"q1", true}, {"q2", true},  {"q3", false}, {"q4", false},
      {"q5", true}, {"q6", false}, {"q7", true}, {"q8", false}, {"q9", true},
  };
  const std::map<std::string, bool> persona = {
      {"q0", true}, {"q1", true}, {"q2", false}, {"q3", true},  {"q4", false},
      {"q5", true}, {"q6", true}, {"q7", false}, {"q8", false}, {"q9", true},
  };
  MockGateway mock(scripted_blend_handler(direct, persona));
  ResponseCache cache;
  const auto scores =
      blend_accuracy(questions, backend("model"), backend("judge"), mock.gateway, cache);
  CHECK(scores.overall_accuracy == 60.0);
  CHECK(scores.per_language.at("KO").accuracy == 60.0);
  CHECK(scores.per_language.at("AR").accuracy == 60.0);
  CHECK(scores.total_scored == 10);
  CHECK(scores.total_excluded == 0);

  // Audit trail: outcomes keep the model answers and the marks.
  REQUIRE(scores.outcomes.size() == 10);
  CHECK(scores.outcomes[2].direct_correct);
  CHECK_FALSE(scores.outcomes[2].persona_correct);
  CHECK(scores.outcomes[2].direct_answer.find("entity-q2") != std::string::npos);
}

TEST_CASE("flipping one instance moves the score by exactly 100/(2N)") {
  std::vector<BlendQuestion> questions;
  for (int i = 0; i < 8; ++i) {
    const std::string id = "q" + std::to_string(i);
    questions.push_back(question(id, "ES", "question " + id, {"entity-" + id}));
  }
  std::map<std::string, bool> direct, persona;
  for (int i = 0; i < 8; ++i) {
    direct["q" + std::to_string(i)] = (i % 2 == 0);
    persona["q" + std::to_string(i)] = (i % 3 == 0);
  }
  auto flipped = direct;
  flipped["q1"] = true;  // incorrect -> correct

  ResponseCache cache_a, cache_b;
  MockGateway base(scripted_blend_handler(direct, persona));
  MockGateway more(scripted_blend_handler(flipped, persona));
  const auto before =
      blend_accuracy(questions, backend("model"), backend("judge"), base.gateway, cache_a);
  const auto after =
      blend_accuracy(questions, backend("model"), backend("judge"), more.gateway, cache_b);
  CHECK(after.overall_accuracy - before.overall_accuracy ==
        doctest::Approx(100.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("a warm cache rerun scores identically with zero network calls") {
  TempDir dir;
  std::vector<BlendQuestion> questions;
  std::map<std::string, bool> direct, persona;
  for (int i = 0; i < 6; ++i) {
    const std::string id = "q" + std::to_string(i);
    questions.push_back(question(id, "ES", "question " + id, {"entity-" + id}));
    direct[id] = (i % 2 == 0);
    persona[id] = (i % 3 == 0);
  }
  double first_accuracy = 0;
  {
    MockGateway mock(scripted_blend_handler(direct, persona));
    ResponseCache cache(dir.file("cache.jsonl"));
    first_accuracy = blend_accuracy(questions, backend("model"), backend("judge"), mock.gateway,
                                    cache).overall_accuracy;
    // 12 model answers; entity checks dedupe through the cache whenever the
    // two prompt styles produced the same answer text.
    CHECK(mock.transport->calls() == 21);
  }
  {
    MockGateway mock(scripted_blend_handler(direct, persona));
    ResponseCache cache(dir.file("cache.jsonl"));
    const auto scores =
        blend_accuracy(questions, backend("model"), backend("judge"), mock.gateway, cache);
    CHECK(scores.overall_accuracy == first_accuracy);
    CHECK(mock.transport->calls() == 0);
  }
}

TEST_CASE("question order does not change the scores") {
  std::vector<BlendQuestion> questions;
  std::map<std::string, bool> direct, persona;
  for (int i = 0; i < 9; ++i) {
    const std::string id = "q" + std::to_string(i);
    questions.push_back(question(id, i % 2 ? "ID" : "EL", "question " + id, {"entity-" + id}));
    direct[id] = (i % 2 == 0);
    persona[id] = (i % 4 == 0);
  }
  auto shuffled = questions;
  std::mt19937_64 rng(107);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  ResponseCache cache_a, cache_b;
  MockGateway mock_a(scripted_blend_handler(direct, persona));
  MockGateway mock_b(scripted_blend_handler(direct, persona));
  const auto in_order =
      blend_accuracy(questions, backend("model"), backend("judge"), mock_a.gateway, cache_a);
  const auto out_of_order =
      blend_accuracy(shuffled, backend("model"), backend("judge"), mock_b.gateway, cache_b);
  for (const auto& [code, score] : in_order.per_language) {
    CHECK(out_of_order.per_language.at(code).accuracy == score.accuracy);
  }
}

TEST_CASE("a question whose entity check keeps failing is excluded") {
  // q-bad's model answer contains "riddle", which makes the judge reply
  // nonsense for that statement.
  MockGateway mock([](const nlohmann::json& body) -> std::string {
    const auto messages = request_messages(body);
    if (messages.front().first == "system" &&
        messages.front().second.rfind("Check whether an entity", 0) == 0) {
      if (body.dump().find("riddle") != std::string::npos) return "What a riddle!";
      return entity_judge_reply(body);
    }
    const std::string& text = messages.back().second;
    if (text.find("q-bad") != std::string::npos) return "A riddle wrapped in an enigma.";
    return "The answer is entity-good.";
  });
  ResponseCache cache;
  const std::vector<BlendQuestion> questions = {
      question("q-good-1", "TR", "question q-good-1", {"entity-good"}),
      question("q-bad", "TR", "question q-bad", {"entity-bad"}),
      question("q-good-2", "TR", "question q-good-2", {"entity-good"}),
  };
  const auto scores =
      blend_accuracy(questions, backend("model"), backend("judge"), mock.gateway, cache);
  CHECK(scores.total_scored == 2);
  CHECK(scores.total_excluded == 1);
  CHECK(scores.per_language.at("TR").excluded_questions == 1);
  CHECK(scores.per_language.at("TR").accuracy == 100.0);  // 4 of 2*2
  CHECK(scores.outcomes[1].excluded);
  CHECK_FALSE(scores.outcomes[1].exclusion_reason.empty());
}

TEST_CASE("scoring fails when every question is excluded") {
  MockGateway mock([](const nlohmann::json& body) -> std::string {
    const auto messages = request_messages(body);
    if (messages.front().first == "system" &&
        messages.front().second.rfind("Check whether an entity", 0) == 0) {
      return "Unsure.";
    }
    return "Some answer.";
  });
  ResponseCache cache;
  const std::vector<BlendQuestion> questions = {
      question("q1", "MS", "question q1", {"entity"})};
  CHECK_THROWS_AS(
      blend_accuracy(questions, backend("model"), backend("judge"), mock.gateway, cache),
      EntityJudgeError);
}

TEST_CASE("question validation") {
  CHECK_THROWS_AS(validate_blend_question(question("q", "XX", "text", {"e"})), ValidationError);
  CHECK_THROWS_AS(validate_blend_question(question("q", "KO", "", {"e"})), ValidationError);
  CHECK_THROWS_AS(validate_blend_question(question("q", "KO", "text", {})), ValidationError);
  CHECK_THROWS_AS(validate_blend_question(question("q", "KO", "text", {" "})), ValidationError);
  CHECK_NOTHROW(validate_blend_question(question("q", "KO", "text", {"e"})));
}

TEST_CASE("question files load and validate") {
  TempDir dir;
  const auto path = dir.write(
      "questions.jsonl",
      R"({"id":"q1","language":"EL","question":"ποιο είναι το πιο δημοφιλές;","answers":["αγγλικά","English"]})"
      "\n");
  const auto questions = load_blend_questions(path);
  REQUIRE(questions.size() == 1);
  CHECK(questions[0].language == "EL");
  CHECK(questions[0].answer_set.size() == 2);

  CHECK_THROWS_AS(
      load_blend_questions(dir.write("bad.jsonl", R"({"id":"q","language":"EL"})" "\n")),
      ValidationError);
}

}  // TEST_SUITE
