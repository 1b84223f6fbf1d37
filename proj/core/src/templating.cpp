#include "polyboost/templating.hpp"

#include <fstream>

#include "polyboost/text.hpp"

namespace polyboost {

namespace {

constexpr std::string_view kDefaultPromptText =
    "Below is an instruction-response record. Improve its content accuracy and richness, fix "
    "translation defects, and localize expressions and cultural references for the record's "
    "language, preserving the original intent and format. Return only the improved record in the "
    "same marker format.";

bool contains_marker(std::string_view text) {
  return text.find(kInstructionMarker) != std::string_view::npos ||
         text.find(kInputMarker) != std::string_view::npos ||
         text.find(kResponseMarker) != std::string_view::npos;
}

std::string_view strip_one_leading_newline(std::string_view section) {
  if (!section.empty() && section.front() == '\n') section.remove_prefix(1);
  return section;
}

std::string_view strip_one_trailing_newline(std::string_view section) {
  if (!section.empty() && section.back() == '\n') section.remove_suffix(1);
  return section;
}

}  // namespace

BoosterPrompt default_booster_prompt() {
  return BoosterPrompt{std::string(kDefaultPromptText)};
}

void validate_booster_prompt(const BoosterPrompt& prompt) {
  if (blank(prompt.text)) throw ValidationError("booster prompt must be non-empty");
  if (contains_marker(prompt.text)) {
    throw ValidationError("booster prompt must not contain section markers");
  }
}

std::string render_pair(const InstructionPair& pair) {
  const std::pair<std::string_view, std::string_view> fields[] = {
      {"instruction", pair.instruction},
      {"input", pair.input},
      {"response", pair.response},
  };
  for (const auto& [name, value] : fields) {
    if (contains_marker(value)) {
      throw ValidationError("cannot render record " + pair.id + ": field " + std::string(name) +
                            " contains a section marker");
    }
  }
  std::string out;
  out.reserve(pair.instruction.size() + pair.input.size() + pair.response.size() + 48);
  out += kInstructionMarker;
  out += '\n';
  out += pair.instruction;
  out += '\n';
  out += kInputMarker;
  out += '\n';
  out += pair.input;
  out += '\n';
  out += kResponseMarker;
  out += '\n';
  out += pair.response;
  return out;
}

InstructionPair parse_rendered(std::string_view text, std::string_view language,
                               std::string_view id) {
  const auto excerpt = [&] { return std::string(utf8_clip_prefix(text, 200)); };

  const auto instruction_at = text.find(kInstructionMarker);
  if (instruction_at == std::string_view::npos) {
    throw ParseFailure("missing marker " + std::string(kInstructionMarker), excerpt());
  }
  const auto instruction_end = instruction_at + kInstructionMarker.size();
  const auto input_at = text.find(kInputMarker, instruction_end);
  if (input_at == std::string_view::npos) {
    throw ParseFailure("missing marker " + std::string(kInputMarker), excerpt());
  }
  const auto input_end = input_at + kInputMarker.size();
  const auto response_at = text.find(kResponseMarker, input_end);
  if (response_at == std::string_view::npos) {
    throw ParseFailure("missing marker " + std::string(kResponseMarker), excerpt());
  }
  const auto response_end = response_at + kResponseMarker.size();

  auto instruction = text.substr(instruction_end, input_at - instruction_end);
  auto input = text.substr(input_end, response_at - input_end);
  auto response = text.substr(response_end);
  instruction = strip_one_trailing_newline(strip_one_leading_newline(instruction));
  input = strip_one_trailing_newline(strip_one_leading_newline(input));
  response = strip_one_leading_newline(response);

  if (response.empty()) throw ParseFailure("empty response section", excerpt());

  InstructionPair pair{std::string(id), std::string(language), std::string(instruction),
                       std::string(input), std::string(response)};
  const auto violations = validate_pair(pair);
  if (!violations.empty()) {
    throw ParseFailure("parsed record invalid: " + violations.front().describe(), excerpt());
  }
  return pair;
}

std::string compose_booster_request(const BoosterPrompt& prompt, std::string_view rendered_pair) {
  std::string out;
  out.reserve(prompt.text.size() + rendered_pair.size() + 2);
  out += prompt.text;
  out += "\n\n";
  out += rendered_pair;
  return out;
}

TrainingSample build_training_sample(const RevisionExample& example, const BoosterPrompt& prompt) {
  validate_booster_prompt(prompt);
  TrainingSample sample;
  sample.prompt = prompt.text;
  sample.input_text = render_pair(example.original);
  sample.output_text = render_pair(example.boosted);
  sample.language = example.original.language;
  return sample;
}

nlohmann::ordered_json default_training_meta() {
  return nlohmann::ordered_json{
      {"lora_rank", 64},
      {"learning_rate", 4e-4},
      {"epochs", 3},
      {"global_batch_size", 128},
  };
}

namespace {

void validate_sample(const TrainingSample& sample, std::size_t index) {
  const auto describe = [&](const char* what) {
    return "training sample " + std::to_string(index) + ": " + what;
  };
  validate_booster_prompt(BoosterPrompt{sample.prompt});
  try {
    // Parse-back uses a placeholder id: samples carry no id of their own.
    const auto original = parse_rendered(sample.input_text, sample.language, "sample");
    const auto boosted = parse_rendered(sample.output_text, sample.language, "sample");
    if (original.language != boosted.language) {
      throw ValidationError(describe("sides disagree on language"));
    }
  } catch (const ParseFailure& failure) {
    throw ValidationError(describe(failure.what()));
  }
}

}  // namespace

std::size_t export_training_file(const std::vector<TrainingSample>& samples,
                                 const std::filesystem::path& path,
                                 const nlohmann::ordered_json& meta) {
  for (std::size_t i = 0; i < samples.size(); ++i) validate_sample(samples[i], i);

  std::string payload;
  payload += nlohmann::ordered_json{{"meta", meta}}.dump();
  payload += '\n';
  for (const auto& sample : samples) {
    payload += nlohmann::ordered_json{{"prompt", sample.prompt},
                                      {"input", sample.input_text},
                                      {"output", sample.output_text},
                                      {"language", sample.language}}
                   .dump();
    payload += '\n';
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << payload;
  if (!out) throw IoError("write failed for " + path.string());
  return samples.size();
}

TrainingFile load_training_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  TrainingFile file;
  std::string text;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (blank(text)) continue;
    auto value = nlohmann::ordered_json::parse(text, nullptr, false);
    if (value.is_discarded() || !value.is_object()) {
      throw ValidationError("line " + std::to_string(line) + ": invalid JSON");
    }
    if (!header_seen) {
      if (!value.contains("meta")) {
        throw ValidationError("line " + std::to_string(line) + ": first line must carry meta");
      }
      file.meta = value.at("meta");
      header_seen = true;
      continue;
    }
    TrainingSample sample;
    const std::pair<const char*, std::string*> fields[] = {
        {"prompt", &sample.prompt},
        {"input", &sample.input_text},
        {"output", &sample.output_text},
        {"language", &sample.language},
    };
    for (const auto& [key, target] : fields) {
      if (!value.contains(key) || !value.at(key).is_string()) {
        throw ValidationError("line " + std::to_string(line) + ": missing field " + key);
      }
      *target = value.at(key).get<std::string>();
    }
    validate_sample(sample, file.samples.size());
    file.samples.push_back(std::move(sample));
  }
  if (!header_seen) throw ValidationError("training file has no header line");
  return file;
}

}  // namespace polyboost
