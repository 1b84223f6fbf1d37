#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "polyboost/corpus.hpp"

namespace polyboost {

/// The refinement instruction prepended to every booster training or
/// inference input. The default wording is this toolkit's own; override it
/// with a prompt file when a run needs different phrasing.
struct BoosterPrompt {
  std::string text;
};

/// Project-default refinement instruction.
BoosterPrompt default_booster_prompt();

/// Throws ValidationError if the prompt is empty or contains a marker string.
void validate_booster_prompt(const BoosterPrompt& prompt);

/// One booster fine-tuning sample: the refinement prompt, the rendered
/// original record as model input, and the rendered boosted record as target.
struct TrainingSample {
  std::string prompt;
  std::string input_text;
  std::string output_text;
  std::string language;

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

/// Renders a record into its marker-concatenated string form:
///   <|instruction|>\n{instruction}\n<|input|>\n{input}\n<|response|>\n{response}
/// All three sections are always present; an empty input still renders its
/// section. No trailing newline. Throws ValidationError on marker collisions
/// (validation should have caught them earlier).
std::string render_pair(const InstructionPair& pair);

/// Exact inverse of render_pair. Locates the three markers in order, then
/// strips the single separator newline on each side of a section (the final
/// section has no trailing separator). Throws ParseFailure naming the first
/// missing marker, on an empty response section, or when the parsed record
/// fails validation. Text before the instruction marker is ignored so model
/// preambles do not break parsing.
InstructionPair parse_rendered(std::string_view text, std::string_view language,
                               std::string_view id);

/// Model-facing request content: prompt and rendered record joined by one
/// blank line.
std::string compose_booster_request(const BoosterPrompt& prompt, std::string_view rendered_pair);

/// Builds the training sample for one revision example. Criteria tags are
/// curation metadata and never reach the sample.
TrainingSample build_training_sample(const RevisionExample& example, const BoosterPrompt& prompt);

/// Advisory fine-tuning hyperparameters written into the training-file header.
nlohmann::ordered_json default_training_meta();

/// Writes the fine-tuning corpus: one header line {"meta": {...}} followed by
/// one JSON object per sample {"prompt","input","output","language"}.
/// Serialization is canonical, so equal inputs produce identical bytes.
/// Returns the number of sample lines written.
std::size_t export_training_file(const std::vector<TrainingSample>& samples,
                                 const std::filesystem::path& path,
                                 const nlohmann::ordered_json& meta = default_training_meta());

struct TrainingFile {
  nlohmann::ordered_json meta;
  std::vector<TrainingSample> samples;
};

/// Reads a training file back, validating the header and every sample.
TrainingFile load_training_file(const std::filesystem::path& path);

}  // namespace polyboost
