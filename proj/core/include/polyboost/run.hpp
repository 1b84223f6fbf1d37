#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "polyboost/gateway.hpp"
#include "polyboost/report.hpp"
#include "polyboost/revision_filter.hpp"

namespace polyboost {

enum class Stage { Validate, Filter, BuildTrain, Boost, Judge, BlendScore, Report };

Stage stage_from_string(std::string_view name);
std::string_view to_string(Stage stage);

/// Everything one pipeline invocation needs. A JSON config file fills the
/// fields first; CLI flags override individual entries.
struct RunConfig {
  Stage stage = Stage::Validate;

  std::filesystem::path input;   // validate/filter/build-train/boost/report(convert)
  std::filesystem::path output;  // stage artifact; reports are canonical JSON
  std::string kind = "pairs";    // validate: "pairs" | "revisions"

  FilterConfig filter;  // filter stage

  std::filesystem::path prompt_file;  // overrides the default booster prompt

  std::optional<BackendConfig> backend;  // boost
  std::optional<BackendConfig> judge;    // judge, blend-score
  std::optional<BackendConfig> model;    // blend-score

  std::filesystem::path questions;  // judge, blend-score
  std::filesystem::path candidate;  // judge
  std::filesystem::path baseline;   // judge

  std::filesystem::path cache_dir;  // response cache location

  // Deterministic judge-set subsampling (per language).
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> sample_per_language;
  std::filesystem::path exclude_file;  // ids excluded from sampling, one per line

  ReportFormat format = ReportFormat::Json;  // report stage
  std::filesystem::path original;            // report comparison mode
  std::filesystem::path boosted;             // report comparison mode

  std::optional<std::size_t> parallelism;  // overrides backend parallelism
};

/// Parses the JSON config-file form of RunConfig.
RunConfig run_config_from_json(const nlohmann::json& document);

/// Cross-field checks: referenced paths distinct, stage inputs present,
/// seed set whenever sampling occurs.
void validate_run_config(const RunConfig& config);

/// Exit codes returned by run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitTransport = 3;
inline constexpr int kExitIo = 4;

/// Dispatches one stage. Exceptions are rendered to stderr and encoded in
/// the exit code (validation 2, transport 3, I/O 4).
int run(const RunConfig& config);

/// Same, with an injected gateway (tests use mock transports).
int run(const RunConfig& config, Gateway& gateway);

}  // namespace polyboost
