#include "polyboost/run.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "polyboost/blend.hpp"
#include "polyboost/boost_pipeline.hpp"
#include "polyboost/corpus.hpp"
#include "polyboost/templating.hpp"
#include "polyboost/text.hpp"

namespace polyboost {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Stage stage_from_string_impl(std::string_view name) {
  if (name == "validate") return Stage::Validate;
  if (name == "filter") return Stage::Filter;
  if (name == "build-train") return Stage::BuildTrain;
  if (name == "boost") return Stage::Boost;
  if (name == "judge") return Stage::Judge;
  if (name == "blend-score") return Stage::BlendScore;
  if (name == "report") return Stage::Report;
  throw ValidationError("unknown stage: " + std::string(name));
}

BoosterPrompt prompt_for(const RunConfig& config) {
  if (config.prompt_file.empty()) return default_booster_prompt();
  std::ifstream in(config.prompt_file, std::ios::binary);
  if (!in) throw IoError("cannot open prompt file " + config.prompt_file.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  BoosterPrompt prompt{std::move(text)};
  validate_booster_prompt(prompt);
  return prompt;
}

ResponseCache cache_for(const RunConfig& config) {
  if (config.cache_dir.empty()) return ResponseCache{};
  return ResponseCache(config.cache_dir / "responses.jsonl");
}

BackendConfig require_backend(const std::optional<BackendConfig>& backend, const char* name,
                              const RunConfig& config) {
  if (!backend) throw ValidationError(std::string("stage needs a ") + name + " backend config");
  BackendConfig adjusted = *backend;
  if (config.parallelism) adjusted.parallelism = *config.parallelism;
  std::cerr << name << " backend: model=" << adjusted.model_id
            << " endpoint=" << adjusted.endpoint << " temperature=" << adjusted.temperature;
  if (adjusted.send_beam_width) {
    std::cerr << " beam_width=" << adjusted.beam_width;
  } else {
    std::cerr << " beam_width=" << adjusted.beam_width << " (not transmitted)";
  }
  std::cerr << " parallelism=" << adjusted.parallelism << "\n";
  return adjusted;
}

CacheUsage cache_usage_of(const Gateway& gateway) {
  const GatewayStats stats = gateway.stats();
  return CacheUsage{stats.cache_hits, stats.cache_misses};
}

std::vector<std::string> read_id_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> ids;
  std::string text;
  while (std::getline(in, text)) {
    const auto trimmed = trim_whitespace(text);
    if (!trimmed.empty()) ids.emplace_back(trimmed);
  }
  return ids;
}

/// Reads {"id","response"} JSON lines into an id -> response map.
std::unordered_map<std::string, std::string> load_responses(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::unordered_map<std::string, std::string> responses;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (blank(text)) continue;
    auto value = json::parse(text, nullptr, false);
    if (value.is_discarded() || !value.is_object()) {
      throw ValidationError("line " + std::to_string(line) + ": invalid JSON in " + path.string());
    }
    if (!value.contains("id") || !value["id"].is_string() || !value.contains("response") ||
        !value["response"].is_string()) {
      throw ValidationError("line " + std::to_string(line) + ": expected {\"id\",\"response\"} in " +
                            path.string());
    }
    const std::string id = value["id"].get<std::string>();
    if (!responses.emplace(id, value["response"].get<std::string>()).second) {
      throw ValidationError("line " + std::to_string(line) + ": duplicate id \"" + id + "\" in " +
                            path.string());
    }
  }
  return responses;
}

std::vector<JudgeItem> load_judge_items(const RunConfig& config) {
  const auto candidate = load_responses(config.candidate);
  const auto baseline = load_responses(config.baseline);

  std::vector<JudgeItem> items;
  std::unordered_set<std::string> seen_ids;
  std::ifstream in(config.questions, std::ios::binary);
  if (!in) throw IoError("cannot open " + config.questions.string());
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (blank(text)) continue;
    auto value = json::parse(text, nullptr, false);
    if (value.is_discarded() || !value.is_object()) {
      throw ValidationError("line " + std::to_string(line) + ": invalid JSON in " +
                            config.questions.string());
    }
    JudgeItem item;
    for (const auto& [key, target] : std::initializer_list<std::pair<const char*, std::string*>>{
             {"id", &item.id}, {"language", &item.language}, {"question", &item.question}}) {
      if (!value.contains(key) || !value.at(key).is_string()) {
        throw ValidationError("line " + std::to_string(line) + ": missing field " + key + " in " +
                              config.questions.string());
      }
      *target = value.at(key).get<std::string>();
    }
    if (!known_language(item.language)) {
      throw ValidationError("line " + std::to_string(line) + ": unknown language code " +
                            item.language);
    }
    if (!seen_ids.insert(item.id).second) {
      throw ValidationError("line " + std::to_string(line) + ": duplicate question id \"" +
                            item.id + "\"");
    }
    const auto candidate_it = candidate.find(item.id);
    if (candidate_it == candidate.end()) {
      throw ValidationError("question \"" + item.id + "\" has no candidate response");
    }
    const auto baseline_it = baseline.find(item.id);
    if (baseline_it == baseline.end()) {
      throw ValidationError("question \"" + item.id + "\" has no baseline response");
    }
    item.response_x = candidate_it->second;
    item.response_y = baseline_it->second;
    if (blank(item.question) || blank(item.response_x) || blank(item.response_y)) {
      throw ValidationError("question \"" + item.id + "\" has an empty text field");
    }
    items.push_back(std::move(item));
  }
  return items;
}

int run_validate(const RunConfig& config) {
  std::size_t records = 0;
  std::size_t languages = 0;
  if (config.kind == "pairs") {
    const auto dataset = load_pairs(config.input);
    records = dataset.size();
    languages = dataset.languages().size();
  } else if (config.kind == "revisions") {
    const auto dataset = load_revisions(config.input);
    records = dataset.size();
    languages = dataset.languages().size();
  } else {
    throw ValidationError("kind must be \"pairs\" or \"revisions\", got " + config.kind);
  }
  std::cout << "ok: " << records << " records across " << languages << " languages\n";
  return kExitOk;
}

int run_filter(const RunConfig& config) {
  validate_filter_config(config.filter);
  const auto dataset = compute_distances(load_revisions(config.input));
  const auto selected = select_top_alpha(dataset, config.filter);
  save_revisions(selected, config.output);
  for (const auto& code : selected.languages()) {
    std::cout << code << ": kept " << selected.indices_for(code).size() << " of "
              << dataset.indices_for(code).size() << "\n";
  }
  std::cout << "wrote " << selected.size() << " revision examples to " << config.output.string()
            << "\n";
  return kExitOk;
}

int run_build_train(const RunConfig& config) {
  const auto dataset = load_revisions(config.input);
  const BoosterPrompt prompt = prompt_for(config);
  std::vector<TrainingSample> samples;
  samples.reserve(dataset.size());
  for (const auto& example : dataset.records()) {
    samples.push_back(build_training_sample(example, prompt));
  }
  const std::size_t written = export_training_file(samples, config.output);
  std::cout << "wrote " << written << " training samples to " << config.output.string() << "\n";
  return kExitOk;
}

void write_boost_stats(const BoostStats& stats, std::size_t total_records,
                       const CacheUsage& cache, const std::filesystem::path& path) {
  ordered_json per_language = ordered_json::object();
  std::vector<std::string> codes;
  for (const auto& [code, counts] : stats.per_language) codes.push_back(code);
  std::sort(codes.begin(), codes.end(), [](const std::string& a, const std::string& b) {
    return registry_rank(a) < registry_rank(b);
  });
  for (const auto& code : codes) {
    const auto& counts = stats.per_language.at(code);
    per_language[code] = ordered_json{{"boosted", counts.boosted}, {"fallback", counts.fallback}};
  }
  ordered_json document{{"per_language", std::move(per_language)},
                        {"total_records", total_records},
                        {"total_backend_calls", stats.total_backend_calls},
                        {"fallback_ids", stats.fallback_ids},
                        {"cache_hits", cache.hits},
                        {"cache_misses", cache.misses}};
  if (!stats.completed_at.empty()) document["completed_at"] = stats.completed_at;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << document.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

int run_boost(const RunConfig& config, Gateway& gateway) {
  const auto dataset = load_pairs(config.input);
  const BoosterPrompt prompt = prompt_for(config);
  const BackendConfig backend = require_backend(config.backend, "booster", config);
  ResponseCache cache = cache_for(config);

  const auto [boosted, stats] = boost_dataset(dataset, prompt, backend, gateway, cache);
  save_pairs(boosted, config.output);

  std::filesystem::path stats_path = config.output;
  stats_path += ".stats.json";
  write_boost_stats(stats, dataset.size(), cache_usage_of(gateway), stats_path);

  std::size_t fallbacks = stats.fallback_ids.size();
  std::cout << "boosted " << (dataset.size() - fallbacks) << " of " << dataset.size()
            << " records (" << fallbacks << " fallbacks), stats in " << stats_path.string()
            << "\n";
  return kExitOk;
}

int run_judge(const RunConfig& config, Gateway& gateway) {
  std::vector<JudgeItem> items = load_judge_items(config);
  if (config.sample_per_language) {
    std::vector<std::string> exclude;
    if (!config.exclude_file.empty()) exclude = read_id_lines(config.exclude_file);
    const Dataset<JudgeItem> sampled = sample_subset(
        Dataset<JudgeItem>(std::move(items)), *config.sample_per_language, *config.seed, exclude);
    items = sampled.records();
  }

  const BackendConfig judge_backend = require_backend(config.judge, "judge", config);
  ResponseCache cache = cache_for(config);
  const PairwiseEvaluation evaluation = evaluate_pairwise(items, judge_backend, gateway, cache);

  const EvalReport report =
      judge_report(evaluation, config.candidate.string(), config.baseline.string(),
                   judge_backend.model_id, cache_usage_of(gateway));
  emit_report(report, ReportFormat::Json, config.output);
  std::cout << format_text_table(report);
  std::cout << "wrote " << config.output.string() << "\n";
  return kExitOk;
}

int run_blend(const RunConfig& config, Gateway& gateway) {
  const auto questions = load_blend_questions(config.questions);
  const BackendConfig model_backend = require_backend(config.model, "model", config);
  const BackendConfig judge_backend = require_backend(config.judge, "judge", config);
  ResponseCache cache = cache_for(config);

  const BlendScores scores =
      blend_accuracy(questions, model_backend, judge_backend, gateway, cache);
  const EvalReport report = blend_report(scores, model_backend.model_id, judge_backend.model_id,
                                         cache_usage_of(gateway));
  std::cout << format_text_table(report);
  if (!config.output.empty()) {
    emit_report(report, ReportFormat::Json, config.output);
    std::cout << "wrote " << config.output.string() << "\n";
  }
  return kExitOk;
}

int run_report(const RunConfig& config) {
  if (!config.original.empty() || !config.boosted.empty()) {
    const EvalReport original = load_report(config.original);
    const EvalReport boosted = load_report(config.boosted);
    const EvalReport comparison = improvement_report(original, boosted);
    emit_report(comparison, config.format, config.output);
    std::cout << format_text_table(comparison);
    std::cout << "wrote " << config.output.string() << "\n";
    return kExitOk;
  }
  const EvalReport report = load_report(config.input);
  emit_report(report, config.format, config.output);
  std::cout << "wrote " << config.output.string() << "\n";
  return kExitOk;
}

int dispatch(const RunConfig& config, Gateway& gateway) {
  validate_run_config(config);
  switch (config.stage) {
    case Stage::Validate:
      return run_validate(config);
    case Stage::Filter:
      return run_filter(config);
    case Stage::BuildTrain:
      return run_build_train(config);
    case Stage::Boost:
      return run_boost(config, gateway);
    case Stage::Judge:
      return run_judge(config, gateway);
    case Stage::BlendScore:
      return run_blend(config, gateway);
    case Stage::Report:
      return run_report(config);
  }
  throw ValidationError("unreachable stage");
}

}  // namespace

Stage stage_from_string(std::string_view name) {
  return stage_from_string_impl(name);
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Validate:
      return "validate";
    case Stage::Filter:
      return "filter";
    case Stage::BuildTrain:
      return "build-train";
    case Stage::Boost:
      return "boost";
    case Stage::Judge:
      return "judge";
    case Stage::BlendScore:
      return "blend-score";
    case Stage::Report:
      return "report";
  }
  return "unknown";
}

RunConfig run_config_from_json(const json& document) {
  if (!document.is_object()) throw ValidationError("run config must be a JSON object");
  RunConfig config;
  const auto read_path = [&](const char* key, std::filesystem::path& target) {
    if (!document.contains(key)) return;
    if (!document.at(key).is_string()) {
      throw ValidationError(std::string("config field ") + key + " must be a string");
    }
    target = document.at(key).get<std::string>();
  };
  if (document.contains("stage")) {
    config.stage = stage_from_string(document.at("stage").get<std::string>());
  }
  read_path("in", config.input);
  read_path("out", config.output);
  if (document.contains("kind")) config.kind = document.at("kind").get<std::string>();
  if (document.contains("alpha")) config.filter.alpha = document.at("alpha").get<double>();
  if (document.contains("scope")) {
    const auto scope = document.at("scope").get<std::string>();
    if (scope == "per-language") {
      config.filter.scope = FilterScope::PerLanguage;
    } else if (scope == "global") {
      config.filter.scope = FilterScope::Global;
    } else {
      throw ValidationError("scope must be \"per-language\" or \"global\", got " + scope);
    }
  }
  read_path("prompt_file", config.prompt_file);
  const auto read_backend = [&](const char* key, std::optional<BackendConfig>& target) {
    if (!document.contains(key)) return;
    const auto& value = document.at(key);
    if (value.is_string()) {
      std::ifstream in(value.get<std::string>(), std::ios::binary);
      if (!in) throw IoError("cannot open backend config " + value.get<std::string>());
      json parsed = json::parse(in, nullptr, false);
      if (parsed.is_discarded()) {
        throw ValidationError("backend config file is not valid JSON: " + value.get<std::string>());
      }
      target = backend_config_from_json(parsed);
      return;
    }
    target = backend_config_from_json(value);
  };
  read_backend("backend", config.backend);
  read_backend("judge", config.judge);
  read_backend("model", config.model);
  read_path("questions", config.questions);
  read_path("candidate", config.candidate);
  read_path("baseline", config.baseline);
  read_path("cache_dir", config.cache_dir);
  if (document.contains("seed")) config.seed = document.at("seed").get<std::uint64_t>();
  if (document.contains("sample_per_language")) {
    config.sample_per_language = document.at("sample_per_language").get<std::size_t>();
  }
  read_path("exclude_file", config.exclude_file);
  if (document.contains("format")) {
    config.format = report_format_from_string(document.at("format").get<std::string>());
  }
  read_path("original", config.original);
  read_path("boosted", config.boosted);
  if (document.contains("parallelism")) {
    config.parallelism = document.at("parallelism").get<std::size_t>();
  }
  return config;
}

void validate_run_config(const RunConfig& config) {
  const std::pair<const char*, const std::filesystem::path*> paths[] = {
      {"in", &config.input},           {"out", &config.output},
      {"questions", &config.questions}, {"candidate", &config.candidate},
      {"baseline", &config.baseline},   {"original", &config.original},
      {"boosted", &config.boosted},     {"prompt_file", &config.prompt_file},
      {"exclude_file", &config.exclude_file},
  };
  std::map<std::string, std::string> seen;
  for (const auto& [name, path] : paths) {
    if (path->empty()) continue;
    const auto normal = path->lexically_normal().string();
    const auto [it, inserted] = seen.emplace(normal, name);
    if (!inserted) {
      throw ValidationError(std::string("paths must be distinct: ") + it->second + " and " + name +
                            " are both " + normal);
    }
  }
  if (config.sample_per_language && !config.seed) {
    throw ValidationError("sampling requires a seed");
  }

  const auto need = [&](const std::filesystem::path& path, const char* name) {
    if (path.empty()) {
      throw ValidationError(std::string(to_string(config.stage)) + " needs --" + name);
    }
  };
  switch (config.stage) {
    case Stage::Validate:
      need(config.input, "in");
      break;
    case Stage::Filter:
    case Stage::BuildTrain:
    case Stage::Boost:
      need(config.input, "in");
      need(config.output, "out");
      break;
    case Stage::Judge:
      need(config.questions, "questions");
      need(config.candidate, "candidate");
      need(config.baseline, "baseline");
      need(config.output, "out");
      break;
    case Stage::BlendScore:
      need(config.questions, "questions");
      break;
    case Stage::Report:
      need(config.output, "out");
      if (config.original.empty() != config.boosted.empty()) {
        throw ValidationError("report comparison needs both --original and --boosted");
      }
      if (config.original.empty() && config.input.empty()) {
        throw ValidationError("report needs --in, or --original with --boosted");
      }
      break;
  }
}

int run(const RunConfig& config, Gateway& gateway) {
  try {
    return dispatch(config, gateway);
  } catch (const ValidationError& error) {
    std::cerr << "validation error: " << error.what() << "\n";
    return kExitValidation;
  } catch (const ParseFailure& error) {
    std::cerr << "parse error: " << error.what() << "\n";
    return kExitValidation;
  } catch (const TransportError& error) {
    std::cerr << "transport error: " << error.what() << "\n";
    return kExitTransport;
  } catch (const BackendError& error) {
    std::cerr << "backend error: " << error.what() << "\n";
    return kExitTransport;
  } catch (const EntityJudgeError& error) {
    std::cerr << "entity judge error: " << error.what() << "\n";
    return kExitValidation;
  } catch (const IoError& error) {
    std::cerr << "io error: " << error.what() << "\n";
    return kExitIo;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
}

int run(const RunConfig& config) {
  Gateway gateway;
  return run(config, gateway);
}

}  // namespace polyboost
