// polyboost: filter, boost, and evaluate multilingual instruction datasets.
//
// Every subcommand is one pipeline stage. A JSON config file (--config) can
// preload any setting; explicit flags override it.

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyboost/run.hpp"

namespace {

using nlohmann::json;

struct StageCli {
  CLI::App* app = nullptr;
  std::string config_file;
  json overrides = json::object();
};

void add_path_option(StageCli& cli, const std::string& flag, const std::string& key,
                     const std::string& help) {
  cli.app->add_option_function<std::string>(
      flag, [&cli, key](const std::string& value) { cli.overrides[key] = value; }, help);
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "io error: cannot open config file " << path << "\n";
    std::exit(polyboost::kExitIo);
  }
  json document = json::parse(in, nullptr, false);
  if (document.is_discarded() || !document.is_object()) {
    std::cerr << "validation error: config file is not a JSON object: " << path << "\n";
    std::exit(polyboost::kExitValidation);
  }
  return document;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toolkit for boosting and evaluating multilingual instruction datasets"};
  app.require_subcommand(1);

  std::map<std::string, StageCli> stages;
  const auto make_stage = [&](const std::string& name, const std::string& help) -> StageCli& {
    StageCli& cli = stages[name];
    cli.app = app.add_subcommand(name, help);
    cli.app->add_option("--config", cli.config_file, "JSON config file; flags override it");
    return cli;
  };

  {
    StageCli& cli = make_stage("validate", "Check a corpus file against all record invariants");
    add_path_option(cli, "--in", "in", "corpus file (JSON lines)");
    cli.app->add_option_function<std::string>(
        "--kind", [&cli](const std::string& v) { cli.overrides["kind"] = v; },
        "record kind: pairs | revisions");
  }
  {
    StageCli& cli = make_stage(
        "filter", "Compute revision distances and keep the top-alpha revised examples");
    add_path_option(cli, "--in", "in", "revision corpus");
    add_path_option(cli, "--out", "out", "filtered revision corpus (distance added)");
    cli.app->add_option_function<double>(
        "--alpha", [&cli](double v) { cli.overrides["alpha"] = v; },
        "fraction of examples to keep, in (0,1] (default 0.30)");
    cli.app->add_option_function<std::string>(
        "--scope", [&cli](const std::string& v) { cli.overrides["scope"] = v; },
        "per-language | global (default per-language)");
  }
  {
    StageCli& cli = make_stage("build-train", "Export the booster fine-tuning corpus");
    add_path_option(cli, "--in", "in", "filtered revision corpus");
    add_path_option(cli, "--out", "out", "training file (header line + one sample per line)");
    add_path_option(cli, "--prompt-file", "prompt_file", "override the default booster prompt");
  }
  {
    StageCli& cli = make_stage("boost", "Run the booster backend over a pair corpus");
    add_path_option(cli, "--in", "in", "pair corpus to boost");
    add_path_option(cli, "--out", "out", "boosted pair corpus; stats sidecar <out>.stats.json");
    add_path_option(cli, "--prompt-file", "prompt_file", "override the default booster prompt");
    add_path_option(cli, "--backend", "backend", "booster backend config (JSON file)");
    add_path_option(cli, "--cache-dir", "cache_dir", "response cache directory");
    cli.app->add_option_function<std::size_t>(
        "--parallelism", [&cli](std::size_t v) { cli.overrides["parallelism"] = v; },
        "max in-flight backend requests");
  }
  {
    StageCli& cli = make_stage("judge", "Position-debiased pairwise comparison of two candidates");
    add_path_option(cli, "--questions", "questions", "questions file ({id,language,question})");
    add_path_option(cli, "--candidate", "candidate", "candidate responses ({id,response})");
    add_path_option(cli, "--baseline", "baseline", "baseline responses ({id,response})");
    add_path_option(cli, "--judge", "judge", "judge backend config (JSON file)");
    add_path_option(cli, "--out", "out", "report path (canonical JSON)");
    add_path_option(cli, "--cache-dir", "cache_dir", "response cache directory");
    cli.app->add_option_function<std::size_t>(
        "--sample-per-language",
        [&cli](std::size_t v) { cli.overrides["sample_per_language"] = v; },
        "judge a seeded random subset of this size per language");
    cli.app->add_option_function<std::uint64_t>(
        "--seed", [&cli](std::uint64_t v) { cli.overrides["seed"] = v; },
        "sampling seed (required with --sample-per-language)");
    add_path_option(cli, "--exclude-file", "exclude_file",
                    "ids excluded from sampling, one per line");
    cli.app->add_option_function<std::size_t>(
        "--parallelism", [&cli](std::size_t v) { cli.overrides["parallelism"] = v; },
        "max in-flight judge requests");
  }
  {
    StageCli& cli = make_stage("blend-score", "Cultural-knowledge accuracy under two prompts");
    add_path_option(cli, "--questions", "questions",
                    "question file ({id,language,question,answers})");
    add_path_option(cli, "--model", "model", "candidate model backend config (JSON file)");
    add_path_option(cli, "--judge", "judge", "entity-matching judge config (JSON file)");
    add_path_option(cli, "--out", "out", "report path (canonical JSON, optional)");
    add_path_option(cli, "--cache-dir", "cache_dir", "response cache directory");
    cli.app->add_option_function<std::size_t>(
        "--parallelism", [&cli](std::size_t v) { cli.overrides["parallelism"] = v; },
        "max in-flight requests");
  }
  {
    StageCli& cli = make_stage("report", "Convert a report or compute improvement rows");
    add_path_option(cli, "--in", "in", "canonical JSON report to convert");
    add_path_option(cli, "--original", "original", "blend report of the unboosted run");
    add_path_option(cli, "--boosted", "boosted", "blend report of the boosted run");
    add_path_option(cli, "--out", "out", "output path");
    cli.app->add_option_function<std::string>(
        "--format", [&cli](const std::string& v) { cli.overrides["format"] = v; },
        "json | csv | text-table (default json)");
  }

  CLI11_PARSE(app, argc, argv);

  for (auto& [name, cli] : stages) {
    if (!cli.app->parsed()) continue;
    json document = load_config_file(cli.config_file);
    document["stage"] = name;
    for (const auto& [key, value] : cli.overrides.items()) document[key] = value;
    try {
      return polyboost::run(polyboost::run_config_from_json(document));
    } catch (const polyboost::ValidationError& error) {
      std::cerr << "validation error: " << error.what() << "\n";
      return polyboost::kExitValidation;
    } catch (const polyboost::IoError& error) {
      std::cerr << "io error: " << error.what() << "\n";
      return polyboost::kExitIo;
    }
  }
  return 1;
}
