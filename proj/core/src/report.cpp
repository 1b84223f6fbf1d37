#include "polyboost/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "polyboost/corpus.hpp"

namespace polyboost {

namespace {

using nlohmann::ordered_json;

/// Shortest round-trip decimal form, shared by JSON and CSV output.
std::string number_text(double value) {
  return ordered_json(value).dump();
}

std::string cache_rate_text(const CacheUsage& cache) {
  const std::size_t total = cache.hits + cache.misses;
  if (total == 0) return "0";
  return number_text(static_cast<double>(cache.hits) / static_cast<double>(total));
}

std::vector<std::pair<std::string, std::string>> base_metadata(const std::string& completed_at,
                                                               const CacheUsage& cache) {
  std::vector<std::pair<std::string, std::string>> metadata;
  if (!completed_at.empty()) metadata.emplace_back("completed_at", completed_at);
  metadata.emplace_back("cache_hits", std::to_string(cache.hits));
  metadata.emplace_back("cache_misses", std::to_string(cache.misses));
  metadata.emplace_back("cache_hit_rate", cache_rate_text(cache));
  return metadata;
}

template <typename Map, typename MakeRow>
void append_language_rows(const Map& by_language, EvalReport& report, MakeRow&& make_row) {
  std::vector<std::string> codes;
  for (const auto& [code, value] : by_language) codes.push_back(code);
  std::sort(codes.begin(), codes.end(), [](const std::string& a, const std::string& b) {
    return registry_rank(a) < registry_rank(b);
  });
  for (const auto& code : codes) {
    report.rows.push_back(make_row(code, by_language.at(code)));
  }
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string escaped = "\"";
  for (char c : field) {
    if (c == '"') escaped += '"';
    escaped += c;
  }
  escaped += '"';
  return escaped;
}

}  // namespace

double improvement(double original, double boosted) {
  if (!(original > 0.0)) {
    throw ValidationError("improvement needs a positive original score, got " +
                          std::to_string(original));
  }
  return 100.0 * (boosted - original) / original;
}

double round_one_decimal(double value) {
  return std::round(value * 10.0) / 10.0;
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "text-table") return ReportFormat::TextTable;
  throw ValidationError("unknown report format: " + std::string(name));
}

EvalReport judge_report(const PairwiseEvaluation& evaluation, const std::string& candidate,
                        const std::string& baseline, const std::string& judge_model,
                        const CacheUsage& cache) {
  EvalReport report;
  report.kind = "judge";
  report.metadata.emplace_back("candidate", candidate);
  report.metadata.emplace_back("baseline", baseline);
  report.metadata.emplace_back("judge_model", judge_model);
  for (auto& entry : base_metadata(evaluation.completed_at, cache)) {
    report.metadata.push_back(std::move(entry));
  }
  report.columns = {"win",       "lose",       "tie",      "invalid_singles", "win_ratio",
                    "lose_ratio", "tie_ratio", "win_rate", "winning_score"};

  VerdictCounts overall;
  const auto row_for = [](const std::string& label, const VerdictCounts& counts) {
    const Metrics metrics = compute_metrics(counts);
    return EvalReport::Row{label,
                           {static_cast<double>(counts.win), static_cast<double>(counts.lose),
                            static_cast<double>(counts.tie),
                            static_cast<double>(counts.invalid_singles), metrics.win_ratio,
                            metrics.lose_ratio, metrics.tie_ratio, metrics.win_rate,
                            metrics.winning_score}};
  };
  append_language_rows(evaluation.by_language, report,
                       [&](const std::string& code, const VerdictCounts& counts) {
                         return row_for(code, counts);
                       });
  for (const auto& [code, counts] : evaluation.by_language) {
    overall.win += counts.win;
    overall.lose += counts.lose;
    overall.tie += counts.tie;
    overall.invalid_singles += counts.invalid_singles;
  }
  report.rows.push_back(row_for("ALL", overall));
  return report;
}

EvalReport blend_report(const BlendScores& scores, const std::string& model,
                        const std::string& judge_model, const CacheUsage& cache) {
  EvalReport report;
  report.kind = "blend";
  report.metadata.emplace_back("model", model);
  report.metadata.emplace_back("judge_model", judge_model);
  for (auto& entry : base_metadata(scores.completed_at, cache)) {
    report.metadata.push_back(std::move(entry));
  }
  report.columns = {"scored_questions", "excluded_questions", "correct_instances", "accuracy"};
  append_language_rows(scores.per_language, report,
                       [](const std::string& code, const BlendLanguageScore& language) {
                         return EvalReport::Row{
                             code,
                             {static_cast<double>(language.scored_questions),
                              static_cast<double>(language.excluded_questions),
                              static_cast<double>(language.correct_instances), language.accuracy}};
                       });
  report.rows.push_back(EvalReport::Row{
      "ALL",
      {static_cast<double>(scores.total_scored), static_cast<double>(scores.total_excluded),
       std::accumulate(scores.per_language.begin(), scores.per_language.end(), 0.0,
                       [](double sum, const auto& entry) {
                         return sum + static_cast<double>(entry.second.correct_instances);
                       }),
       scores.overall_accuracy}});
  return report;
}

EvalReport improvement_report(const EvalReport& original, const EvalReport& boosted) {
  const auto accuracy_column = [](const EvalReport& report) {
    const auto it = std::find(report.columns.begin(), report.columns.end(), "accuracy");
    if (it == report.columns.end()) {
      throw ValidationError("improvement comparison needs reports with an accuracy column");
    }
    return static_cast<std::size_t>(it - report.columns.begin());
  };
  const std::size_t original_column = accuracy_column(original);
  const std::size_t boosted_column = accuracy_column(boosted);

  const auto value_of = [](const EvalReport& report, const std::string& language,
                           std::size_t column) -> std::optional<double> {
    for (const auto& row : report.rows) {
      if (row.language == language) return row.values[column];
    }
    return std::nullopt;
  };

  EvalReport report;
  report.kind = "improvement";
  report.columns = {"original", "boosted", "up_percent"};
  for (const auto& row : original.rows) {
    const auto boosted_value = value_of(boosted, row.language, boosted_column);
    if (!boosted_value) continue;  // improvement rows need both operands
    const double original_value = row.values[original_column];
    if (!(original_value > 0.0)) continue;
    report.rows.push_back(EvalReport::Row{
        row.language,
        {original_value, *boosted_value,
         round_one_decimal(improvement(original_value, *boosted_value))}});
  }
  if (report.rows.empty()) {
    throw ValidationError("no language carries an accuracy score in both reports");
  }
  return report;
}

std::string format_text_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"language"};
  header.insert(header.end(), report.columns.begin(), report.columns.end());
  cells.push_back(std::move(header));
  for (const auto& row : report.rows) {
    std::vector<std::string> line = {row.language};
    for (double value : row.values) line.push_back(number_text(value));
    cells.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      widths[i] = std::max(widths[i], line[i].size());
    }
  }

  std::ostringstream out;
  out << "# " << report.kind << " report\n";
  for (const auto& [key, value] : report.metadata) {
    out << "# " << key << ": " << value << "\n";
  }
  for (std::size_t r = 0; r < cells.size(); ++r) {
    const auto& line = cells[r];
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i > 0) out << "  ";
      out << line[i];
      if (i + 1 < line.size()) {
        out << std::string(widths[i] - line[i].size(), ' ');
      }
    }
    out << "\n";
    if (r == 0) {
      std::size_t rule = 0;
      for (std::size_t w : widths) rule += w;
      out << std::string(rule + 2 * (widths.size() - 1), '-') << "\n";
    }
  }
  return out.str();
}

std::filesystem::path emit_report(const EvalReport& report, ReportFormat format,
                                  const std::filesystem::path& path) {
  std::string payload;
  switch (format) {
    case ReportFormat::Json: {
      ordered_json document;
      document["kind"] = report.kind;
      ordered_json metadata = ordered_json::object();
      for (const auto& [key, value] : report.metadata) metadata[key] = value;
      document["metadata"] = std::move(metadata);
      document["columns"] = report.columns;
      ordered_json rows = ordered_json::array();
      for (const auto& row : report.rows) {
        ordered_json entry{{"language", row.language}};
        for (std::size_t i = 0; i < report.columns.size(); ++i) {
          entry[report.columns[i]] = row.values[i];
        }
        rows.push_back(std::move(entry));
      }
      document["rows"] = std::move(rows);
      payload = document.dump(2);
      payload += '\n';
      break;
    }
    case ReportFormat::Csv: {
      payload = "language";
      for (const auto& column : report.columns) payload += "," + csv_escape(column);
      payload += '\n';
      for (const auto& row : report.rows) {
        payload += csv_escape(row.language);
        for (double value : row.values) payload += "," + number_text(value);
        payload += '\n';
      }
      break;
    }
    case ReportFormat::TextTable:
      payload = format_text_table(report);
      break;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << payload;
  if (!out) throw IoError("write failed for " + path.string());
  return path;
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto document = ordered_json::parse(buffer.str(), nullptr, false);
  if (document.is_discarded() || !document.is_object()) {
    throw ValidationError("not a JSON report: " + path.string());
  }
  EvalReport report;
  report.kind = document.value("kind", "");
  if (document.contains("metadata") && document["metadata"].is_object()) {
    for (const auto& [key, value] : document["metadata"].items()) {
      report.metadata.emplace_back(key, value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  if (!document.contains("columns") || !document["columns"].is_array()) {
    throw ValidationError("report has no columns: " + path.string());
  }
  for (const auto& column : document["columns"]) {
    report.columns.push_back(column.get<std::string>());
  }
  if (!document.contains("rows") || !document["rows"].is_array()) {
    throw ValidationError("report has no rows: " + path.string());
  }
  for (const auto& entry : document["rows"]) {
    EvalReport::Row row;
    row.language = entry.value("language", "");
    for (const auto& column : report.columns) {
      if (!entry.contains(column) || !entry[column].is_number()) {
        throw ValidationError("report row for " + row.language + " lacks column " + column);
      }
      row.values.push_back(entry[column].get<double>());
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace polyboost
