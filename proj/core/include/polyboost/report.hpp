#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "polyboost/blend.hpp"
#include "polyboost/judge.hpp"

namespace polyboost {

/// Relative score change in percent: 100 * (boosted - original) / original.
/// Throws ValidationError when original is not positive.
double improvement(double original, double boosted);

/// Rounds to one decimal place, the precision improvement rows report at.
double round_one_decimal(double value);

enum class ReportFormat { Json, Csv, TextTable };

ReportFormat report_format_from_string(std::string_view name);

/// A per-language results table plus run provenance. Rows hold one value per
/// column; languages stay in registry order with an optional overall row
/// ("ALL") last.
struct EvalReport {
  std::string kind;  // "judge", "blend", or "improvement"
  std::vector<std::pair<std::string, std::string>> metadata;  // ordered key/value
  std::vector<std::string> columns;
  struct Row {
    std::string language;
    std::vector<double> values;
  };
  std::vector<Row> rows;
};

struct CacheUsage {
  std::size_t hits = 0;
  std::size_t misses = 0;
};

/// Win/lose/tie counts and the derived metrics per language, with an ALL row.
EvalReport judge_report(const PairwiseEvaluation& evaluation, const std::string& candidate,
                        const std::string& baseline, const std::string& judge_model,
                        const CacheUsage& cache);

/// Accuracy per language, with an ALL row.
EvalReport blend_report(const BlendScores& scores, const std::string& model,
                        const std::string& judge_model, const CacheUsage& cache);

/// Improvement rows for every language carrying an accuracy value in both
/// reports. Values are the operands plus the change rounded to one decimal.
EvalReport improvement_report(const EvalReport& original, const EvalReport& boosted);

/// Serializes a report deterministically. JSON is the canonical machine
/// format; CSV carries the same numeric representations; the text table is
/// for terminals. Returns the path written.
std::filesystem::path emit_report(const EvalReport& report, ReportFormat format,
                                  const std::filesystem::path& path);

/// Renders the text-table form (what emit_report writes for TextTable).
std::string format_text_table(const EvalReport& report);

/// Reads back a canonical JSON report.
EvalReport load_report(const std::filesystem::path& path);

}  // namespace polyboost
