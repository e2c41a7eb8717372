#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "greysvr/pipeline.hpp"

namespace greysvr {

inline constexpr const char* kReportSchemaId = "greysvr-report/1";

/// The report schema shipped in docs/report.schema.json.
const nlohmann::json& report_schema();

/// Checks `doc` against a JSON Schema (the subset the report schema uses:
/// type, const, enum, required, properties, additionalProperties, items,
/// minimum, maximum, exclusiveMinimum, oneOf and local $ref). Returns one
/// message per violation, each prefixed with its JSON pointer.
std::vector<std::string> schema_violations(const nlohmann::json& doc, const nlohmann::json& schema);

nlohmann::json to_json(const ScreeningReport& report);
nlohmann::json to_json(const ComparisonSummary& summary);
nlohmann::json to_json(const RunReport& report);

/// Serialized report: sorted keys, two-space indent, trailing newline.
/// Throws std::logic_error if the document does not match the schema.
std::string report_text(const RunReport& report);

/// One line per (stock, model): id, model, mse, mae, ds, scc, C, epsilon, gamma.
std::string evaluations_tsv(const RunReport& report);

/// Writes report.json and evaluations.tsv into `out_dir`. Returns the paths.
std::vector<std::filesystem::path> write_report(const RunReport& report, const std::filesystem::path& out_dir);

/// Plot inputs: series_<id>.tsv per fitted stock (date, observed, one column
/// per model), wins.tsv (per-metric win counts) and weights.tsv (one row per
/// stock, one column per factor). Returns the paths written.
std::vector<std::filesystem::path> emit_plot_data(const RunReport& report, const std::filesystem::path& out_dir);

}  // namespace greysvr
