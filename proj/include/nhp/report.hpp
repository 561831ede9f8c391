#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nhp {

inline constexpr int kRecordSchema = 1;

/// One flat report row. Values are text so exact integers stay exact.
/// provenance is "formula", "enumerated" or "measured"; measured rates carry a 95% interval.
struct ReportRecord {
  std::string label;
  std::string module;
  std::string solver;
  std::string metric;
  std::string value;
  std::string provenance;
  std::optional<double> ci_low;
  std::optional<double> ci_high;

  friend bool operator==(const ReportRecord&, const ReportRecord&) = default;
};

std::string format_number(double v);

ReportRecord make_record(std::string label, std::string module, std::string solver, std::string metric,
                         std::string value, std::string provenance);

std::string record_to_json(const ReportRecord& r);
/// Throws ParseError on malformed input or a schema version other than kRecordSchema.
ReportRecord record_from_json(const std::string& line);

std::string records_to_jsonl(const std::vector<ReportRecord>& records);
std::vector<ReportRecord> records_from_jsonl(const std::string& text);
std::string records_to_csv(const std::vector<ReportRecord>& records);
/// Aligned text table, one row per record plus a header.
std::string records_to_table(const std::vector<ReportRecord>& records);

/// Writes <stem>.jsonl, <stem>.csv and <stem>.txt into `dir`.
void write_report_files(const std::vector<ReportRecord>& records, const std::filesystem::path& dir,
                        const std::string& stem);

}  // namespace nhp
