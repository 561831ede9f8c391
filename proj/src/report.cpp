#include "nhp/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "nhp/config.hpp"
#include "nhp/errors.hpp"

namespace nhp {

namespace {

constexpr const char* kColumns[] = {"schema", "label",      "module", "solver", "metric",
                                    "value",  "provenance", "ci_low", "ci_high"};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> row_of(const ReportRecord& r) {
  return {std::to_string(kRecordSchema), r.label,       r.module,
          r.solver,                      r.metric,      r.value,
          r.provenance,                  r.ci_low ? format_number(*r.ci_low) : "",
          r.ci_high ? format_number(*r.ci_high) : ""};
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no negative zero in reports
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

ReportRecord make_record(std::string label, std::string module, std::string solver, std::string metric,
                         std::string value, std::string provenance) {
  return ReportRecord{std::move(label), std::move(module),     std::move(solver), std::move(metric),
                      std::move(value), std::move(provenance), std::nullopt,      std::nullopt};
}

std::string record_to_json(const ReportRecord& r) {
  nlohmann::ordered_json j;
  j["schema"] = kRecordSchema;
  j["label"] = r.label;
  j["module"] = r.module;
  j["solver"] = r.solver;
  j["metric"] = r.metric;
  j["value"] = r.value;
  j["provenance"] = r.provenance;
  j["ci_low"] = r.ci_low ? nlohmann::ordered_json(*r.ci_low) : nlohmann::ordered_json(nullptr);
  j["ci_high"] = r.ci_high ? nlohmann::ordered_json(*r.ci_high) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

ReportRecord record_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("record is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema") || j["schema"] != kRecordSchema) {
    throw ParseError("record schema mismatch");
  }
  try {
    ReportRecord r;
    r.label = j.at("label").get<std::string>();
    r.module = j.at("module").get<std::string>();
    r.solver = j.at("solver").get<std::string>();
    r.metric = j.at("metric").get<std::string>();
    r.value = j.at("value").get<std::string>();
    r.provenance = j.at("provenance").get<std::string>();
    if (j.contains("ci_low") && !j["ci_low"].is_null()) r.ci_low = j["ci_low"].get<double>();
    if (j.contains("ci_high") && !j["ci_high"].is_null()) r.ci_high = j["ci_high"].get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("record field error: ") + e.what());
  }
}

std::string records_to_jsonl(const std::vector<ReportRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r) + "\n";
  return out;
}

std::vector<ReportRecord> records_from_jsonl(const std::string& text) {
  std::vector<ReportRecord> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(record_from_json(line));
  }
  return out;
}

std::string records_to_csv(const std::vector<ReportRecord>& records) {
  std::string out;
  for (std::size_t c = 0; c < std::size(kColumns); ++c) out += (c ? "," : "") + std::string(kColumns[c]);
  out += "\n";
  for (const auto& r : records) {
    const auto row = row_of(r);
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_escape(row[c]);
    out += "\n";
  }
  return out;
}

std::string records_to_table(const std::vector<ReportRecord>& records) {
  // The schema column is implied by the file; the table shows the rest.
  std::vector<std::vector<std::string>> rows;
  rows.emplace_back(std::begin(kColumns) + 1, std::end(kColumns));
  for (const auto& r : records) {
    auto row = row_of(r);
    rows.emplace_back(row.begin() + 1, row.end());
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

void write_report_files(const std::vector<ReportRecord>& records, const std::filesystem::path& dir,
                        const std::string& stem) {
  write_text_file(dir / (stem + ".jsonl"), records_to_jsonl(records));
  write_text_file(dir / (stem + ".csv"), records_to_csv(records));
  write_text_file(dir / (stem + ".txt"), records_to_table(records));
}

}  // namespace nhp
