#pragma once

#include <map>
#include <string>
#include <vector>

#include "nhp/config.hpp"
#include "nhp/oracle.hpp"
#include "nhp/params.hpp"
#include "nhp/report.hpp"

namespace nhp {

// ---------------------------------------------------------------------------
// Grid runner

struct CellResult {
  std::string label;
  std::vector<ReportRecord> records;
  /// Reason codes for parts of the cell that were skipped ("cap-exceeded", ...).
  std::vector<std::string> skipped;
};

/// Records for one cell: formula counts, oracle and information metrics when the support is
/// enumerable under `cfg.cap`, and paired ow/rel games for every selected solver.
CellResult run_grid_cell(const GridCell& cell, const GridConfig& cfg);

struct GridResult {
  std::vector<ReportRecord> records;  // ordered by cell label
  std::size_t partial_cells = 0;
};

/// Runs cells on up to `cfg.workers` threads. The output does not depend on the worker count.
GridResult run_grid(const GridConfig& cfg);

/// Oracle and information records for an existing fiber table.
std::vector<ReportRecord> table_records(const FiberTable& table, const std::string& label);

// ---------------------------------------------------------------------------
// Attack checklist

enum class ItemStatus { pass, fail, info, not_applicable, delegated };
const char* item_status_name(ItemStatus s);

struct ChecklistItem {
  std::string id;  // roman numeral
  std::string title;
  ItemStatus status = ItemStatus::info;
  std::string reason;
  std::map<std::string, std::string> details;
};

struct ChecklistOptions {
  EnumerationGuard guard;
  std::size_t distinguisher_keys = 256;
  std::size_t diagnostic_samples = 512;
  std::size_t collision_samples = 2000;
  std::size_t local_search_instances = 4;
  std::uint64_t local_search_budget = 2000;
  std::uint64_t dp_budget = 1ULL << 24;
  std::uint64_t mitm_budget = 1ULL << 22;
};

struct ChecklistReport {
  std::vector<ChecklistItem> items;
  /// "reject: <reason>" for the first failing item, else "survives implemented filters".
  std::string verdict;
};

/// Items i through xv in order. Each item isolates its own errors; randomness comes from
/// children of RandomSource(P.seed, "checklist").
ChecklistReport run_checklist(const ParameterSet& p, const ChecklistOptions& opts = {});

std::string format_checklist(const ChecklistReport& report);
std::vector<ReportRecord> checklist_records(const ChecklistReport& report, const std::string& label);

}  // namespace nhp
