#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nhp/bigcount.hpp"
#include "nhp/family.hpp"
#include "nhp/observables.hpp"
#include "nhp/params.hpp"
#include "nhp/random.hpp"

namespace nhp {

inline constexpr int kConfigVersion = 1;

/// Parses a parameter-set document (YAML). Errors carry the offending line.
/// `default_seed` is used when the document has no `seed` key.
ParameterSet parse_params(std::string_view text, const std::optional<Seed>& default_seed = {});
/// Emits a parameter-set document. Families are written with explicit coefficients so the
/// output is self-contained; parse_params(dump_params(P)) reproduces P exactly.
std::string dump_params(const ParameterSet& p);

ParameterSet load_params(const std::filesystem::path& path);
void save_params(const ParameterSet& p, const std::filesystem::path& path);

/// Family description only (the `family:` block), for a given geometry.
ObservableFamily parse_family(std::string_view text, const PathDims& dims, const Seed& seed);
std::string dump_family(const ObservableFamily& f);

struct GridCell {
  std::string label;
  ParameterSet params;
};

struct GridConfig {
  int version = kConfigVersion;
  Seed seed{};
  std::string output_dir = "out";
  unsigned workers = 1;
  std::size_t trials = 100;
  std::vector<std::string> solvers;
  BigCount cap = BigCount(1) << 24;
  std::vector<GridCell> cells;
};

/// Cells without their own seed get one derived from the global seed and their label.
GridConfig parse_grid(std::string_view text);
GridConfig load_grid(const std::filesystem::path& path);

/// BLAKE2b-256 keyed by `root` over `label`. Grid cells use the label "cell/<name>".
Seed derive_seed(const Seed& root, std::string_view label);

/// Self-contained solver instance: full parameters with explicit coefficients, plus Y.
std::string dump_constraint_instance(const ParameterSet& p, const PublicObservable& y);
/// Throws ConfigError on schema problems, ParseError when Y does not match the family.
std::pair<ParameterSet, PublicObservable> parse_constraint_instance(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace nhp
