// nhp: command-line front end for the hidden-path workbench.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/algorithm/hex.hpp>
#include <json.hpp>

#include "nhp/attacks.hpp"
#include "nhp/config.hpp"
#include "nhp/encoding.hpp"
#include "nhp/errors.hpp"
#include "nhp/experiment.hpp"
#include "nhp/games.hpp"
#include "nhp/infometrics.hpp"
#include "nhp/oracle.hpp"
#include "nhp/pathgen.hpp"
#include "nhp/report.hpp"

namespace {

using namespace nhp;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

/// Options shared by most subcommands.
struct Common {
  std::string params;
  std::string seed_hex;
  std::string out;
  double cap_log2 = 24;
};

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  std::string s;
  boost::algorithm::hex_lower(bytes.begin(), bytes.end(), std::back_inserter(s));
  return s;
}

std::vector<std::uint8_t> from_hex(const std::string& s) {
  std::vector<std::uint8_t> out;
  try {
    boost::algorithm::unhex(s.begin(), s.end(), std::back_inserter(out));
  } catch (const std::exception&) {
    throw ParseError("malformed hex string");
  }
  return out;
}

ParameterSet load(const Common& c) {
  ParameterSet p = load_params(c.params);
  if (!c.seed_hex.empty()) p.seed = seed_from_hex(c.seed_hex);
  return p;
}

EnumerationGuard guard_of(const Common& c) {
  if (c.cap_log2 < 0 || c.cap_log2 > 62) throw InvalidParameters("--cap-log2 must be in [0, 62]");
  return EnumerationGuard{BigCount(1) << static_cast<unsigned>(c.cap_log2)};
}

/// Writes to `path`, or stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<std::uint8_t> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

MicroObject read_witness(const std::string& path, std::size_t index, const ParameterSet& p) {
  std::istringstream in(read_text_file(path));
  std::string line;
  for (std::size_t i = 0; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (i++ == index) return decode_object(from_hex(line), p);
  }
  throw ParseError("witness file has no entry " + std::to_string(index));
}

void print_report(const AttackReport& r, const ParameterSet& p) {
  std::cout << "method: " << r.method << "\n"
            << "outcome: " << outcome_name(r.outcome) << "\n"
            << "evaluations: " << r.work.evaluations << "\n"
            << "table_entries: " << r.work.table_entries << "\n"
            << "wall_seconds: " << format_number(r.wall_seconds) << "\n";
  for (const auto& [k, v] : r.details) std::cout << k << ": " << v << "\n";
  if (r.candidate) std::cout << "candidate: " << to_hex(encode_object(*r.candidate, p)) << "\n";
}

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("-p,--params", c.params, "parameter-set YAML file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed_hex, "override the parameter seed (64 hex digits)");
  if (with_out) cmd->add_option("-o,--out", c.out, "output path (default stdout)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hidden-path recovery workbench"};
  app.require_subcommand(1);
  Common c;
  int exit_code = kExitOk;

  // gen
  auto* gen = app.add_subcommand("gen", "sample hidden objects; one hex encoding per line");
  add_common(gen, c);
  std::size_t gen_count = 1;
  bool gen_diag = false;
  double gen_min_entropy = 0.0;
  gen->add_option("-n,--count", gen_count, "number of objects")->check(CLI::PositiveNumber);
  gen->add_flag("--diagnostics", gen_diag, "print generator diagnostics to stderr");
  gen->add_option("--min-macro-entropy", gen_min_entropy, "rejection threshold in bits per symbol");
  gen->callback([&] {
    const auto p = load(c);
    RandomSource rng(p.seed, "gen");
    const RejectionPolicy policy{gen_min_entropy, 1000};
    std::vector<MicroObject> xs;
    std::string text = "# encoding_version " + std::to_string(p.encoding_version) + "\n";
    for (std::size_t i = 0; i < gen_count; ++i) {
      std::optional<MicroObject> x = gen_min_entropy > 0 ? sample_object_rejecting(p, rng, policy)
                                                         : std::optional(sample_object(p, rng));
      if (!x) throw InvalidParameters("rejection sampling exhausted: " + policy.describe());
      text += to_hex(encode_object(*x, p)) + "\n";
      xs.push_back(std::move(*x));
    }
    emit(c.out, text);
    if (gen_diag) {
      const auto d = generator_diagnostics(xs, p);
      std::cerr << "samples: " << d.samples << "\n"
                << "macro_entropy_bits: " << format_number(d.macro_entropy) << "\n"
                << "micro_entropy_bits: " << format_number(d.micro_entropy) << "\n"
                << "encoding_entropy_bits_per_byte: " << format_number(d.encoding_entropy_bits_per_byte)
                << "\n";
      for (std::size_t l = 0; l < d.macro_index_autocorrelation.size(); ++l) {
        std::cerr << "macro_autocorrelation_lag" << l + 1 << ": "
                  << format_number(d.macro_index_autocorrelation[l]) << "\n";
      }
    }
  });

  // observe
  auto* obs = app.add_subcommand("observe", "evaluate the public observable of a witness");
  add_common(obs, c);
  std::string obs_witness;
  std::size_t obs_index = 0;
  bool obs_hex = false;
  obs->add_option("-w,--witness", obs_witness, "witness file from gen")->required()->check(CLI::ExistingFile);
  obs->add_option("--index", obs_index, "entry of the witness file");
  obs->add_flag("--hex", obs_hex, "print the public key as hex instead of writing binary");
  obs->callback([&] {
    const auto p = load(c);
    const auto x = read_witness(obs_witness, obs_index, p);
    RandomSource rng(p.seed, "observe");
    const auto bytes = serialize_public(observe(p.require_family(), x, p, rng));
    if (obs_hex || c.out.empty()) {
      std::cout << to_hex(bytes) << "\n";
    } else {
      write_text_file(c.out, std::string(bytes.begin(), bytes.end()));
    }
  });

  // enumerate
  auto* en = app.add_subcommand("enumerate", "exact fibers over the whole support");
  add_common(en, c);
  unsigned en_workers = 1;
  en->add_option("--cap-log2", c.cap_log2, "enumeration cap as a power of two");
  en->add_option("-j,--workers", en_workers, "evaluation threads")->check(CLI::PositiveNumber);
  en->callback([&] {
    const auto p = load(c);
    const auto table = build_fiber_table(p, guard_of(c), en_workers);
    std::string text;
    for (const auto& fb : table.fibers()) {
      nlohmann::ordered_json j;
      j["schema"] = kRecordSchema;
      j["y"] = to_hex(fb.key);
      j["size"] = fb.members.size();
      j["members"] = fb.members;
      text += j.dump() + "\n";
    }
    emit(c.out, text);
    const auto id = identifiability_report(table);
    std::cerr << "support_size: " << id.support_size << "\nimage_size: " << id.image_size
              << "\ninjective: " << (id.injective ? "true" : "false") << "\nmax_fiber: " << id.max_fiber
              << "\nmin_fiber: " << id.min_fiber << "\navg_fiber_seen: " << format_number(id.avg_fiber_seen)
              << "\n";
  });

  // metrics
  auto* met = app.add_subcommand("metrics", "oracle and information metrics");
  add_common(met, c);
  std::string met_label = "cell";
  met->add_option("--cap-log2", c.cap_log2, "enumeration cap as a power of two");
  met->add_option("--label", met_label, "record label");
  met->callback([&] {
    const auto p = load(c);
    std::vector<ReportRecord> recs;
    recs.push_back(make_record(met_label, "params", "", "support_size", to_string(p.support_size()), "formula"));
    recs.push_back(
        make_record(met_label, "params", "", "log2_support", format_number(log2_big(p.support_size())), "formula"));
    try {
      const auto table = build_fiber_table(p, guard_of(c));
      auto more = table_records(table, met_label);
      recs.insert(recs.end(), more.begin(), more.end());
    } catch (const CapExceeded& e) {
      recs.push_back(make_record(met_label, "oracle", "", "skipped", "cap-exceeded", "formula"));
      recs.push_back(make_record(met_label, "oracle", "", "required_count", e.required_count, "formula"));
      exit_code = kExitPartial;
    }
    if (c.out.empty()) {
      std::cout << records_to_table(recs);
    } else {
      write_report_files(recs, c.out, "metrics");
    }
  });

  // attack
  auto* att = app.add_subcommand("attack", "run one structural attack against a public key");
  add_common(att, c, false);
  std::string att_method, att_public, att_witness;
  std::size_t att_split = 0;
  std::uint64_t att_budget = 20000;
  att->add_option("-m,--method", att_method, "linear, dp, mitm, local or bayes")
      ->required()
      ->check(CLI::IsMember({"linear", "dp", "mitm", "local", "bayes"}));
  att->add_option("-y,--public", att_public, "public key file from observe")->check(CLI::ExistingFile);
  att->add_option("-w,--witness", att_witness, "planted witness file (for scoring only)")
      ->check(CLI::ExistingFile);
  att->add_option("--split", att_split, "mitm split index (default T/2)");
  att->add_option("--budget", att_budget, "local search evaluation budget");
  att->add_option("--cap-log2", c.cap_log2, "enumeration cap for bayes");
  att->callback([&] {
    const auto p = load(c);
    const auto& f = p.require_family();
    std::optional<MicroObject> planted;
    if (!att_witness.empty()) planted = read_witness(att_witness, 0, p);
    PublicObservable y;
    if (!att_public.empty()) {
      y = parse_public(read_binary(att_public));
    } else if (planted) {
      y = eval_observable(f, *planted, p);
    } else {
      throw InvalidParameters("attack needs --public or --witness");
    }
    RandomSource rng(p.seed, "attack/" + att_method);
    AttackReport r;
    if (att_method == "linear") {
      const auto model = affine_surrogate_fit(f, p, 32, rng);
      if (model.exact) {
        r = linear_collapse(model, f, p, y, planted, rng);
      } else {
        r.method = "linear-collapse";
        r.outcome = Outcome::not_applicable;
        r.work.evaluations = model.evaluations;
        r.details["reason"] = "affine fit is not exact";
        r.details["residual"] = std::to_string(model.residual) + "/" + std::to_string(model.probes);
      }
    } else if (att_method == "dp") {
      r = dp_collapse(f, p, y, planted);
    } else if (att_method == "mitm") {
      r = mitm_split(f, p, att_split ? att_split : p.T / 2, y, planted, rng).report;
    } else if (att_method == "local") {
      LocalSearchOptions lo;
      lo.budget = att_budget;
      r = local_search_round(f, p, y, planted, rng, lo);
    } else {
      const auto table = build_fiber_table(p, guard_of(c));
      r = bayes_fiber_guess(y, table, planted, rng);
    }
    print_report(r, p);
  });

  // game
  auto* gm = app.add_subcommand("game", "paired ow/rel recovery games");
  add_common(gm, c);
  std::string gm_adv = "random-guess";
  std::size_t gm_trials = 1000;
  std::string gm_label = "cell";
  gm->add_option("-a,--adversary", gm_adv, "adversary name")->check(CLI::IsMember(adversary_names()));
  gm->add_option("-t,--trials", gm_trials, "trials")->check(CLI::PositiveNumber);
  gm->add_option("--label", gm_label, "record label");
  gm->add_option("--cap-log2", c.cap_log2, "enumeration cap for bayes-fiber");
  gm->callback([&] {
    const auto p = load(c);
    GridConfig cfg;
    cfg.cap = guard_of(c).cap;
    cfg.trials = gm_trials;
    cfg.solvers = {gm_adv};
    auto cell = run_grid_cell(GridCell{gm_label, p}, cfg);
    std::vector<ReportRecord> recs;
    for (auto& r : cell.records) {
      if (r.module == "games") recs.push_back(std::move(r));
    }
    if (!cell.skipped.empty() && recs.size() <= 1) exit_code = kExitPartial;
    if (c.out.empty()) {
      std::cout << records_to_table(recs);
    } else {
      write_report_files(recs, c.out, "game");
    }
  });

  // grid
  auto* gr = app.add_subcommand("grid", "run a parameter grid");
  std::string gr_config, gr_out;
  unsigned gr_workers = 0;
  gr->add_option("-c,--config", gr_config, "grid YAML file")->required()->check(CLI::ExistingFile);
  gr->add_option("-o,--out", gr_out, "output directory (overrides the config)");
  gr->add_option("-j,--workers", gr_workers, "worker threads (overrides the config)");
  gr->callback([&] {
    auto cfg = load_grid(gr_config);
    const auto known = adversary_names();
    for (const auto& s : cfg.solvers) {
      if (std::find(known.begin(), known.end(), s) == known.end()) {
        throw ConfigError("unknown solver '" + s + "'", 0);
      }
    }
    if (gr_workers) cfg.workers = gr_workers;
    if (!gr_out.empty()) cfg.output_dir = gr_out;
    const auto g = run_grid(cfg);
    write_report_files(g.records, cfg.output_dir, "grid");
    std::cerr << "cells: " << cfg.cells.size() << ", partial: " << g.partial_cells
              << ", records: " << g.records.size() << "\n";
    if (g.partial_cells) exit_code = kExitPartial;
  });

  // checklist
  auto* ck = app.add_subcommand("checklist", "run the attack checklist on one parameter set");
  add_common(ck, c);
  std::string ck_label = "cell";
  ck->add_option("--cap-log2", c.cap_log2, "enumeration cap as a power of two");
  ck->add_option("--label", ck_label, "record label");
  ck->callback([&] {
    const auto p = load(c);
    ChecklistOptions opts;
    opts.guard = guard_of(c);
    const auto rep = run_checklist(p, opts);
    std::cout << format_checklist(rep);
    if (!c.out.empty()) write_report_files(checklist_records(rep, ck_label), c.out, "checklist");
  });

  // report
  auto* rp = app.add_subcommand("report", "convert a record stream to CSV, JSON Lines and a text table");
  std::vector<std::string> rp_inputs;
  std::string rp_out, rp_stem = "report";
  rp->add_option("inputs", rp_inputs, "JSON Lines record files")->required()->check(CLI::ExistingFile);
  rp->add_option("-o,--out", rp_out, "output directory (default: table on stdout)");
  rp->add_option("--stem", rp_stem, "output file stem");
  rp->callback([&] {
    std::vector<ReportRecord> recs;
    for (const auto& in : rp_inputs) {
      auto more = records_from_jsonl(read_text_file(in));
      recs.insert(recs.end(), more.begin(), more.end());
    }
    if (rp_out.empty()) {
      std::cout << records_to_table(recs);
    } else {
      write_report_files(recs, rp_out, rp_stem);
    }
  });

  // export
  auto* ex = app.add_subcommand("export", "write a self-contained constraint instance for external solvers");
  add_common(ex, c);
  std::string ex_witness;
  ex->add_option("-w,--witness", ex_witness, "witness file (default: sample one)")->check(CLI::ExistingFile);
  ex->callback([&] {
    const auto p = load(c);
    MicroObject x;
    if (!ex_witness.empty()) {
      x = read_witness(ex_witness, 0, p);
    } else {
      RandomSource rng(p.seed, "export");
      x = sample_object(p, rng);
    }
    emit(c.out, dump_constraint_instance(p, eval_observable(p.require_family(), x, p)));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidParameters& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapExceeded& e) {
    std::cerr << "enumeration refused: " << e.what() << " (required " << e.required_count << ")\n";
    return kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return exit_code;
}
