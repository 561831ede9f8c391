#include "nhp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include "nhp/attacks.hpp"
#include "nhp/errors.hpp"
#include "nhp/games.hpp"
#include "nhp/infometrics.hpp"
#include "nhp/pathgen.hpp"

namespace nhp {

namespace {

std::string num(double v) { return format_number(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string flag(bool v) { return v ? "true" : "false"; }

ReportRecord measured(const std::string& label, const std::string& module, const std::string& solver,
                      const std::string& metric, double value, const Interval& ci) {
  auto r = make_record(label, module, solver, metric, num(value), "measured");
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  return r;
}

void game_records(std::vector<ReportRecord>& out, const std::string& label, const GameTranscript& ow,
                  const GameTranscript& rel) {
  const std::string& s = ow.adversary;
  const std::size_t n = ow.trials;
  std::size_t fiber_hits = 0;
  double coarse = 0.0, macro = 0.0, dx = 0.0;
  for (const auto& sc : ow.scores) {
    fiber_hits += sc.fiber_success;
    coarse += sc.coarse_score;
    macro += sc.macro_agreement;
    dx += static_cast<double>(sc.d_x);
  }
  const double outputs = static_cast<double>(ow.scores.size());
  out.push_back(make_record(label, "games", s, "trials", num(std::uint64_t{n}), "measured"));
  out.push_back(make_record(label, "games", s, "outputs", num(std::uint64_t{ow.scores.size()}), "measured"));
  out.push_back(
      make_record(label, "games", s, "adversary_errors", num(std::uint64_t{ow.adversary_errors}), "measured"));
  // Means over admissible outputs only; a missing output has no distance.
  out.push_back(make_record(label, "games", s, "coarse_score_mean", outputs ? num(coarse / outputs) : "n/a",
                            "measured"));
  out.push_back(make_record(label, "games", s, "macro_agreement_mean", outputs ? num(macro / outputs) : "n/a",
                            "measured"));
  out.push_back(
      make_record(label, "games", s, "distance_dX_mean", outputs ? num(dx / outputs) : "n/a", "measured"));
  out.push_back(measured(label, "games", s, "exact_success_rate", ow.advantage, {ow.ci_low, ow.ci_high}));
  out.push_back(measured(label, "games", s, "fiber_success_rate",
                         static_cast<double>(fiber_hits) / static_cast<double>(n),
                         wilson_interval(fiber_hits, n)));
  out.push_back(measured(label, "games", s, "ow_advantage", ow.advantage, {ow.ci_low, ow.ci_high}));
  out.push_back(measured(label, "games", s, "rel_advantage", rel.advantage, {rel.ci_low, rel.ci_high}));
}

}  // namespace

std::vector<ReportRecord> table_records(const FiberTable& table, const std::string& label) {
  std::vector<ReportRecord> out;
  const auto id = identifiability_report(table);
  const auto ps = posterior_stats(table);
  auto add = [&](const char* module, const char* metric, std::string v) {
    out.push_back(make_record(label, module, "", metric, std::move(v), "enumerated"));
  };
  add("oracle", "support_size", num(std::uint64_t{id.support_size}));
  add("oracle", "image_size", num(std::uint64_t{id.image_size}));
  add("oracle", "injective", flag(id.injective));
  add("oracle", "max_fiber", num(std::uint64_t{id.max_fiber}));
  add("oracle", "min_fiber", num(std::uint64_t{id.min_fiber}));
  add("oracle", "sum_sq_fiber", num(id.sum_sq_fiber));
  add("oracle", "avg_fiber_seen", num(id.avg_fiber_seen));
  add("infometrics", "conditional_entropy_bits", num(ps.conditional_entropy));
  add("infometrics", "p_guess", num(ps.p_guess));
  add("infometrics", "min_entropy_worst_bits", num(ps.min_entropy_worst));
  add("infometrics", "min_entropy_average_bits", num(ps.min_entropy_average));
  if (id.support_size >= 2) add("infometrics", "fano_bound", num(fano_bound(ps.conditional_entropy, id.support_size)));
  if (table.params().noise.enabled) {
    // Planted witnesses follow the generator, which weights noise by the discrete Gaussian.
    const auto prior = generator_prior(table);
    const double h = conditional_entropy(table, prior);
    add("infometrics", "conditional_entropy_generator_bits", num(h));
    add("infometrics", "p_guess_generator", num(guessing_probability(table, prior)));
    if (id.support_size >= 2) add("infometrics", "fano_bound_generator", num(fano_bound(h, id.support_size)));
  }
  // Security estimates always travel with their caveat.
  const auto sec = security_bits(ps.p_guess, std::uint64_t{table.family().ell()} * table.family().m());
  add("infometrics", "security_bits_classical", num(sec.classical_bits));
  add("infometrics", "security_bits_quantum", num(sec.quantum_bits));
  add("infometrics", "security_caveat", sec.caveat_text);
  return out;
}

CellResult run_grid_cell(const GridCell& cell, const GridConfig& cfg) {
  CellResult res;
  res.label = cell.label;
  auto& out = res.records;
  const ParameterSet& p = cell.params;
  const auto& f = p.require_family();

  out.push_back(make_record(cell.label, "params", "", "support_size", to_string(p.support_size()), "formula"));
  out.push_back(make_record(cell.label, "params", "", "log2_support", num(log2_big(p.support_size())), "formula"));
  out.push_back(make_record(cell.label, "params", "", "public_bits",
                            num(std::uint64_t{f.ell()} * f.m()), "formula"));

  std::shared_ptr<const FiberTable> table;
  try {
    table = std::make_shared<const FiberTable>(build_fiber_table(p, EnumerationGuard{cfg.cap}));
  } catch (const CapExceeded& e) {
    out.push_back(make_record(cell.label, "oracle", "", "skipped", "cap-exceeded", "formula"));
    out.push_back(make_record(cell.label, "oracle", "", "required_count", e.required_count, "formula"));
    res.skipped.push_back("oracle: cap-exceeded");
  }
  if (table) {
    auto recs = table_records(*table, cell.label);
    out.insert(out.end(), recs.begin(), recs.end());
  }

  if (cfg.trials == 0) return res;
  AdversaryContext ctx;
  ctx.table = table;
  for (const auto& solver : cfg.solvers) {
    std::string reason;
    try {
      const Adversary adv = make_adversary(solver, p, ctx);
      const auto [ow, rel] = run_paired_games(p, adv, cfg.trials, derive_seed(p.seed, "game/" + solver));
      game_records(out, cell.label, ow, rel);
      continue;
    } catch (const CapExceeded&) {
      reason = "cap-exceeded";
    } catch (const InvalidParameters& e) {
      reason = table || solver != "bayes-fiber" ? "unavailable" : "cap-exceeded";
      if (reason == "unavailable") reason += std::string(": ") + e.what();
    }
    out.push_back(make_record(cell.label, "games", solver, "skipped", reason, "measured"));
    res.skipped.push_back(solver + ": " + reason);
  }
  return res;
}

GridResult run_grid(const GridConfig& cfg) {
  std::vector<std::size_t> order(cfg.cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cfg.cells[a].label < cfg.cells[b].label; });

  std::vector<CellResult> results(order.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < order.size();) {
      const auto& cell = cfg.cells[order[k]];
      try {
        results[k] = run_grid_cell(cell, cfg);
      } catch (const std::exception& e) {
        results[k].label = cell.label;
        results[k].records.push_back(make_record(cell.label, "grid", "", "failed", e.what(), "measured"));
        results[k].skipped.push_back(std::string("failed: ") + e.what());
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(order.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  GridResult g;
  for (auto& r : results) {
    g.records.insert(g.records.end(), r.records.begin(), r.records.end());
    g.partial_cells += !r.skipped.empty();
  }
  return g;
}

// ---------------------------------------------------------------------------
// Checklist

const char* item_status_name(ItemStatus s) {
  switch (s) {
    case ItemStatus::pass: return "pass";
    case ItemStatus::fail: return "fail";
    case ItemStatus::info: return "info";
    case ItemStatus::not_applicable: return "not-applicable";
    case ItemStatus::delegated: return "delegated";
  }
  return "info";
}

namespace {

bool found_witness(Outcome o) { return o == Outcome::planted_recovered || o == Outcome::witness_found; }

ChecklistItem item(const char* id, const char* title) {
  ChecklistItem it;
  it.id = id;
  it.title = title;
  return it;
}

ChecklistItem delegated(const char* id, const char* title, const char* pointer) {
  auto it = item(id, title);
  it.status = ItemStatus::delegated;
  it.reason = pointer;
  return it;
}

}  // namespace

ChecklistReport run_checklist(const ParameterSet& p, const ChecklistOptions& opts) {
  ChecklistReport rep;
  const auto& f = p.require_family();
  const RandomSource base(p.seed, "checklist");
  std::unique_ptr<FiberTable> table;

  // Each item body runs under its own guard so one failure cannot stop the rest.
  auto run = [&](ChecklistItem it, auto&& body) {
    try {
      body(it);
    } catch (const CompositeModulus& e) {
      it.status = ItemStatus::not_applicable;
      it.reason = e.what();
    } catch (const NotApplicable& e) {
      it.status = ItemStatus::not_applicable;
      it.reason = e.what();
    } catch (const AliasError& e) {
      it.status = ItemStatus::not_applicable;
      it.reason = e.what();
    } catch (const BudgetExceeded& e) {
      it.status = ItemStatus::not_applicable;
      it.reason = e.what();
    } catch (const CapExceeded& e) {
      it.status = ItemStatus::not_applicable;
      it.reason = e.what();
    } catch (const std::exception& e) {
      it.status = ItemStatus::info;
      it.reason = std::string("item error: ") + e.what();
    }
    rep.items.push_back(std::move(it));
  };

  run(item("i", "exact enumeration and fiber sizes"), [&](ChecklistItem& it) {
    table = std::make_unique<FiberTable>(build_fiber_table(p, f, opts.guard));
    const auto id = identifiability_report(*table);
    it.status = ItemStatus::info;
    it.details["support_size"] = std::to_string(id.support_size);
    it.details["image_size"] = std::to_string(id.image_size);
    it.details["max_fiber"] = std::to_string(id.max_fiber);
    it.details["injective"] = flag(id.injective);
    it.details["conditional_entropy_bits"] = num(conditional_entropy(*table));
  });

  run(item("ii", "affine surrogate and linear collapse"), [&](ChecklistItem& it) {
    RandomSource rng = base.child("affine");
    const auto model = affine_surrogate_fit(f, p, 32, rng);
    it.details["exact_model"] = flag(model.exact);
    it.details["residual_probes"] = std::to_string(model.residual) + "/" + std::to_string(model.probes);
    if (!model.exact) {
      it.status = ItemStatus::pass;
      return;
    }
    RandomSource inst = base.child("affine/instance");
    const auto planted = sample_object(p, inst);
    const auto y = eval_observable(f, planted, p);
    const auto col = linear_collapse(model, f, p, y, planted, inst);
    it.details["collapse_outcome"] = outcome_name(col.outcome);
    for (const auto& [k, v] : col.details) it.details["collapse_" + k] = v;
    it.status = ItemStatus::fail;
    it.reason = "linear collapse";
  });

  rep.items.push_back(delegated("iii", "lattice reduction on approximate linear models",
                                "out of scope; item ii reports residuals of the affine fit"));
  rep.items.push_back(delegated("iv", "SAT, SMT and polynomial-system encodings",
                                "delegated to external solvers via the export command"));

  run(item("v", "dynamic programming decomposition"), [&](ChecklistItem& it) {
    if (!step_decomposition(f)) {
      it.status = ItemStatus::not_applicable;
      it.reason = "observable has no per-step decomposition";
      return;
    }
    RandomSource inst = base.child("dp/instance");
    const auto planted = sample_object(p, inst);
    const auto r = dp_collapse(f, p, eval_observable(f, planted, p), planted, opts.dp_budget);
    it.details = r.details;
    it.details["outcome"] = outcome_name(r.outcome);
    it.details["table_entries"] = std::to_string(r.work.table_entries);
    if (r.outcome == Outcome::not_applicable) {
      it.status = ItemStatus::not_applicable;
      it.reason = r.details.count("reason") ? r.details.at("reason") : "not applicable";
    } else if (found_witness(r.outcome)) {
      it.status = ItemStatus::fail;
      it.reason = "dp collapse";
    } else {
      it.status = ItemStatus::pass;
    }
  });

  run(item("vi", "meet in the middle splits"), [&](ChecklistItem& it) {
    if (p.T < 2) {
      it.status = ItemStatus::not_applicable;
      it.reason = "T < 2 leaves no split";
      return;
    }
    std::vector<std::size_t> splits;
    for (std::size_t t : {p.T / 4, p.T / 2, 3 * p.T / 4}) {
      t = std::clamp<std::size_t>(t, 1, p.T - 1);
      if (std::find(splits.begin(), splits.end(), t) == splits.end()) splits.push_back(t);
    }
    RandomSource inst = base.child("mitm/instance");
    const auto planted = sample_object(p, inst);
    const auto y = eval_observable(f, planted, p);
    bool any_ran = false;
    for (auto t : splits) {
      const std::string tag = "t" + std::to_string(t) + "_";
      try {
        RandomSource rng = base.child("mitm/" + std::to_string(t));
        MitmOptions mo;
        mo.budget = opts.mitm_budget;
        const auto r = mitm_split(f, p, t, y, planted, rng, mo).report;
        it.details[tag + "outcome"] = outcome_name(r.outcome);
        if (r.outcome != Outcome::not_applicable) any_ran = true;
        if (found_witness(r.outcome)) {
          it.status = ItemStatus::fail;
          it.reason = "meet in the middle";
        }
      } catch (const BudgetExceeded&) {
        it.details[tag + "outcome"] = "budget-exceeded";
      }
    }
    if (it.status != ItemStatus::fail) it.status = any_ran ? ItemStatus::pass : ItemStatus::not_applicable;
    if (it.status == ItemStatus::not_applicable) it.reason = "no split is separable within budget";
  });

  struct LsRun {
    double coarse;
    std::size_t d_x;
    bool exact, witness;
  };
  std::vector<LsRun> ls_runs;
  run(item("vii", "local search and rounding"), [&](ChecklistItem& it) {
    std::size_t witnesses = 0;
    for (std::size_t k = 0; k < opts.local_search_instances; ++k) {
      RandomSource inst = base.child("local/" + std::to_string(k));
      const auto planted = sample_object(p, inst);
      const auto y = eval_observable(f, planted, p);
      LocalSearchOptions lo;
      lo.budget = opts.local_search_budget;
      const auto r = local_search_round(f, p, y, planted, inst, lo);
      if (!r.candidate) continue;
      const auto sc = score_recovery(*r.candidate, planted, p);
      ls_runs.push_back({sc.coarse_score, sc.d_x, sc.exact_success, found_witness(r.outcome)});
      witnesses += found_witness(r.outcome);
    }
    it.details["instances"] = std::to_string(opts.local_search_instances);
    it.details["budget"] = std::to_string(opts.local_search_budget);
    it.details["witnesses_found"] = std::to_string(witnesses);
    if (witnesses > 0) {
      it.status = ItemStatus::fail;
      it.reason = "local search";
    } else {
      it.status = ItemStatus::pass;
    }
  });

  rep.items.push_back(delegated("viii", "trained predictors on generated paths",
                                "out of scope; item ix covers first-order statistics"));

  run(item("ix", "compression and entropy diagnostics"), [&](ChecklistItem& it) {
    RandomSource rng = base.child("diagnostics");
    std::vector<MicroObject> samples;
    for (std::size_t k = 0; k < opts.diagnostic_samples; ++k) samples.push_back(sample_object(p, rng));
    const auto d = generator_diagnostics(samples, p);
    it.details["macro_entropy_bits"] = num(d.macro_entropy);
    it.details["encoding_entropy_bits_per_byte"] = num(d.encoding_entropy_bits_per_byte);
    double worst = 0.0;
    for (double a : d.macro_index_autocorrelation) worst = std::max(worst, std::abs(a));
    it.details["max_macro_autocorrelation"] = num(worst);
    it.status = ItemStatus::pass;
    if (p.b() > 1 && d.macro_entropy < 0.9 * std::log2(static_cast<double>(p.b()))) {
      it.status = ItemStatus::fail;
      it.reason = "low macro entropy";
    } else if (worst > 0.1) {
      it.status = ItemStatus::fail;
      it.reason = "macro autocorrelation";
    }
  });

  run(item("x", "conditional collision sampling"), [&](ChecklistItem& it) {
    RandomSource rng = base.child("collisions");
    std::map<std::vector<std::uint8_t>, MicroObject> seen;
    std::size_t collisions = 0;
    for (std::size_t k = 0; k < opts.collision_samples; ++k) {
      auto x = sample_object(p, rng);
      auto key = serialize_public(eval_observable(f, x, p));
      auto [pos, fresh] = seen.emplace(std::move(key), x);
      if (!fresh && pos->second != x) ++collisions;
    }
    it.details["samples"] = std::to_string(opts.collision_samples);
    it.details["collisions"] = std::to_string(collisions);
    if (table) {
      const auto id = identifiability_report(*table);
      const double n = static_cast<double>(id.support_size);
      it.details["exact_collision_probability"] = num(static_cast<double>(id.sum_sq_fiber) / (n * n));
    }
    it.status = collisions ? ItemStatus::fail : ItemStatus::pass;
    if (collisions) it.reason = "witness collision";
  });

  run(item("xi", "approximate versus exact recovery"), [&](ChecklistItem& it) {
    it.status = ItemStatus::info;
    if (ls_runs.empty()) {
      it.reason = "no local search candidates";
      return;
    }
    double coarse = 0.0, dx = 0.0;
    std::size_t exact = 0, near = 0;
    for (const auto& r : ls_runs) {
      coarse += r.coarse;
      dx += static_cast<double>(r.d_x);
      exact += r.exact;
      near += !r.exact && r.coarse == 1.0;
    }
    const double k = static_cast<double>(ls_runs.size());
    it.details["mean_coarse_score"] = num(coarse / k);
    it.details["mean_distance_dX"] = num(dx / k);
    it.details["exact"] = std::to_string(exact);
    it.details["coarse_match_not_exact"] = std::to_string(near);
  });

  run(item("xii", "multi-instance distinguisher"), [&](ChecklistItem& it) {
    RandomSource rng = base.child("distinguisher");
    std::vector<PublicObservable> keys;
    for (std::size_t k = 0; k < opts.distinguisher_keys; ++k) {
      const auto x = sample_object(p, rng);
      keys.push_back(observe(f, x, p, rng));
    }
    const auto d = multi_instance_distinguisher(keys, reference_ranges(f));
    it.details["keys"] = std::to_string(keys.size());
    it.details["tests"] = std::to_string(d.tests);
    it.details["min_corrected_p"] = num(d.min_corrected_p);
    it.details["max_abs_correlation"] = num(d.max_abs_correlation);
    it.status = d.reject ? ItemStatus::fail : ItemStatus::pass;
    if (d.reject) it.reason = "multi-instance distinguisher";
  });

  rep.items.push_back(delegated("xiii", "symmetry, periodicity and hidden group actions",
                                "out of scope; no generic detector is implemented"));
  rep.items.push_back(delegated("xiv", "generic quantum cost",
                                "metrics reports security_bits with the exponent halved after structural reductions"));

  auto ledger = item("xv", "ledger of item outcomes");
  ledger.status = ItemStatus::info;
  for (const auto& it : rep.items) ledger.details[it.id] = item_status_name(it.status);
  rep.items.push_back(std::move(ledger));

  rep.verdict = "survives implemented filters";
  for (const auto& it : rep.items) {
    if (it.status == ItemStatus::fail) {
      rep.verdict = "reject: " + it.reason;
      break;
    }
  }
  return rep;
}

std::string format_checklist(const ChecklistReport& report) {
  std::ostringstream os;
  for (const auto& it : report.items) {
    os << "(" << it.id << ") " << it.title << ": " << item_status_name(it.status);
    if (!it.reason.empty()) os << " [" << it.reason << "]";
    os << "\n";
    for (const auto& [k, v] : it.details) os << "    " << k << " = " << v << "\n";
  }
  os << "verdict: " << report.verdict << "\n";
  return os.str();
}

std::vector<ReportRecord> checklist_records(const ChecklistReport& report, const std::string& label) {
  std::vector<ReportRecord> out;
  for (const auto& it : report.items) {
    const std::string solver = "item-" + it.id;
    out.push_back(make_record(label, "checklist", solver, "status", item_status_name(it.status), "measured"));
    if (!it.reason.empty()) out.push_back(make_record(label, "checklist", solver, "reason", it.reason, "measured"));
    for (const auto& [k, v] : it.details) out.push_back(make_record(label, "checklist", solver, k, v, "measured"));
  }
  out.push_back(make_record(label, "checklist", "", "verdict", report.verdict, "measured"));
  return out;
}

}  // namespace nhp
