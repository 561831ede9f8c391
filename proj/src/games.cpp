#include "nhp/games.hpp"

#include <algorithm>
#include <cmath>

#include "nhp/encoding.hpp"
#include "nhp/noise.hpp"
#include "nhp/pathgen.hpp"

namespace nhp {

namespace {

// Smallest macro index d with u - D_d - e a noise residue for some e in E. A function of the
// increment alone, so equal state paths give equal coarse descriptors.
std::size_t canonical_macro(const StateVector& u, const ParameterSet& p) {
  const auto& q = p.modulus;
  const std::int64_t bound = p.noise.enabled ? p.noise.bound : 0;
  for (std::size_t d = 0; d < p.macro_alphabet.size(); ++d) {
    const auto rest = sub(u, p.macro_alphabet[d], q);
    for (const auto& e : p.micro_alphabet) {
      const auto z = sub(rest, e, q);
      bool ok = true;
      for (std::size_t k = 0; k < z.size() && ok; ++k) ok = canonical_lift(z[k], bound, q).has_value();
      if (ok) return d;
    }
  }
  return p.macro_alphabet.size();
}

}  // namespace

RecoveryScore score_recovery(const MicroObject& candidate, const MicroObject& planted,
                             const ParameterSet& p, std::size_t radius) {
  check_admissible(candidate, p);
  check_admissible(planted, p);
  RecoveryScore s;
  const auto ga = iterate_path(candidate, p);
  const auto gb = iterate_path(planted, p);
  std::size_t agree = 0, coarse = 0;
  for (std::size_t i = 0; i < p.T; ++i) {
    agree += candidate.macro_idx[i] == planted.macro_idx[i];
    coarse += canonical_macro(sub(ga[i + 1], ga[i], p.modulus), p) ==
              canonical_macro(sub(gb[i + 1], gb[i], p.modulus), p);
  }
  const double steps = static_cast<double>(p.T);
  s.macro_agreement = static_cast<double>(agree) / steps;
  s.coarse_score = static_cast<double>(coarse) / steps;
  s.d_state = state_path_distance(ga, gb);
  s.d_x = object_distance(candidate, planted, p);
  s.state_success = ga == gb;
  s.exact_success = encode_object(candidate, p) == encode_object(planted, p);
  const auto& f = p.require_family();
  s.fiber_success = eval_observable(f, candidate, p) == eval_observable(f, planted, p);
  s.radius = radius;
  s.within_radius = s.d_x <= radius;
  return s;
}

// ---------------------------------------------------------------------------
// Adversaries

std::vector<std::string> adversary_names() {
  return {"random-guess", "bayes-fiber", "local-search", "linear-collapse",
          "dp",           "mitm",        "empty-output", "verification-only"};
}

Adversary make_adversary(const std::string& name, const ParameterSet& p, const AdversaryContext& ctx) {
  if (name == "random-guess") {
    // Uniform over the support when it can be indexed, otherwise the generator itself.
    std::shared_ptr<const SupportEnumerator> en;
    try {
      en = std::make_shared<const SupportEnumerator>(p);
    } catch (const CapExceeded&) {
    }
    return {name, [en](const ParameterSet& pp, const PublicObservable&, RandomSource& rng) {
              if (en) return std::optional<MicroObject>(en->at(rng.uniform_below(en->size())));
              return std::optional<MicroObject>(sample_object(pp, rng));
            }};
  }
  if (name == "bayes-fiber") {
    if (!ctx.table) throw InvalidParameters("bayes-fiber needs a fiber table");
    auto table = ctx.table;
    return {name, [table](const ParameterSet&, const PublicObservable& y, RandomSource& rng)
                      -> std::optional<MicroObject> {
              const Fiber* fb = table->find(y);
              if (fb == nullptr) return std::nullopt;
              return table->object(fb->members[rng.uniform_below(fb->members.size())]);
            }};
  }
  if (name == "local-search") {
    const LocalSearchOptions opts{ctx.local_search_budget, ctx.local_search_restarts, std::nullopt};
    return {name, [opts](const ParameterSet& pp, const PublicObservable& y, RandomSource& rng) {
              auto rep = local_search_round(pp.require_family(), pp, y, std::nullopt, rng, opts);
              return rep.candidate;
            }};
  }
  if (name == "linear-collapse") {
    // The model depends only on public data, so it is fitted once.
    auto model = std::make_shared<std::optional<AffineModel>>();
    return {name, [model](const ParameterSet& pp, const PublicObservable& y, RandomSource& rng)
                      -> std::optional<MicroObject> {
              const auto& f = pp.require_family();
              if (!*model) {
                RandomSource fit_rng(pp.seed, "affine-fit");
                *model = affine_surrogate_fit(f, pp, 32, fit_rng);
              }
              if (!(*model)->exact) return std::nullopt;
              return linear_collapse(**model, f, pp, y, std::nullopt, rng).candidate;
            }};
  }
  if (name == "dp") {
    return {name, [](const ParameterSet& pp, const PublicObservable& y, RandomSource&) {
              return dp_collapse(pp.require_family(), pp, y, std::nullopt).candidate;
            }};
  }
  if (name == "mitm") {
    return {name, [](const ParameterSet& pp, const PublicObservable& y, RandomSource& rng) {
              return mitm_split(pp.require_family(), pp, pp.T / 2, y, std::nullopt, rng).report.candidate;
            }};
  }
  if (name == "empty-output") {
    return {name, [](const ParameterSet&, const PublicObservable&, RandomSource&) {
              return std::optional<MicroObject>();
            }};
  }
  if (name == "verification-only") {
    // Public enumeration plus the verification relation Phi(X) = Y, in random order.
    auto en = std::make_shared<const SupportEnumerator>(p);
    return {name, [en](const ParameterSet& pp, const PublicObservable& y, RandomSource& rng)
                      -> std::optional<MicroObject> {
              std::vector<std::uint64_t> order(en->size());
              for (std::uint64_t i = 0; i < order.size(); ++i) order[i] = i;
              std::shuffle(order.begin(), order.end(), rng);
              const auto& f = pp.require_family();
              for (auto i : order) {
                auto x = en->at(i);
                if (eval_observable(f, x, pp) == y) return x;
              }
              return std::nullopt;
            }};
  }
  throw InvalidParameters("unknown adversary '" + name + "'");
}

// ---------------------------------------------------------------------------
// Games

const char* game_kind_name(GameKind k) { return k == GameKind::ow ? "ow" : "rel"; }

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (ph + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
  // The exact endpoints at k = 0 and k = n are 0 and 1; keep rounding from moving them.
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half),
          successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

namespace {

void finalize(GameTranscript& t) {
  const double n = static_cast<double>(t.trials);
  t.advantage = t.trials ? static_cast<double>(t.successes) / n : 0.0;
  t.std_error = t.trials ? std::sqrt(t.advantage * (1.0 - t.advantage) / n) : 0.0;
  const auto ci = wilson_interval(t.successes, t.trials);
  t.ci_low = ci.low;
  t.ci_high = ci.high;
}

}  // namespace

std::pair<GameTranscript, GameTranscript> run_paired_games(const ParameterSet& p, const Adversary& adv,
                                                           std::size_t trials, const Seed& seed) {
  if (trials < 1) throw InvalidParameters("games need at least one trial");
  const auto& f = p.require_family();
  GameTranscript ow, rel;
  ow.kind = GameKind::ow;
  rel.kind = GameKind::rel;
  ow.adversary = rel.adversary = adv.name;
  ow.trials = rel.trials = trials;
  const RandomSource base(seed, "game");
  for (std::size_t i = 0; i < trials; ++i) {
    const std::string tag = "trial-" + std::to_string(i);
    RandomSource planted_rng = base.child(tag + "/planted");
    RandomSource noise_rng = base.child(tag + "/obs-noise");
    RandomSource adv_rng = base.child(tag + "/adversary");
    const MicroObject planted = sample_object(p, planted_rng);
    const PublicObservable y = observe(f, planted, p, noise_rng);

    std::optional<MicroObject> guess;
    try {
      guess = adv.run(p, y, adv_rng);
    } catch (const std::exception&) {
      ++ow.adversary_errors;
      ++rel.adversary_errors;
      continue;
    }
    if (!guess) continue;
    if (!is_admissible(*guess, p)) {
      ++ow.adversary_errors;
      ++rel.adversary_errors;
      continue;
    }
    const auto score = score_recovery(*guess, planted, p);
    ow.scores.push_back(score);
    rel.scores.push_back(score);
    if (score.exact_success) ++ow.successes;
    if (eval_observable(f, *guess, p) == y) ++rel.successes;
  }
  finalize(ow);
  finalize(rel);
  return {std::move(ow), std::move(rel)};
}

GameTranscript run_ow_game(const ParameterSet& p, const Adversary& adv, std::size_t trials,
                           const Seed& seed) {
  return run_paired_games(p, adv, trials, seed).first;
}

GameTranscript run_rel_game(const ParameterSet& p, const Adversary& adv, std::size_t trials,
                            const Seed& seed) {
  return run_paired_games(p, adv, trials, seed).second;
}

// ---------------------------------------------------------------------------
// Derived values

const char* kdf_rule_name(KdfRule k) {
  switch (k) {
    case KdfRule::hash_of_encoding: return "hash-of-encoding";
    case KdfRule::hash_of_state_path: return "hash-of-state-path";
    case KdfRule::hash_of_y: return "hash-of-Y";
  }
  return "hash-of-encoding";
}

std::vector<std::uint8_t> kdf_derive(KdfRule rule, const MicroObject& x, const ParameterSet& p) {
  std::vector<std::uint8_t> msg;
  switch (rule) {
    case KdfRule::hash_of_encoding:
      msg = encode_object(x, p);
      break;
    case KdfRule::hash_of_state_path:
      for (const auto& s : iterate_path(x, p)) {
        for (auto c : s.coords()) {
          for (int b = 0; b < 4; ++b) msg.push_back(static_cast<std::uint8_t>(c >> (8 * b)));
        }
      }
      break;
    case KdfRule::hash_of_y:
      msg = serialize_public(eval_observable(p.require_family(), x, p));
      break;
  }
  const auto h = blake2b_256(msg);
  return {h.begin(), h.end()};
}

PairCheck check_kdf_factoring(const KdfFn& k, const FiberTable& table) {
  for (const auto& fb : table.fibers()) {
    const auto ref = k(table.object(fb.members.front()), table.params());
    for (std::size_t j = 1; j < fb.members.size(); ++j) {
      if (k(table.object(fb.members[j]), table.params()) != ref) {
        return PairCheck{false, std::make_pair(fb.members.front(), fb.members[j])};
      }
    }
  }
  return PairCheck{};
}

PairCheck check_kdf_factoring(KdfRule rule, const FiberTable& table) {
  // hash-of-Y must see the table's family even if P carries another one.
  ParameterSet p = table.params();
  p.family = table.family();
  return check_kdf_factoring(
      [rule, p](const MicroObject& x, const ParameterSet&) { return kdf_derive(rule, x, p); }, table);
}

}  // namespace nhp
