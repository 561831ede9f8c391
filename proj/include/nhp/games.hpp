#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nhp/attacks.hpp"
#include "nhp/object.hpp"
#include "nhp/observables.hpp"
#include "nhp/oracle.hpp"
#include "nhp/params.hpp"
#include "nhp/random.hpp"

namespace nhp {

/// Recovery hierarchy for one (candidate, planted) pair.
/// coarse_score is the fraction of steps whose canonical macro index agrees, where the
/// canonical index is the first D entry explaining the state increment. It depends on the
/// state path only, so state_success implies coarse_score = 1. macro_agreement compares the
/// raw macro indices and can be below 1 for equal state paths.
struct RecoveryScore {
  double coarse_score = 0.0;
  double macro_agreement = 0.0;
  std::size_t d_state = 0;
  std::size_t d_x = 0;
  bool fiber_success = false;
  bool state_success = false;
  bool exact_success = false;
  std::size_t radius = 0;
  bool within_radius = false;  // d_X <= radius
};

/// Throws InvalidParameters if either object is inadmissible.
RecoveryScore score_recovery(const MicroObject& candidate, const MicroObject& planted,
                             const ParameterSet& p, std::size_t radius = 0);

/// An adversary sees only the public parameters, Y and its own randomness.
/// Returning nullopt means "no output".
using AdversaryFn = std::function<std::optional<MicroObject>(const ParameterSet&, const PublicObservable&,
                                                              RandomSource&)>;

struct Adversary {
  std::string name;
  AdversaryFn run;
};

/// Optional resources an adversary factory may need.
struct AdversaryContext {
  std::shared_ptr<const FiberTable> table;  // bayes-fiber
  std::uint64_t local_search_budget = 5000;
  std::size_t local_search_restarts = 16;
};

/// Built-ins: random-guess, bayes-fiber, local-search, linear-collapse, dp, mitm,
/// empty-output, verification-only. Throws InvalidParameters for unknown names or a
/// missing resource.
Adversary make_adversary(const std::string& name, const ParameterSet& p,
                         const AdversaryContext& ctx = {});
std::vector<std::string> adversary_names();

enum class GameKind { ow, rel };
const char* game_kind_name(GameKind k);

struct GameTranscript {
  GameKind kind = GameKind::ow;
  std::string adversary;
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t adversary_errors = 0;  // exceptions and inadmissible outputs
  double advantage = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;   // Wilson score, 95%
  double ci_high = 0.0;
  /// Per-trial scores for trials whose output was admissible.
  std::vector<RecoveryScore> scores;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Trial i draws its planted witness from the source labelled "trial-i/planted", observation
/// noise from "trial-i/obs-noise" and adversary randomness from "trial-i/adversary", all
/// children of RandomSource(seed, "game").
GameTranscript run_ow_game(const ParameterSet& p, const Adversary& adv, std::size_t trials,
                           const Seed& seed);
GameTranscript run_rel_game(const ParameterSet& p, const Adversary& adv, std::size_t trials,
                            const Seed& seed);

/// Both games on one shared trial stream; rel successes always include ow successes.
std::pair<GameTranscript, GameTranscript> run_paired_games(const ParameterSet& p, const Adversary& adv,
                                                           std::size_t trials, const Seed& seed);

enum class KdfRule { hash_of_encoding, hash_of_state_path, hash_of_y };
const char* kdf_rule_name(KdfRule k);

using KdfFn = std::function<std::vector<std::uint8_t>(const MicroObject&, const ParameterSet&)>;

std::vector<std::uint8_t> kdf_derive(KdfRule rule, const MicroObject& x, const ParameterSet& p);

/// True iff K is constant on every fiber of the table.
PairCheck check_kdf_factoring(const KdfFn& k, const FiberTable& table);
PairCheck check_kdf_factoring(KdfRule rule, const FiberTable& table);

}  // namespace nhp
