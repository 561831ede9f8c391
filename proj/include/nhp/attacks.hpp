#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nhp/field.hpp"
#include "nhp/object.hpp"
#include "nhp/observables.hpp"
#include "nhp/oracle.hpp"
#include "nhp/params.hpp"
#include "nhp/random.hpp"

namespace nhp {

enum class Outcome { planted_recovered, witness_found, localized, failed, not_applicable };

const char* outcome_name(Outcome o);

struct WorkCounters {
  std::uint64_t evaluations = 0;
  std::uint64_t table_entries = 0;
};

struct AttackReport {
  std::string method;
  Outcome outcome = Outcome::failed;
  WorkCounters work;
  double wall_seconds = 0.0;
  std::optional<MicroObject> candidate;
  /// Method-specific facts (kernel dimension, observable distance, ...), sorted by key.
  std::map<std::string, std::string> details;
};

/// Classifies a candidate: planted-recovered when it equals `planted` byte-exactly,
/// witness-found when Phi(candidate) = Y, otherwise `otherwise`.
Outcome classify_candidate(const MicroObject& candidate, const ObservableFamily& f,
                           const ParameterSet& p, const PublicObservable& y,
                           const std::optional<MicroObject>& planted,
                           Outcome otherwise = Outcome::localized);

/// Linear view of an object over F_q. Only blocks that vary over the support take part:
/// x0 when free, Delta_i when b > 1, eps_i when r > 1, eta_i (as residues) when noise is on
/// with B > 0. Fixed blocks are folded into the constant term.
class ObjectVectorizer {
 public:
  /// Throws AliasError when q <= 2B with noise on.
  explicit ObjectVectorizer(const ParameterSet& p);

  std::size_t dimension() const noexcept { return dim_; }
  std::vector<Residue> to_vector(const MicroObject& x) const;
  /// The realization an arbitrary vector describes; defined off the support too.
  PathRealization realize_vector(std::span<const Residue> v) const;
  /// The object a vector denotes, or nullopt if some block is outside its alphabet.
  std::optional<MicroObject> to_object(std::span<const Residue> v) const;

 private:
  ParameterSet p_;
  bool x0_block_;
  bool macro_block_;
  bool micro_block_;
  bool noise_block_;
  std::size_t dim_ = 0;
};

/// Evaluation oracle on vectorized objects, returning Y entries as residues mod q.
using VectorOracle = std::function<std::vector<Residue>(std::span<const Residue>)>;

struct AffineModel {
  FieldMatrix A;
  std::vector<Residue> c;
  std::size_t residual = 0;  // mismatching verification probes
  std::size_t probes = 0;
  bool exact = false;
  std::uint64_t evaluations = 0;
};

/// c = Phi(0), column j = Phi(e_j) - c, then `probes` random verification points.
AffineModel affine_surrogate_fit(const VectorOracle& phi, std::size_t dim, std::size_t m,
                                 const Modulus& q, std::size_t probes, RandomSource& rng);
/// Family form. Throws CompositeModulus for composite q, NotApplicable for non-mod-q
/// families and AliasError when q <= 2B.
AffineModel affine_surrogate_fit(const ObservableFamily& f, const ParameterSet& p,
                                 std::size_t probes, RandomSource& rng);

struct LinearCollapseOptions {
  /// Cosets up to this many members are searched exhaustively (and counted).
  std::uint64_t exhaustive_limit = 1ULL << 20;
  /// Random coset members tried when the coset is larger.
  std::uint64_t samples = 1ULL << 16;
};

/// Solves A v = Y - c and searches the solution coset for an admissible object.
/// Throws InvalidParameters for a non-exact model.
AttackReport linear_collapse(const AffineModel& model, const ObservableFamily& f,
                             const ParameterSet& p, const PublicObservable& y,
                             const std::optional<MicroObject>& planted, RandomSource& rng,
                             const LinearCollapseOptions& opts = {});

/// Per-step decomposition of a state-only observable: Y = sum_i phi_i(x_i, x_{i+1}) entrywise
/// mod q. nullopt for families without such a form.
struct StepDecomposition {
  std::size_t m = 0;
  std::function<void(std::size_t step, const StateVector& x, const StateVector& x_next,
                     std::vector<Residue>& out)>
      phi;
};

std::optional<StepDecomposition> step_decomposition(const ObservableFamily& f);

/// Layered reachability over (state, accumulator) with parent pointers.
/// The table-entry counter counts reachable cells in layers 1..T, so it never exceeds T V M.
AttackReport dp_collapse(const ObservableFamily& f, const ParameterSet& p, const PublicObservable& y,
                         const std::optional<MicroObject>& planted,
                         std::uint64_t budget = 1ULL << 24);

struct MitmOptions {
  std::size_t separability_probes = 32;
  /// Collect every matching (left, right) pair instead of stopping at the first.
  bool collect_all = false;
  std::uint64_t budget = 1ULL << 22;  // N_L + N_R
};

struct MitmResult {
  AttackReport report;
  std::vector<MicroObject> witnesses;  // filled when collect_all
};

/// Meet in the middle at split t: X_L = (x0, steps < t), X_R = steps >= t.
/// work.evaluations counts the two half tables and the separability probes; the Phi calls
/// that verify matches are reported as details["verification_evaluations"].
MitmResult mitm_split(const ObservableFamily& f, const ParameterSet& p, std::size_t t,
                      const PublicObservable& y, const std::optional<MicroObject>& planted,
                      RandomSource& rng, const MitmOptions& opts = {});

struct LocalSearchOptions {
  std::uint64_t budget = 20000;  // evaluations
  std::size_t restarts = 16;
  /// First restart begins here when set.
  std::optional<MicroObject> start;
};

AttackReport local_search_round(const ObservableFamily& f, const ParameterSet& p,
                                const PublicObservable& y, const std::optional<MicroObject>& planted,
                                RandomSource& rng, const LocalSearchOptions& opts = {});

/// Entrywise Hamming distance between two observables.
std::size_t observable_distance(const PublicObservable& a, const PublicObservable& b);

/// Uniform draw from the fiber of Y. Throws InvalidParameters if Y is outside the image.
AttackReport bayes_fiber_guess(const PublicObservable& y, const FiberTable& table,
                               const std::optional<MicroObject>& planted, RandomSource& rng);

struct TelescopingResult {
  bool flagged = false;
  std::size_t pairs_tested = 0;
  /// A pair with equal endpoints and different Y, when one was found.
  std::optional<std::pair<MicroObject, MicroObject>> distinguishing_pair;
};

/// Probes endpoint-matched pairs built by permuting the steps of a sample. Flags the family
/// when every probed pair has identical Y. Throws InvalidParameters when no pair with a
/// different interior can be built.
TelescopingResult telescoping_detector(const ObservableFamily& f, const ParameterSet& p,
                                       RandomSource& rng, std::size_t probes = 1000);

struct DistinguisherResult {
  std::vector<double> chi_square_p;  // raw, per entry
  double min_corrected_p = 1.0;      // Bonferroni over all tests
  double max_abs_correlation = 0.0;
  std::size_t tests = 0;
  bool reject = false;
};

/// Chi-square uniformity per entry plus pairwise Pearson correlations over the first 64
/// positions. `ranges[j]` is the size of entry j's value set. Needs at least 100 keys.
DistinguisherResult multi_instance_distinguisher(const std::vector<PublicObservable>& keys,
                                                 const std::vector<std::uint64_t>& ranges,
                                                 double alpha = 1e-4);
/// Ranges taken from the family: q for mod-q entries, 2^ell otherwise.
std::vector<std::uint64_t> reference_ranges(const ObservableFamily& f);

void export_constraint_instance(const ParameterSet& p, const PublicObservable& y,
                                const std::filesystem::path& path);
std::pair<ParameterSet, PublicObservable> import_constraint_instance(
    const std::filesystem::path& path);

}  // namespace nhp
