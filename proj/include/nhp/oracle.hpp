#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nhp/bigcount.hpp"
#include "nhp/field.hpp"
#include "nhp/object.hpp"
#include "nhp/observables.hpp"
#include "nhp/params.hpp"
#include "nhp/random.hpp"

namespace nhp {

/// Refuses enumeration whose exact size exceeds `cap`.
struct EnumerationGuard {
  BigCount cap = BigCount(1) << 24;

  /// Throws CapExceeded naming the exact count when count > cap.
  void check(const BigCount& count, const char* what) const;
};

/// Index <-> object bijection over the generation support, in mixed-radix order:
/// x0 coordinates (when free), then per step (macro, micro, noise coordinates).
class SupportEnumerator {
 public:
  /// Throws CapExceeded when the support does not fit in 62 bits of index.
  explicit SupportEnumerator(const ParameterSet& p);

  std::uint64_t size() const noexcept { return size_; }
  MicroObject at(std::uint64_t index) const;
  /// Inverse of at(); nullopt for objects outside the support.
  std::optional<std::uint64_t> index_of(const MicroObject& x) const;

 private:
  std::uint64_t q_;
  std::size_t n_;
  std::size_t T_;
  std::uint64_t b_;
  std::uint64_t r_;
  std::int64_t bound_;
  std::uint64_t noise_width_;
  std::optional<StateVector> fixed_x0_;
  std::uint64_t size_ = 1;
};

std::vector<MicroObject> enumerate_support(const ParameterSet& p, const EnumerationGuard& guard = {});

struct Fiber {
  PublicObservable y;
  std::vector<std::uint8_t> key;     // serialize_public(y)
  std::vector<std::size_t> members;  // support indices
};

/// Exact fibers of one family over the whole generation support.
class FiberTable {
 public:
  FiberTable(ParameterSet p, ObservableFamily f, std::vector<MicroObject> support,
             std::vector<PublicObservable> images);

  const ParameterSet& params() const noexcept { return p_; }
  const ObservableFamily& family() const noexcept { return f_; }
  std::size_t support_size() const noexcept { return support_.size(); }
  std::size_t image_size() const noexcept { return fibers_.size(); }
  const std::vector<Fiber>& fibers() const noexcept { return fibers_; }

  const MicroObject& object(std::size_t i) const { return support_.at(i); }
  std::vector<std::uint8_t> encoding(std::size_t i) const;
  /// Fiber index of support element i.
  std::size_t fiber_index(std::size_t i) const { return fiber_of_object_.at(i); }
  /// Support index of an admissible object, if present.
  std::optional<std::size_t> index_of(const MicroObject& x) const;

  const Fiber* find(const PublicObservable& y) const;
  /// Members of Phi^{-1}(y); empty when y is outside the image.
  std::vector<MicroObject> fiber_of(const PublicObservable& y) const;

 private:
  ParameterSet p_;
  ObservableFamily f_;
  SupportEnumerator enumerator_;
  std::vector<MicroObject> support_;
  std::vector<Fiber> fibers_;
  std::map<std::vector<std::uint8_t>, std::size_t> by_key_;
  std::vector<std::size_t> fiber_of_object_;
};

/// Enumerates the support and evaluates Phi on it. Evaluation is split across `workers`
/// threads over disjoint index ranges; the result does not depend on the worker count.
FiberTable build_fiber_table(const ParameterSet& p, const ObservableFamily& f,
                             const EnumerationGuard& guard = {}, unsigned workers = 1);
/// Same, using the family carried by P.
FiberTable build_fiber_table(const ParameterSet& p, const EnumerationGuard& guard = {},
                             unsigned workers = 1);

std::vector<MicroObject> fiber_of(const PublicObservable& y, const FiberTable& table);

struct IdentifiabilityReport {
  bool injective = false;
  std::size_t support_size = 0;
  std::size_t image_size = 0;
  std::size_t max_fiber = 0;
  std::size_t min_fiber = 0;
  /// sum_y k_y^2, exact.
  std::uint64_t sum_sq_fiber = 0;
  /// sum_y k_y^2 / |S|: the fiber size seen by the image distribution.
  double avg_fiber_seen = 0.0;
};

IdentifiabilityReport identifiability_report(const FiberTable& table);

/// Result of a property check that can fail with a witness pair of support indices.
struct PairCheck {
  bool holds = true;
  std::optional<std::pair<std::size_t, std::size_t>> counterexample;
};

/// Does every fiber lie inside one same-state-path class?
PairCheck quotient_identifiability_check(const FiberTable& table);

/// Lexicographically smallest encoding in X's same-state-path class within the support.
MicroObject canonical_representative(const MicroObject& x, const FiberTable& table);

/// (b r s)^T, times q^n when x0 is free.
BigCount count_histories(std::uint64_t b, std::uint64_t r, std::uint64_t s, std::uint64_t T,
                         std::uint64_t n, std::uint64_t q, bool free_x0);

/// Index of a state in Z_q^n under little-endian mixed radix; and its inverse.
std::uint64_t state_index(const StateVector& v, const Modulus& q);
StateVector index_state(std::uint64_t index, const Modulus& q, std::size_t n);

/// Number of sequences in D^T summing to each displacement, indexed by state_index.
std::vector<BigCount> displacement_counts(std::span<const StateVector> increments, std::size_t T,
                                          const Modulus& q, std::size_t n,
                                          std::uint64_t budget = 100'000'000);

/// Exact N_T^D(a, b) by T-fold convolution over Z_q^n.
BigCount endpoint_count_dp(std::span<const StateVector> increments, std::size_t T,
                           const StateVector& a, const StateVector& b, const Modulus& q,
                           std::size_t n, std::uint64_t budget = 100'000'000);

/// The additive-character formula for N_T^D(a, b), evaluated in complex double precision
/// with compensated summation. Requires prime q.
std::complex<double> endpoint_count_characters(std::span<const StateVector> increments,
                                               std::size_t T, const StateVector& a,
                                               const StateVector& b, const Modulus& q,
                                               std::size_t n, std::uint64_t budget = 10'000'000);

/// m(u) = number of (Delta, eps, eta) triples with Delta + eps + eta = u, for all u in Z_q^n.
struct MultiplicityMap {
  Modulus q;
  std::size_t n;
  std::vector<std::uint64_t> counts;  // by state_index

  std::uint64_t at(const StateVector& u) const { return counts.at(state_index(u, q)); }
  std::uint64_t total() const;
  /// prod_i m(u_i) for an effective increment sequence.
  BigCount history_multiplicity(std::span<const StateVector> increments) const;
};

MultiplicityMap multiplicity_map(const ParameterSet& p, std::uint64_t budget = 100'000'000);

/// q^{(n-k)(T+1)}, or q^{(n-k)(T-1)} with both endpoints fixed.
BigCount projection_fiber_count(std::size_t n, std::size_t k, std::size_t T, const Modulus& q,
                                bool endpoints_fixed);

/// Formula count for a general rank-k map `proj` (k x n). Returns 0 when the projected
/// path is not in im(proj)^{T+1} or the fixed endpoints are incompatible with it.
BigCount projection_fiber_count(const FieldMatrix& proj, std::size_t T,
                                const std::vector<StateVector>& projected_path,
                                const std::optional<std::pair<StateVector, StateVector>>& endpoints);

/// Exhaustive count of full paths in (F_q^n)^{T+1} whose first-k-coordinate projection
/// equals `projected_path`, optionally with fixed full endpoints.
std::uint64_t projection_preimage_enumerate(
    std::size_t n, std::size_t k, std::size_t T, const Modulus& q,
    const std::vector<StateVector>& projected_path,
    const std::optional<std::pair<StateVector, StateVector>>& endpoints,
    const EnumerationGuard& guard = {});

BigCount hamming_sphere_size(std::uint64_t n, std::uint64_t k, std::uint64_t q);
BigCount hamming_ball_size(std::uint64_t n, std::uint64_t radius, std::uint64_t q);

struct ConcentrationResult {
  double expected_mean = 0.0;
  double empirical_mean = 0.0;
  double mean_tolerance = 0.0;  // 4 sqrt(n/4/trials)
  bool mean_ok = false;
  double t = 0.0;               // sqrt(n ln(200) / 2)
  double tail_fraction = 0.0;   // P[|D - mean| >= t], empirical
  double tail_bound = 0.0;      // 2 exp(-2 t^2 / n)
  bool tail_ok = false;         // tail_fraction <= 3 * tail_bound
  std::vector<std::uint64_t> histogram;  // counts of each distance 0..n
};

ConcentrationResult hamming_concentration_check(std::size_t n, std::uint64_t q,
                                                std::size_t trials, RandomSource& rng);

struct OverlapResult {
  bool identifiable = true;
  std::optional<std::pair<std::size_t, std::size_t>> colliding_pair;  // support indices
};

/// Whether observation noise in [-B, B] can make two support objects produce the same
/// quantized observable. `f` must be a QuantizedReal family.
OverlapResult obs_noise_overlap_check(const ObservableFamily& f, const ParameterSet& p,
                                      const EnumerationGuard& guard = {});

}  // namespace nhp
