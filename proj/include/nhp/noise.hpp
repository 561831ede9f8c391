#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nhp/field.hpp"
#include "nhp/random.hpp"

namespace nhp {

/// Truncated discrete Gaussian: P(z) proportional to exp(-pi z^2 / sigma^2) on [-B, B].
struct NoiseSpec {
  double sigma = 1.0;
  std::int64_t bound = 0;  // B
  bool enabled = false;

  /// Number of integers each coordinate can take: 2B+1, or 1 when disabled.
  std::uint64_t coordinate_support() const noexcept {
    return enabled ? static_cast<std::uint64_t>(2 * bound + 1) : 1;
  }
  void validate() const;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Gaussian weight rho_sigma(z) = exp(-pi z^2 / sigma^2).
double rho(double sigma, std::int64_t z);

/// Normalised probabilities and CDF over [-B, B], computed once per spec.
class TdgTable {
 public:
  explicit TdgTable(const NoiseSpec& spec);

  std::int64_t bound() const noexcept { return bound_; }
  /// P(z) for z in [-B, B]; zero outside.
  double probability(std::int64_t z) const;
  std::int64_t sample(RandomSource& rng) const;

 private:
  std::int64_t bound_;
  std::vector<double> prob_;
  std::vector<double> cdf_;
};

/// One draw from the truncated discrete Gaussian. Throws for a disabled spec or sigma <= 0.
std::int64_t sample_tdg(const NoiseSpec& spec, RandomSource& rng);

/// The unique z in [-B, B] with z = residue (mod q), or nullopt if none exists.
/// Throws AliasError when q <= 2B, where reduction is not injective on [-B, B].
std::optional<std::int64_t> canonical_lift(Residue residue, std::int64_t bound, const Modulus& q);

}  // namespace nhp
