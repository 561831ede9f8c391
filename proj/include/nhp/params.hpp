#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nhp/bigcount.hpp"
#include "nhp/family.hpp"
#include "nhp/field.hpp"
#include "nhp/noise.hpp"
#include "nhp/random.hpp"

namespace nhp {

/// Fixed start state, plus an optional target end state used by endpoint-aware attacks.
/// Only `start` constrains the generation support.
struct Boundary {
  StateVector start;
  std::optional<StateVector> end;

  friend bool operator==(const Boundary&, const Boundary&) = default;
};

inline constexpr std::uint8_t kEncodingVersion = 1;

/// Full public parameters of one experiment.
struct ParameterSet {
  ParameterSet(Modulus q, std::size_t n, std::size_t T) : modulus(q), n(n), T(T) {}

  Modulus modulus;
  std::size_t n;
  std::size_t T;
  std::vector<StateVector> macro_alphabet;  // D, size b
  std::vector<StateVector> micro_alphabet;  // E, size r
  NoiseSpec noise;
  std::optional<ObservableFamily> family;
  std::uint8_t encoding_version = kEncodingVersion;
  Seed seed{};
  std::optional<Boundary> boundary;

  PathDims dims() const { return PathDims{modulus, n, T}; }
  std::size_t b() const noexcept { return macro_alphabet.size(); }
  std::size_t r() const noexcept { return micro_alphabet.size(); }
  /// Per-step noise support size s = (2B+1)^n, or 1 when noise is disabled.
  BigCount noise_support() const;
  bool x0_free() const noexcept { return !boundary.has_value(); }

  /// Exact size of the generation support: q^n (if x0 free) * (b r s)^T.
  BigCount support_size() const;

  const ObservableFamily& require_family() const;

  /// Throws InvalidParameters describing the first violated invariant.
  void validate() const;
};

/// Builds an alphabet from signed integer rows, reducing mod q.
std::vector<StateVector> make_alphabet(const std::vector<std::vector<std::int64_t>>& rows,
                                       const Modulus& q);

}  // namespace nhp
