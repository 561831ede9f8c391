#pragma once

#include <compare>
#include <cstdint>
#include <vector>

#include "nhp/field.hpp"
#include "nhp/params.hpp"

namespace nhp {

/// The hidden witness X = (x0, Delta, eps, eta). Increments are stored as alphabet
/// indices and noise as its integer lift in [-B, B]^n, before reduction.
struct MicroObject {
  StateVector x0;
  std::vector<std::uint32_t> macro_idx;
  std::vector<std::uint32_t> micro_idx;
  std::vector<std::vector<std::int64_t>> noise_lift;

  friend bool operator==(const MicroObject&, const MicroObject&) = default;
  friend auto operator<=>(const MicroObject&, const MicroObject&) = default;
};

/// Throws InvalidParameters if X is not in the admissible domain of P.
void check_admissible(const MicroObject& x, const ParameterSet& p);
bool is_admissible(const MicroObject& x, const ParameterSet& p) noexcept;

/// Noise vector eta_i as a residue vector.
StateVector noise_residue(const MicroObject& x, std::size_t step, const Modulus& q);
/// Total step increment u_i = Delta_i + eps_i + eta_i mod q.
StateVector effective_increment(const MicroObject& x, std::size_t step, const ParameterSet& p);

/// The state path gamma(X): T+1 states under x_{i+1} = x_i + Delta_i + eps_i + eta_i mod q.
std::vector<StateVector> iterate_path(const MicroObject& x, const ParameterSet& p);

/// Hamming distances used by the recovery metrics.
std::size_t state_path_distance(const std::vector<StateVector>& a,
                                const std::vector<StateVector>& b);
/// d_X = d_H(gamma, gamma') + d_H(Delta, Delta') + d_H(eps, eps') + d_H(eta, eta'), where
/// the last three count differing steps.
std::size_t object_distance(const MicroObject& a, const MicroObject& b, const ParameterSet& p);

}  // namespace nhp
