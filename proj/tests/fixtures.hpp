#pragma once

// Small parameter sets shared by the test suites.

#include <cstdint>
#include <optional>
#include <vector>

#include "nhp/object.hpp"
#include "nhp/observables.hpp"
#include "nhp/params.hpp"

namespace fx {

using Rows = std::vector<std::vector<std::int64_t>>;

inline nhp::ParameterSet params(std::uint64_t q, std::size_t n, std::size_t T, const Rows& macro,
                                const Rows& micro, std::int64_t noise_bound = 0, bool fixed_x0 = true,
                                std::uint64_t seed = 1) {
  nhp::ParameterSet p(nhp::Modulus(q), n, T);
  p.macro_alphabet = nhp::make_alphabet(macro, p.modulus);
  p.micro_alphabet = nhp::make_alphabet(micro, p.modulus);
  if (noise_bound > 0) p.noise = nhp::NoiseSpec{1.0, noise_bound, true};
  if (fixed_x0) p.boundary = nhp::Boundary{nhp::zero_state(n), std::nullopt};
  p.seed = nhp::seed_from_u64(seed);
  return p;
}

inline nhp::ParameterSet with_family(nhp::ParameterSet p, nhp::ObservableFamily f) {
  p.family = std::move(f);
  p.validate();
  return p;
}

/// The toy of the worked example: q=101, n=1, T=4, D={-1,1}, E={-1,0,1}, fixed x0. 1296 objects.
inline nhp::ParameterSet toy_1296(std::uint64_t seed = 1) {
  return params(101, 1, 4, {{-1}, {1}}, {{-1}, {0}, {1}}, 0, true, seed);
}

inline nhp::ParameterSet linear_toy(std::size_t m, std::uint64_t seed = 1) {
  auto p = params(5, 1, 3, {{1}, {2}}, {{0}, {1}}, 0, true, seed);
  return with_family(p, nhp::make_linear_projected(p.dims(), m, nhp::min_entry_width(p.modulus), p.seed));
}

inline nhp::ParameterSet nonlinear_toy(std::size_t T = 4, std::size_t m = 6, std::uint64_t seed = 7) {
  auto p = params(101, 1, T, {{-1}, {1}}, {{-1}, {0}, {1}}, 0, true, seed);
  return with_family(p, nhp::make_nonlinear_local(p.dims(), m, nhp::min_entry_width(p.modulus), p.seed));
}

inline nhp::ParameterSet telescoping_toy(std::uint64_t seed = 3) {
  auto p = params(7, 2, 3, {{1, 0}, {0, 1}}, {{0, 0}, {1, 1}}, 0, false, seed);
  return with_family(p, nhp::make_telescoping(p.dims(), nhp::min_entry_width(p.modulus)));
}

/// Builds an object from explicit indices; noise defaults to zero.
inline nhp::MicroObject object(const nhp::ParameterSet& p, std::vector<std::uint32_t> macro,
                               std::vector<std::uint32_t> micro,
                               std::optional<nhp::StateVector> x0 = std::nullopt) {
  nhp::MicroObject x;
  x.x0 = x0 ? *x0 : (p.boundary ? p.boundary->start : nhp::zero_state(p.n));
  x.macro_idx = std::move(macro);
  x.micro_idx = std::move(micro);
  x.noise_lift.assign(p.T, std::vector<std::int64_t>(p.n, 0));
  return x;
}

}  // namespace fx
