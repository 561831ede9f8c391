#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nhp/family.hpp"
#include "nhp/object.hpp"
#include "nhp/params.hpp"
#include "nhp/random.hpp"

namespace nhp {

/// The public vector Y: m entries of ell bits each, tagged with the family fingerprint.
struct PublicObservable {
  std::vector<std::uint64_t> entries;
  std::uint32_t ell = 1;
  Fingerprint fingerprint{};

  std::size_t m() const noexcept { return entries.size(); }
  /// L = m * ell.
  std::uint64_t total_bits() const noexcept { return std::uint64_t{ell} * entries.size(); }

  friend bool operator==(const PublicObservable&, const PublicObservable&) = default;
};

/// Everything a family may read from an object: the state path, micro perturbations as
/// residues and centered lifts, and the integer noise lifts.
struct PathRealization {
  std::vector<StateVector> states;
  std::vector<StateVector> micro;
  std::vector<std::vector<std::int64_t>> micro_lift;
  std::vector<std::vector<std::int64_t>> noise_lift;
};

PathRealization realize(const MicroObject& x, const ParameterSet& p);

/// Raw entry values of F on a realization. Observation noise is drawn from `noise_rng`
/// when it is non-null and the family carries enabled observation noise.
std::vector<std::uint64_t> evaluate_entries(const ObservableFamily& f, const PathRealization& r,
                                            RandomSource* noise_rng = nullptr);

/// Y = Phi(X). Pure and deterministic; never applies observation noise.
PublicObservable eval_observable(const ObservableFamily& f, const MicroObject& x,
                                 const ParameterSet& p);

/// Y with observation noise drawn from `rng` where the family defines it.
PublicObservable observe(const ObservableFamily& f, const MicroObject& x, const ParameterSet& p,
                         RandomSource& rng);

/// Nearest integer of value / tau with ties to even. Throws for non-finite input or tau <= 0.
std::int64_t quantize(double value, const QuantizerSpec& spec);

/// Quantizer bin reduced mod 2^ell (two's-complement wrap).
std::uint64_t wrap_bin(std::int64_t bin, std::uint32_t ell);

/// Pre-quantization features F_j(X) of a QuantizedReal family.
std::vector<double> quantized_features(const QuantizedReal& f, const PathRealization& r);

/// Adds one truncated-discrete-Gaussian draw to each feature. Throws for a disabled spec.
std::vector<double> add_observation_noise(std::span<const double> features, const NoiseSpec& spec,
                                          RandomSource& rng);

/// Psi = h o Phi. Throws InvalidParameters when h does not fit F's output space.
ObservableFamily compose_postprocess(const PostProcessor& h, const ObservableFamily& f);

inline constexpr std::uint8_t kPublicMagic[4] = {'N', 'H', 'P', 'Y'};
inline constexpr std::uint8_t kPublicVersion = 1;
inline constexpr std::size_t kPublicHeaderBytes = 4 + 1 + 4 + 4 + 32;

/// Layout: magic "NHPY", version byte, m (u32 LE), ell (u32 LE), fingerprint (32 bytes),
/// then entries packed ell bits each, LSB-first, zero-padded to a byte boundary.
std::vector<std::uint8_t> serialize_public(const PublicObservable& y);
PublicObservable parse_public(std::span<const std::uint8_t> bytes);

// Family construction. Coefficients come from RandomSource(seed, "obs-coeffs").

/// Smallest ell with 2^ell >= q.
std::uint32_t min_entry_width(const Modulus& q);

ObservableFamily make_linear_projected(const PathDims& d, std::size_t m, std::uint32_t ell,
                                       const Seed& seed);
ObservableFamily make_transition_energy(const PathDims& d, std::size_t m, std::uint32_t ell,
                                        const Seed& seed);
ObservableFamily make_quantized_real(const PathDims& d, std::size_t m, std::uint32_t ell,
                                     double tau, const NoiseSpec& observation_noise,
                                     const Seed& seed);
ObservableFamily make_nonlinear_local(const PathDims& d, std::size_t m, std::uint32_t ell,
                                      const Seed& seed);
ObservableFamily make_telescoping(const PathDims& d, std::uint32_t ell);
/// LinearProjected family whose entries are every coordinate of every state.
ObservableFamily make_all_states(const PathDims& d, std::uint32_t ell);
ObservableFamily make_composite(std::vector<ObservableFamily> parts);

}  // namespace nhp
