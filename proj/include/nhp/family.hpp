#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "nhp/field.hpp"
#include "nhp/noise.hpp"

namespace nhp {

/// Path geometry a family is built for.
struct PathDims {
  Modulus q;
  std::size_t n;
  std::size_t T;

  friend bool operator==(const PathDims&, const PathDims&) = default;
};

/// Nearest-integer quantizer with ties to even.
struct QuantizerSpec {
  double tau = 1.0;
};

/// Deterministic map h applied after the observable.
struct PostProcessor {
  enum class Kind { identity, truncate_bits, keep_first, constant };
  Kind kind = Kind::identity;
  /// Bits kept per entry (truncate_bits) or entries kept (keep_first).
  std::uint32_t param = 0;

  static PostProcessor identity() { return {Kind::identity, 0}; }
  static PostProcessor truncate_bits(std::uint32_t bits) { return {Kind::truncate_bits, bits}; }
  static PostProcessor keep_first(std::uint32_t k) { return {Kind::keep_first, k}; }
  static PostProcessor constant() { return {Kind::constant, 0}; }

  friend bool operator==(const PostProcessor&, const PostProcessor&) = default;
};

class ObservableFamily;

/// Family (a): Y_j = sum_{i=0}^{T} <a_{j,i}, x_i> mod q.
struct LinearProjected {
  std::vector<std::vector<StateVector>> a;  // [m][T+1]
};

/// Family (b): Y_j = sum_i <u,x_i><v,x_{i+1}> + <w, x_{i+1} - x_i> mod q, coefficients per (j, i).
struct TransitionEnergy {
  std::vector<std::vector<StateVector>> u, v, w;  // [m][T]
};

/// Family (c): Y_j = round((F_j(X) + e_j) / tau_j) reduced mod 2^ell, where
/// F_j = sum_i <sw_{j,i}, x_i> + <mw_{j,i}, lift(eps_i)> + <nw_{j,i}, eta_i> over the reals.
/// States enter as their residues in [0, q); micro perturbations as centered lifts.
struct QuantizedReal {
  std::vector<std::vector<std::vector<double>>> state_w, micro_w, noise_w;  // [m][T][n]
  std::vector<double> tau;                                                 // [m]
  NoiseSpec observation_noise;
};

/// Family (d): Y_j = sum_i chi_j(i) (<a,x_i>^2 + c <b,x_{i+1}> + <d,eps_i>) mod q.
struct NonlinearLocal {
  std::vector<std::vector<Residue>> chi;          // [m][T]
  std::vector<std::vector<StateVector>> a, b, d;  // [m][T]
  std::vector<std::vector<Residue>> c;            // [m][T]
};

/// Q = x_T - x_0, one entry per coordinate.
struct Telescoping {};

struct Composite {
  std::vector<ObservableFamily> parts;
};

struct PostProcessed {
  std::shared_ptr<const ObservableFamily> inner;
  PostProcessor h;
};

enum class FamilyKind {
  linear_projected,
  transition_energy,
  quantized_real,
  nonlinear_local,
  telescoping,
  composite,
  post_processed
};

const char* family_kind_name(FamilyKind kind);
FamilyKind family_kind_from_name(const std::string& name);

using Fingerprint = std::array<std::uint8_t, 32>;

/// The public observable map. Immutable after construction; the fingerprint is a
/// BLAKE2b-256 digest of the canonical description (kind, geometry, width, every coefficient).
class ObservableFamily {
 public:
  using Body = std::variant<LinearProjected, TransitionEnergy, QuantizedReal, NonlinearLocal,
                            Telescoping, Composite, PostProcessed>;

  ObservableFamily(PathDims dims, std::uint32_t ell, Body body);

  const PathDims& dims() const noexcept { return dims_; }
  std::uint32_t ell() const noexcept { return ell_; }
  std::size_t m() const noexcept { return m_; }
  FamilyKind kind() const noexcept { return static_cast<FamilyKind>(body_.index()); }
  const Body& body() const noexcept { return body_; }
  const Fingerprint& fingerprint() const noexcept { return fingerprint_; }

  /// Entry j lives in Z_{entry_modulus(j)}: q for mod-q entries, 2^ell otherwise.
  std::uint64_t entry_modulus(std::size_t j) const { return entry_moduli_.at(j); }
  const std::vector<std::uint64_t>& entry_moduli() const noexcept { return entry_moduli_; }
  /// True when every entry is a canonical residue mod q (affine analysis applies).
  bool is_mod_q() const noexcept { return mod_q_; }
  /// True when observation noise may be added (QuantizedReal with enabled noise somewhere).
  bool has_observation_noise() const noexcept { return obs_noise_; }
  /// True when Y depends on the object only through its state path.
  bool depends_only_on_states() const noexcept { return state_only_; }

 private:
  PathDims dims_;
  std::uint32_t ell_;
  Body body_;
  std::size_t m_ = 0;
  std::vector<std::uint64_t> entry_moduli_;
  bool mod_q_ = false;
  bool obs_noise_ = false;
  bool state_only_ = false;
  Fingerprint fingerprint_{};
};

}  // namespace nhp
