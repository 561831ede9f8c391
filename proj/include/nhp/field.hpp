#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nhp/errors.hpp"

namespace nhp {

using Residue = std::uint32_t;

/// The modulus q of Z_q. Primality is decided once, at construction.
class Modulus {
 public:
  explicit Modulus(std::uint64_t q);

  std::uint64_t value() const noexcept { return q_; }
  bool is_prime() const noexcept { return prime_; }

  Residue reduce(std::int64_t x) const noexcept {
    const auto q = static_cast<std::int64_t>(q_);
    std::int64_t r = x % q;
    return static_cast<Residue>(r < 0 ? r + q : r);
  }
  Residue add(Residue a, Residue b) const noexcept {
    std::uint64_t s = std::uint64_t{a} + b;
    return static_cast<Residue>(s >= q_ ? s - q_ : s);
  }
  Residue sub(Residue a, Residue b) const noexcept {
    return static_cast<Residue>(a >= b ? a - b : a + q_ - b);
  }
  Residue neg(Residue a) const noexcept { return a == 0 ? 0 : static_cast<Residue>(q_ - a); }
  Residue mul(Residue a, Residue b) const noexcept {
    return static_cast<Residue>((std::uint64_t{a} * b) % q_);
  }
  Residue pow(Residue base, std::uint64_t e) const noexcept;
  /// Multiplicative inverse; requires a prime modulus and a != 0.
  Residue inv(Residue a) const;

  /// Centered lift into (-q/2, q/2].
  std::int64_t centered(Residue a) const noexcept {
    const auto v = static_cast<std::int64_t>(a);
    return 2 * v > static_cast<std::int64_t>(q_) ? v - static_cast<std::int64_t>(q_) : v;
  }

  /// Throws CompositeModulus unless q is prime.
  void require_prime(const char* what) const;

  friend bool operator==(const Modulus& a, const Modulus& b) noexcept { return a.q_ == b.q_; }

 private:
  std::uint64_t q_;
  bool prime_;
};

bool is_prime_trial_division(std::uint64_t q) noexcept;

/// A vector in Z_q^n. Coordinates are kept reduced into [0, q).
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t n) : coords_(n, 0) {}
  StateVector(std::initializer_list<Residue> c) : coords_(c) {}
  explicit StateVector(std::vector<Residue> c) : coords_(std::move(c)) {}

  std::size_t size() const noexcept { return coords_.size(); }
  Residue operator[](std::size_t i) const { return coords_[i]; }
  Residue& operator[](std::size_t i) { return coords_[i]; }
  std::span<const Residue> coords() const noexcept { return coords_; }
  const std::vector<Residue>& raw() const noexcept { return coords_; }

  bool is_zero() const noexcept;

  friend bool operator==(const StateVector&, const StateVector&) = default;
  friend auto operator<=>(const StateVector&, const StateVector&) = default;

 private:
  std::vector<Residue> coords_;
};

/// Reduce signed integers into a state vector.
StateVector make_state(std::span<const std::int64_t> values, const Modulus& q);
StateVector zero_state(std::size_t n);
std::string to_string(const StateVector& v);

enum class VecOpKind { add, sub, scale };

StateVector add(const StateVector& u, const StateVector& v, const Modulus& q);
StateVector sub(const StateVector& u, const StateVector& v, const Modulus& q);
StateVector scale(Residue s, const StateVector& u, const Modulus& q);
/// Dispatching form; `v` is ignored for scale and `scalar` for add/sub.
StateVector vec_op(VecOpKind kind, const StateVector& u, const StateVector& v, Residue scalar,
                   const Modulus& q);
Residue dot(const StateVector& u, const StateVector& v, const Modulus& q);
/// Number of coordinates in which u and v differ.
std::size_t hamming(const StateVector& u, const StateVector& v);

/// Dense m x N matrix over F_q. Construction with a composite modulus is rejected.
class FieldMatrix {
 public:
  FieldMatrix(std::size_t rows, std::size_t cols, Modulus q);
  FieldMatrix(std::size_t rows, std::size_t cols, std::vector<Residue> entries, Modulus q);
  static FieldMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows, Modulus q);
  static FieldMatrix identity(std::size_t n, Modulus q);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  const Modulus& modulus() const noexcept { return q_; }

  Residue operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }
  Residue& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }

  std::vector<Residue> apply(std::span<const Residue> v) const;

  friend bool operator==(const FieldMatrix& a, const FieldMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.q_ == b.q_ && a.entries_ == b.entries_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  Modulus q_;
  std::vector<Residue> entries_;
};

std::size_t mat_rank(const FieldMatrix& a);

struct AffineSolution {
  std::vector<Residue> particular;
  std::vector<std::vector<Residue>> kernel_basis;
  std::size_t rank = 0;
};

/// Solves A v = y - c. Returns nullopt when y - c is outside im(A).
std::optional<AffineSolution> solve_affine(const FieldMatrix& a, std::span<const Residue> c,
                                           std::span<const Residue> y);

}  // namespace nhp
