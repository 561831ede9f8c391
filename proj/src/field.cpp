#include "nhp/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nhp/bigcount.hpp"

namespace nhp {

bool is_prime_trial_division(std::uint64_t q) noexcept {
  if (q < 2) return false;
  if (q < 4) return true;
  if (q % 2 == 0) return false;
  for (std::uint64_t d = 3; d * d <= q; d += 2) {
    if (q % d == 0) return false;
  }
  return true;
}

Modulus::Modulus(std::uint64_t q) : q_(q), prime_(is_prime_trial_division(q)) {
  if (q < 2) throw InvalidParameters("modulus must be >= 2, got " + std::to_string(q));
  if (q > (std::uint64_t{1} << 31)) {
    throw InvalidParameters("modulus must be <= 2^31, got " + std::to_string(q));
  }
}

Residue Modulus::pow(Residue base, std::uint64_t e) const noexcept {
  Residue result = static_cast<Residue>(1 % q_);
  Residue b = base;
  while (e > 0) {
    if (e & 1U) result = mul(result, b);
    b = mul(b, b);
    e >>= 1U;
  }
  return result;
}

Residue Modulus::inv(Residue a) const {
  require_prime("modular inverse");
  if (a % q_ == 0) throw Error("inverse of zero");
  return pow(a, q_ - 2);
}

void Modulus::require_prime(const char* what) const {
  if (!prime_) {
    throw CompositeModulus(std::string(what) + " requires a prime modulus, got q=" +
                           std::to_string(q_));
  }
}

bool StateVector::is_zero() const noexcept {
  return std::all_of(coords_.begin(), coords_.end(), [](Residue r) { return r == 0; });
}

StateVector make_state(std::span<const std::int64_t> values, const Modulus& q) {
  std::vector<Residue> c;
  c.reserve(values.size());
  for (auto v : values) c.push_back(q.reduce(v));
  return StateVector(std::move(c));
}

StateVector zero_state(std::size_t n) { return StateVector(n); }

std::string to_string(const StateVector& v) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_dims(const StateVector& u, const StateVector& v) {
  if (u.size() != v.size()) {
    throw DimensionMismatch("vector dimensions differ: " + std::to_string(u.size()) + " vs " +
                            std::to_string(v.size()));
  }
}

}  // namespace

StateVector add(const StateVector& u, const StateVector& v, const Modulus& q) {
  check_dims(u, v);
  StateVector out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = q.add(u[i], v[i]);
  return out;
}

StateVector sub(const StateVector& u, const StateVector& v, const Modulus& q) {
  check_dims(u, v);
  StateVector out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = q.sub(u[i], v[i]);
  return out;
}

StateVector scale(Residue s, const StateVector& u, const Modulus& q) {
  StateVector out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = q.mul(s, u[i]);
  return out;
}

StateVector vec_op(VecOpKind kind, const StateVector& u, const StateVector& v, Residue scalar,
                   const Modulus& q) {
  switch (kind) {
    case VecOpKind::add: return add(u, v, q);
    case VecOpKind::sub: return sub(u, v, q);
    case VecOpKind::scale: return scale(scalar, u, q);
  }
  throw Error("unknown vector operation");
}

Residue dot(const StateVector& u, const StateVector& v, const Modulus& q) {
  check_dims(u, v);
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    acc = (acc + std::uint64_t{u[i]} * v[i]) % q.value();
  }
  return static_cast<Residue>(acc);
}

std::size_t hamming(const StateVector& u, const StateVector& v) {
  check_dims(u, v);
  std::size_t d = 0;
  for (std::size_t i = 0; i < u.size(); ++i) d += (u[i] != v[i]);
  return d;
}

FieldMatrix::FieldMatrix(std::size_t rows, std::size_t cols, Modulus q)
    : rows_(rows), cols_(cols), q_(q), entries_(rows * cols, 0) {
  q_.require_prime("FieldMatrix");
}

FieldMatrix::FieldMatrix(std::size_t rows, std::size_t cols, std::vector<Residue> entries,
                         Modulus q)
    : rows_(rows), cols_(cols), q_(q), entries_(std::move(entries)) {
  q_.require_prime("FieldMatrix");
  if (entries_.size() != rows * cols) throw DimensionMismatch("matrix entry count mismatch");
  for (auto& e : entries_) e = static_cast<Residue>(e % q_.value());
}

FieldMatrix FieldMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows,
                                   Modulus q) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.front().size() : 0;
  std::vector<Residue> e;
  e.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw DimensionMismatch("ragged matrix rows");
    for (auto v : r) e.push_back(q.reduce(v));
  }
  return FieldMatrix(m, n, std::move(e), q);
}

FieldMatrix FieldMatrix::identity(std::size_t n, Modulus q) {
  FieldMatrix a(n, n, q);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1;
  return a;
}

std::vector<Residue> FieldMatrix::apply(std::span<const Residue> v) const {
  if (v.size() != cols_) throw DimensionMismatch("matrix-vector dimension mismatch");
  std::vector<Residue> out(rows_, 0);
  for (std::size_t r = 0; r < rows_; ++r) {
    std::uint64_t acc = 0;
    for (std::size_t c = 0; c < cols_; ++c) {
      acc = (acc + std::uint64_t{(*this)(r, c)} * v[c]) % q_.value();
    }
    out[r] = static_cast<Residue>(acc);
  }
  return out;
}

namespace {

/// Reduced row echelon form of [A | rhs] in place; returns pivot columns of A.
std::vector<std::size_t> rref(std::vector<std::vector<Residue>>& rows, std::size_t cols,
                              const Modulus& q) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows.size(); ++c) {
    std::size_t sel = r;
    while (sel < rows.size() && rows[sel][c] == 0) ++sel;
    if (sel == rows.size()) continue;
    std::swap(rows[r], rows[sel]);
    const Residue inv = q.inv(rows[r][c]);
    for (auto& x : rows[r]) x = q.mul(x, inv);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      const Residue f = rows[i][c];
      for (std::size_t k = 0; k < rows[i].size(); ++k) {
        rows[i][k] = q.sub(rows[i][k], q.mul(f, rows[r][k]));
      }
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

}  // namespace

std::size_t mat_rank(const FieldMatrix& a) {
  const auto& q = a.modulus();
  q.require_prime("mat_rank");
  std::vector<std::vector<Residue>> rows(a.rows(), std::vector<Residue>(a.cols()));
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) rows[r][c] = a(r, c);
  return rref(rows, a.cols(), q).size();
}

std::optional<AffineSolution> solve_affine(const FieldMatrix& a, std::span<const Residue> c,
                                           std::span<const Residue> y) {
  const auto& q = a.modulus();
  q.require_prime("solve_affine");
  if (c.size() != a.rows() || y.size() != a.rows()) {
    throw DimensionMismatch("solve_affine: offset/target length must equal row count");
  }
  const std::size_t n = a.cols();
  std::vector<std::vector<Residue>> rows(a.rows(), std::vector<Residue>(n + 1));
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t k = 0; k < n; ++k) rows[r][k] = a(r, k);
    rows[r][n] = q.sub(static_cast<Residue>(y[r] % q.value()),
                       static_cast<Residue>(c[r] % q.value()));
  }
  const auto pivots = rref(rows, n, q);
  for (std::size_t r = pivots.size(); r < rows.size(); ++r) {
    if (rows[r][n] != 0) return std::nullopt;
  }

  AffineSolution sol;
  sol.rank = pivots.size();
  sol.particular.assign(n, 0);
  std::vector<bool> is_pivot(n, false);
  for (std::size_t i = 0; i < pivots.size(); ++i) {
    sol.particular[pivots[i]] = rows[i][n];
    is_pivot[pivots[i]] = true;
  }
  for (std::size_t free = 0; free < n; ++free) {
    if (is_pivot[free]) continue;
    std::vector<Residue> k(n, 0);
    k[free] = 1;
    for (std::size_t i = 0; i < pivots.size(); ++i) k[pivots[i]] = q.neg(rows[i][free]);
    sol.kernel_basis.push_back(std::move(k));
  }
  return sol;
}

double log2_big(const BigCount& value) {
  if (value <= 0) return -INFINITY;
  const std::size_t bits = boost::multiprecision::msb(value) + 1;
  if (bits <= 60) return std::log2(value.convert_to<double>());
  const std::size_t shift = bits - 60;
  BigCount top = value >> shift;
  return std::log2(top.convert_to<double>()) + static_cast<double>(shift);
}

bool is_power_of_two(const BigCount& value, std::uint64_t* exponent) {
  if (value <= 0) return false;
  const auto msb = boost::multiprecision::msb(value);
  if (boost::multiprecision::lsb(value) != msb) return false;
  if (exponent) *exponent = msb;
  return true;
}

}  // namespace nhp
