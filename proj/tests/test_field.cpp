#include <doctest.h>

#include <cmath>
#include <set>

#include "nhp/field.hpp"
#include "nhp/random.hpp"

using namespace nhp;

namespace {

// Brute-force image size of v -> A v over all of F_q^cols.
std::size_t image_size(const FieldMatrix& a) {
  const auto q = a.modulus().value();
  std::set<std::vector<Residue>> img;
  std::vector<Residue> v(a.cols(), 0);
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < a.cols(); ++i) total *= q;
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t t = idx;
    for (auto& c : v) {
      c = static_cast<Residue>(t % q);
      t /= q;
    }
    img.insert(a.apply(v));
  }
  return img.size();
}

}  // namespace

TEST_CASE("modulus arithmetic and primality") {
  const Modulus q(7);
  CHECK(q.is_prime());
  CHECK_FALSE(Modulus(12).is_prime());
  CHECK_THROWS_AS(Modulus(1), InvalidParameters);
  CHECK(Modulus(65537).is_prime());
  CHECK(q.reduce(-1) == 6);
  CHECK(q.reduce(15) == 1);
  CHECK(q.add(5, 4) == 2);
  CHECK(q.sub(2, 5) == 4);
  CHECK(q.neg(3) == 4);
  CHECK(q.mul(3, 5) == 1);
  CHECK(q.pow(3, 6) == 1);
  CHECK(q.centered(4) == -3);
  CHECK(q.centered(3) == 3);
  for (Residue a = 1; a < 7; ++a) CHECK(q.mul(a, q.inv(a)) == 1);
  CHECK_THROWS_AS(Modulus(12).inv(5), CompositeModulus);
  CHECK_THROWS_AS(q.inv(0), Error);
}

TEST_CASE("trial division agrees with a sieve below 2000") {
  std::vector<bool> composite(2000, false);
  for (std::uint64_t i = 2; i < 2000; ++i) {
    if (composite[i]) continue;
    for (std::uint64_t j = i * i; j < 2000; j += i) composite[j] = true;
  }
  for (std::uint64_t i = 2; i < 2000; ++i) CHECK(is_prime_trial_division(i) == !composite[i]);
}

TEST_CASE("vector operations") {
  const Modulus q(5);
  const StateVector u{1, 4, 0};
  const StateVector v{3, 3, 2};
  CHECK(add(u, v, q) == StateVector{4, 2, 2});
  CHECK(sub(u, v, q) == StateVector{3, 1, 3});
  CHECK(scale(2, u, q) == StateVector{2, 3, 0});
  CHECK(vec_op(VecOpKind::add, u, v, 0, q) == add(u, v, q));
  CHECK(dot(u, v, q) == (3 + 12 + 0) % 5);
  CHECK(hamming(u, v) == 3);
  CHECK(hamming(u, u) == 0);
  CHECK_THROWS_AS(add(u, StateVector{1, 2}, q), DimensionMismatch);
  const std::vector<std::int64_t> raw{-1, 7, 10};
  CHECK(make_state(raw, q) == StateVector{4, 2, 0});
}

TEST_CASE("matrix rank matches brute-force image size") {
  RandomSource rng(seed_from_u64(11), "rank");
  for (std::uint64_t q : {2, 3, 5}) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t rows = 1 + rng.uniform_below(3);
      const std::size_t cols = 1 + rng.uniform_below(4);
      FieldMatrix a(rows, cols, Modulus(q));
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) a(r, c) = static_cast<Residue>(rng.uniform_below(q));
      const auto rank = mat_rank(a);
      CHECK(image_size(a) == static_cast<std::size_t>(std::llround(std::pow(double(q), double(rank)))));
    }
  }
}

TEST_CASE("affine solve: particular solution and kernel dimension") {
  RandomSource rng(seed_from_u64(12), "solve");
  const Modulus q(3);
  for (int trial = 0; trial < 30; ++trial) {
    FieldMatrix a(2, 3, q);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 3; ++c) a(r, c) = static_cast<Residue>(rng.uniform_below(3));
    const std::vector<Residue> c{static_cast<Residue>(rng.uniform_below(3)), 1};
    const std::vector<Residue> y{static_cast<Residue>(rng.uniform_below(3)), 2};
    // Count solutions by brute force.
    std::size_t count = 0;
    for (Residue v0 = 0; v0 < 3; ++v0)
      for (Residue v1 = 0; v1 < 3; ++v1)
        for (Residue v2 = 0; v2 < 3; ++v2) {
          const auto av = a.apply(std::vector<Residue>{v0, v1, v2});
          count += q.add(av[0], c[0]) == y[0] && q.add(av[1], c[1]) == y[1];
        }
    const auto sol = solve_affine(a, c, y);
    if (count == 0) {
      CHECK_FALSE(sol.has_value());
      continue;
    }
    REQUIRE(sol.has_value());
    const auto av = a.apply(sol->particular);
    CHECK(q.add(av[0], c[0]) == y[0]);
    CHECK(q.add(av[1], c[1]) == y[1]);
    CHECK(sol->rank == mat_rank(a));
    CHECK(count == static_cast<std::size_t>(std::llround(std::pow(3.0, double(sol->kernel_basis.size())))));
    for (const auto& k : sol->kernel_basis) {
      for (auto e : a.apply(k)) CHECK(e == 0);
    }
  }
}

TEST_CASE("composite moduli are refused by the matrix layer") {
  CHECK_THROWS_AS(FieldMatrix(2, 2, Modulus(12)), CompositeModulus);
  CHECK(FieldMatrix::identity(3, Modulus(5)).apply(std::vector<Residue>{1, 2, 3}) ==
        std::vector<Residue>{1, 2, 3});
}
