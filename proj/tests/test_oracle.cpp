#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "nhp/encoding.hpp"
#include "nhp/oracle.hpp"
#include "nhp/pathgen.hpp"

using namespace nhp;

namespace {

// Exhaustive count of sequences in D^T with sum = b - a, by odometer.
std::uint64_t brute_endpoint(const std::vector<StateVector>& d, std::size_t T, const StateVector& a,
                             const StateVector& b, const Modulus& q) {
  std::vector<std::size_t> idx(T, 0);
  std::uint64_t count = 0;
  while (true) {
    StateVector s = a;
    for (auto i : idx) s = add(s, d[i], q);
    count += s == b;
    std::size_t k = 0;
    while (k < T && ++idx[k] == d.size()) idx[k++] = 0;
    if (k == T) break;
  }
  return count;
}

std::uint64_t brute_sphere(std::uint64_t n, std::uint64_t k, std::uint64_t q) {
  std::uint64_t total = 1, count = 0;
  for (std::uint64_t i = 0; i < n; ++i) total *= q;
  for (std::uint64_t v = 0; v < total; ++v) {
    std::uint64_t t = v, w = 0;
    for (std::uint64_t i = 0; i < n; ++i, t /= q) w += (t % q) != 0;
    count += w == k;
  }
  return count;
}

}  // namespace

TEST_SUITE("support") {
  TEST_CASE("twelve objects for q=3, T=2, b=2, r=1, free x0") {
    auto p = fx::params(3, 1, 2, {{1}, {2}}, {{0}}, 0, false);
    const auto s = enumerate_support(p);
    CHECK(s.size() == 12);
    CHECK(p.support_size() == 12);
    CHECK(std::set<MicroObject>(s.begin(), s.end()).size() == 12);
  }

  TEST_CASE("toy count 1296") {
    const auto p = fx::toy_1296();
    CHECK(enumerate_support(p).size() == 1296);
  }

  TEST_CASE("enumerator index round trip") {
    auto p = fx::params(5, 2, 2, {{1, 0}, {0, 1}}, {{0, 0}, {1, 1}, {2, 2}}, 1, false);
    const SupportEnumerator en(p);
    CHECK(en.size() == 25 * 6 * 6 * 9 * 9);
    RandomSource rng(p.seed, "idx");
    for (int t = 0; t < 500; ++t) {
      const auto i = rng.uniform_below(en.size());
      const auto x = en.at(i);
      CHECK(is_admissible(x, p));
      CHECK(en.index_of(x) == i);
    }
    auto outside = en.at(0);
    outside.macro_idx[0] = 7;
    CHECK_FALSE(en.index_of(outside).has_value());
  }

  TEST_CASE("cap is enforced with the exact count") {
    auto p = fx::params(101, 1, 10, {{-1}, {1}}, {{-1}, {0}, {1}});
    try {
      (void)enumerate_support(p, EnumerationGuard{BigCount(1000)});
      FAIL("expected CapExceeded");
    } catch (const CapExceeded& e) {
      CHECK(e.required_count == "60466176");
    }
  }
}

TEST_SUITE("counts") {
  TEST_CASE("history counts") {
    CHECK(count_histories(256, 1, 1, 256, 1, 2, false) == pow2(2048));
    CHECK(count_histories(256, 256, 16, 256, 1, 2, false) == pow2(5120));
    CHECK(count_histories(2, 3, 1, 4, 1, 101, false) == 1296);
    CHECK(count_histories(2, 1, 1, 2, 1, 3, true) == 12);
  }

  TEST_CASE("endpoint count example: q=5, D={1,2}, T=3, 0 -> 4") {
    const Modulus q(5);
    const std::vector<StateVector> d{{1}, {2}};
    CHECK(endpoint_count_dp(d, 3, StateVector{0}, StateVector{4}, q, 1) == 3);
    CHECK(endpoint_count_characters(d, 3, StateVector{0}, StateVector{4}, q, 1).real() == doctest::Approx(3.0));
    CHECK(brute_endpoint(d, 3, StateVector{0}, StateVector{4}, q) == 3);
  }

  TEST_CASE("displacement counts sum to |D|^T") {
    const Modulus q(7);
    const std::vector<StateVector> d{{1, 0}, {0, 3}, {6, 6}};
    const auto c = displacement_counts(d, 4, q, 2);
    BigCount total = 0;
    for (const auto& v : c) total += v;
    CHECK(total == 81);
  }

  TEST_CASE("characters, convolution and brute force agree") {
    RandomSource rng(seed_from_u64(31), "endpoint");
    for (std::uint64_t qv : {3, 5, 7}) {
      const Modulus q(qv);
      for (std::size_t n : {1, 2}) {
        const std::size_t size = 1 + rng.uniform_below(4);
        std::set<StateVector> ds;
        while (ds.size() < size) {
          StateVector v(n);
          for (std::size_t k = 0; k < n; ++k) v[k] = static_cast<Residue>(rng.uniform_below(qv));
          ds.insert(v);
        }
        const std::vector<StateVector> d(ds.begin(), ds.end());
        const std::size_t T = 1 + rng.uniform_below(4);
        const auto a = index_state(rng.uniform_below(qv), q, n);
        const auto b = index_state(rng.uniform_below(qv), q, n);
        const auto dp = endpoint_count_dp(d, T, a, b, q, n);
        CHECK(std::abs(endpoint_count_characters(d, T, a, b, q, n).real() - dp.convert_to<double>()) < 1e-6);
        CHECK(dp == brute_endpoint(d, T, a, b, q));
      }
    }
  }

  TEST_CASE("character formula refuses composite q") {
    const std::vector<StateVector> d{{1}};
    CHECK_THROWS_AS(endpoint_count_characters(d, 2, StateVector{0}, StateVector{2}, Modulus(6), 1),
                    CompositeModulus);
  }

  TEST_CASE("multiplicity map for D={0,1}, E={1,2}, q=5") {
    auto p = fx::params(5, 1, 2, {{0}, {1}}, {{1}, {2}});
    const auto mm = multiplicity_map(p);
    CHECK(mm.at(StateVector{0}) == 0);
    CHECK(mm.at(StateVector{1}) == 1);
    CHECK(mm.at(StateVector{2}) == 2);
    CHECK(mm.at(StateVector{3}) == 1);
    CHECK(mm.at(StateVector{4}) == 0);
    CHECK(mm.total() == 4);
    const std::vector<StateVector> inc{{2}, {2}};
    CHECK(mm.history_multiplicity(inc) == 4);
  }

  TEST_CASE("state index is little-endian mixed radix") {
    const Modulus q(5);
    CHECK(state_index(StateVector{2, 3}, q) == 2 + 3 * 5);
    CHECK(index_state(17, q, 2) == StateVector{2, 3});
  }

  TEST_CASE("projection fibers: 27 free, 3 with fixed endpoints") {
    const Modulus q(3);
    const std::vector<StateVector> path{{1}, {0}, {2}};
    CHECK(projection_fiber_count(2, 1, 2, q, false) == 27);
    CHECK(projection_fiber_count(2, 1, 2, q, true) == 3);
    CHECK(projection_preimage_enumerate(2, 1, 2, q, path, std::nullopt) == 27);
    const auto ends = std::make_pair(StateVector{1, 1}, StateVector{2, 0});
    CHECK(projection_preimage_enumerate(2, 1, 2, q, path, ends) == 3);
    // Endpoints that disagree with the projected path have no preimage.
    const auto bad = std::make_pair(StateVector{0, 1}, StateVector{2, 0});
    CHECK(projection_preimage_enumerate(2, 1, 2, q, path, bad) == 0);

    const auto proj = FieldMatrix::from_rows({{1, 0}}, q);
    CHECK(projection_fiber_count(proj, 2, path, std::nullopt) == 27);
    CHECK(projection_fiber_count(proj, 2, path, ends) == 3);
    CHECK(projection_fiber_count(proj, 2, path, bad) == 0);
  }

  TEST_CASE("hamming sphere sizes") {
    CHECK(hamming_sphere_size(4, 2, 3) == 24);
    for (std::uint64_t q = 2; q <= 5; ++q)
      for (std::uint64_t n = 1; n <= 6; ++n) {
        BigCount ball = 0;
        for (std::uint64_t k = 0; k <= n; ++k) {
          CHECK(hamming_sphere_size(n, k, q) == brute_sphere(n, k, q));
          ball += hamming_sphere_size(n, k, q);
          CHECK(hamming_ball_size(n, k, q) == ball);
        }
        CHECK(ball == big_pow(BigCount(q), n));
      }
  }

  TEST_CASE("hamming concentration") {
    RandomSource rng(seed_from_u64(5), "conc");
    const auto r = hamming_concentration_check(64, 2, 20000, rng);
    CHECK(r.expected_mean == doctest::Approx(32.0));
    CHECK(r.mean_ok);
    CHECK(r.tail_ok);
    CHECK_THROWS(hamming_concentration_check(8, 2, 10, rng));
  }
}

TEST_SUITE("fibers") {
  TEST_CASE("fiber table partitions the support") {
    const auto p = fx::linear_toy(1);
    const auto t = build_fiber_table(p);
    std::size_t total = 0;
    std::uint64_t sq = 0;
    for (const auto& fb : t.fibers()) {
      total += fb.members.size();
      sq += fb.members.size() * fb.members.size();
      for (auto i : fb.members) {
        CHECK(eval_observable(p.require_family(), t.object(i), p) == fb.y);
        CHECK(t.fiber_index(i) == static_cast<std::size_t>(&fb - t.fibers().data()));
      }
    }
    CHECK(total == t.support_size());
    const auto rep = identifiability_report(t);
    CHECK(rep.sum_sq_fiber == sq);
    CHECK(rep.avg_fiber_seen * double(rep.support_size) == doctest::Approx(double(sq)));
    CHECK_FALSE(rep.injective);
    const auto fb = t.fiber_of(t.fibers().front().y);
    CHECK(fb.size() == t.fibers().front().members.size());
  }

  TEST_CASE("worker count does not change the table") {
    const auto p = fx::nonlinear_toy(5, 2);
    const auto a = build_fiber_table(p, EnumerationGuard{}, 1);
    const auto b = build_fiber_table(p, EnumerationGuard{}, 4);
    REQUIRE(a.image_size() == b.image_size());
    for (std::size_t i = 0; i < a.image_size(); ++i) {
      CHECK(a.fibers()[i].key == b.fibers()[i].key);
      CHECK(a.fibers()[i].members == b.fibers()[i].members);
    }
  }

  TEST_CASE("all-states observable: fibers are same-path classes") {
    auto p = fx::params(5, 1, 2, {{0}, {1}}, {{1}, {2}});
    p = fx::with_family(p, make_all_states(p.dims(), 3));
    const auto t = build_fiber_table(p);
    CHECK(quotient_identifiability_check(t).holds);
    // 16 objects, paths determined by the effective increments in {1,2,3}^2: 9 classes.
    CHECK(t.support_size() == 16);
    CHECK(t.image_size() == 9);
    for (std::size_t i = 0; i < t.support_size(); ++i) {
      const auto c = canonical_representative(t.object(i), t);
      CHECK(iterate_path(c, p) == iterate_path(t.object(i), p));
      CHECK(encode_object(c, p) <= encode_object(t.object(i), p));
    }
  }

  TEST_CASE("telescoping observable is not quotient-identifiable") {
    const auto p = fx::telescoping_toy();
    const auto t = build_fiber_table(p);
    const auto r = quotient_identifiability_check(t);
    CHECK_FALSE(r.holds);
    REQUIRE(r.counterexample.has_value());
    const auto [i, j] = *r.counterexample;
    CHECK(t.fiber_index(i) == t.fiber_index(j));
    CHECK(iterate_path(t.object(i), p) != iterate_path(t.object(j), p));
  }

  TEST_CASE("observation-noise overlap") {
    auto p = fx::params(7, 1, 2, {{1}, {2}}, {{0}, {1}}, 0, true, 3);
    const auto quiet = make_quantized_real(p.dims(), 4, 16, 0.25, NoiseSpec{}, p.seed);
    const auto pq = fx::with_family(p, quiet);
    const auto injective = identifiability_report(build_fiber_table(pq)).injective;
    CHECK(obs_noise_overlap_check(quiet, pq).identifiable == injective);

    const auto loud = make_quantized_real(p.dims(), 4, 16, 0.25, NoiseSpec{3.0, 20, true}, p.seed);
    const auto r = obs_noise_overlap_check(loud, fx::with_family(p, loud));
    CHECK_FALSE(r.identifiable);
    CHECK(r.colliding_pair.has_value());

    CHECK_THROWS_AS(obs_noise_overlap_check(make_telescoping(p.dims(), 3), p), NotApplicable);
  }
}
