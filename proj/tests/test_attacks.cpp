#include <doctest.h>

#include <filesystem>
#include <set>

#include "fixtures.hpp"
#include "nhp/attacks.hpp"
#include "nhp/pathgen.hpp"

using namespace nhp;

namespace {

bool is_witness(const AttackReport& r) {
  return r.outcome == Outcome::planted_recovered || r.outcome == Outcome::witness_found;
}

ParameterSet energy_toy(std::uint64_t seed = 4) {
  auto p = fx::params(5, 1, 3, {{1}, {2}}, {{0}, {1}}, 0, true, seed);
  return fx::with_family(p, make_transition_energy(p.dims(), 2, min_entry_width(p.modulus), p.seed));
}

}  // namespace

TEST_SUITE("vectorizer") {
  TEST_CASE("round trip and block selection") {
    auto p = fx::params(7, 2, 3, {{1, 0}, {0, 1}}, {{0, 0}, {1, 6}}, 1, false, 2);
    const ObjectVectorizer vec(p);
    // x0 (2) + macro (3 * 2) + micro (3 * 2) + noise (3 * 2).
    CHECK(vec.dimension() == 20);
    RandomSource rng(p.seed, "vec");
    for (int i = 0; i < 200; ++i) {
      const auto x = sample_object(p, rng);
      const auto v = vec.to_vector(x);
      CHECK(vec.to_object(v) == x);
      CHECK(vec.realize_vector(v).states == iterate_path(x, p));
    }
    // A macro block outside D has no object.
    auto v = vec.to_vector(sample_object(p, rng));
    v[2] = 3;
    v[3] = 3;
    CHECK_FALSE(vec.to_object(v).has_value());

    const auto fixed = fx::params(7, 1, 2, {{1}}, {{0}});
    CHECK(ObjectVectorizer(fixed).dimension() == 0);
  }

  TEST_CASE("aliasing noise is refused") {
    auto p = fx::params(5, 1, 2, {{1}, {2}}, {{0}}, 2);
    p.modulus = Modulus(4);
    CHECK_THROWS_AS(ObjectVectorizer{p}, AliasError);
  }
}

TEST_SUITE("linear") {
  TEST_CASE("linear family is fit exactly and collapses to its fiber") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto p = fx::linear_toy(2, seed);
      const auto& f = p.require_family();
      RandomSource rng(p.seed, "fit");
      const auto model = affine_surrogate_fit(f, p, 32, rng);
      CHECK(model.exact);
      CHECK(model.residual == 0);

      const auto table = build_fiber_table(p);
      for (int trial = 0; trial < 10; ++trial) {
        const auto x = sample_object(p, rng);
        const auto y = eval_observable(f, x, p);
        const auto rep = linear_collapse(model, f, p, y, x, rng);
        CHECK(is_witness(rep));
        REQUIRE(rep.candidate.has_value());
        CHECK(eval_observable(f, *rep.candidate, p) == y);
        // The exhaustive coset scan counts exactly the fiber.
        CHECK(std::stoull(rep.details.at("admissible_in_coset")) == table.fiber_of(y).size());
      }
    }
  }

  TEST_CASE("nonlinear family is not affine") {
    const auto p = fx::nonlinear_toy();
    RandomSource rng(p.seed, "fit");
    const auto model = affine_surrogate_fit(p.require_family(), p, 64, rng);
    CHECK_FALSE(model.exact);
    CHECK(model.residual > 0);
    const auto x = sample_object(p, rng);
    CHECK_THROWS_AS(linear_collapse(model, p.require_family(), p, eval_observable(p.require_family(), x, p), x, rng),
                    InvalidParameters);
  }

  TEST_CASE("affine fit refusals") {
    auto p = fx::params(12, 1, 2, {{1}, {2}}, {{0}, {1}});
    p = fx::with_family(p, make_linear_projected(p.dims(), 2, min_entry_width(p.modulus), p.seed));
    RandomSource rng(p.seed, "fit");
    CHECK_THROWS_AS(affine_surrogate_fit(p.require_family(), p, 8, rng), CompositeModulus);

    auto r = fx::params(7, 1, 2, {{1}, {2}}, {{0}, {1}});
    r = fx::with_family(r, make_quantized_real(r.dims(), 2, 8, 0.5, NoiseSpec{}, r.seed));
    CHECK_THROWS_AS(affine_surrogate_fit(r.require_family(), r, 8, rng), NotApplicable);
  }
}

TEST_SUITE("dp") {
  TEST_CASE("dp recovers a witness for decomposable families") {
    for (const auto& p : {energy_toy(), fx::linear_toy(2, 3), fx::telescoping_toy()}) {
      const auto& f = p.require_family();
      RandomSource rng(p.seed, "dp");
      for (int trial = 0; trial < 10; ++trial) {
        const auto x = sample_object(p, rng);
        const auto y = eval_observable(f, x, p);
        const auto rep = dp_collapse(f, p, y, x);
        CHECK(is_witness(rep));
        REQUIRE(rep.candidate.has_value());
        CHECK(is_admissible(*rep.candidate, p));
        CHECK(eval_observable(f, *rep.candidate, p) == y);
        CHECK(rep.work.table_entries <= std::stoull(rep.details.at("table_bound")));
      }
    }
  }

  TEST_CASE("dp reports unreachable targets") {
    const auto p = energy_toy();
    const auto& f = p.require_family();
    const auto table = build_fiber_table(p);
    // Find a Y outside the image.
    PublicObservable y = table.fibers().front().y;
    bool found = false;
    for (Residue a = 0; a < 5 && !found; ++a)
      for (Residue b = 0; b < 5 && !found; ++b) {
        y.entries = {a, b};
        found = table.fiber_of(y).empty();
      }
    REQUIRE(found);
    const auto rep = dp_collapse(f, p, y, std::nullopt);
    CHECK(rep.outcome == Outcome::failed);
    CHECK(rep.details.at("reachable") == "false");
  }

  TEST_CASE("dp is not applicable to the nonlinear family, and respects its budget") {
    const auto p = fx::nonlinear_toy();
    RandomSource rng(p.seed, "dp");
    const auto x = sample_object(p, rng);
    const auto y = eval_observable(p.require_family(), x, p);
    CHECK(dp_collapse(p.require_family(), p, y, x).outcome == Outcome::not_applicable);

    const auto e = energy_toy();
    const auto ye = eval_observable(e.require_family(), sample_object(e, rng), e);
    CHECK_THROWS_AS(dp_collapse(e.require_family(), e, ye, std::nullopt, 100), BudgetExceeded);
  }
}

TEST_SUITE("mitm") {
  TEST_CASE("collect-all recovers the whole fiber of a separable family") {
    const auto p = fx::linear_toy(2, 5);
    const auto& f = p.require_family();
    const auto table = build_fiber_table(p);
    RandomSource rng(p.seed, "mitm");
    for (std::size_t t = 0; t <= p.T; ++t) {
      const auto x = sample_object(p, rng);
      const auto y = eval_observable(f, x, p);
      const auto res = mitm_split(f, p, t, y, x, rng, MitmOptions{32, true});
      CHECK(is_witness(res.report));
      const auto fiber = table.fiber_of(y);
      const std::set<MicroObject> want(fiber.begin(), fiber.end());
      CHECK(std::set<MicroObject>(res.witnesses.begin(), res.witnesses.end()) == want);
    }
  }

  TEST_CASE("nonlinear family is not separable at an interior split") {
    const auto p = fx::nonlinear_toy(6);
    RandomSource rng(p.seed, "mitm");
    const auto x = sample_object(p, rng);
    const auto y = eval_observable(p.require_family(), x, p);
    const auto res = mitm_split(p.require_family(), p, 3, y, x, rng);
    CHECK(res.report.outcome == Outcome::not_applicable);
    CHECK_THROWS_AS(mitm_split(p.require_family(), p, 7, y, x, rng), InvalidParameters);
    CHECK_THROWS_AS(mitm_split(p.require_family(), p, 3, y, x, rng, MitmOptions{32, false, 10}),
                    BudgetExceeded);
  }
}

TEST_SUITE("local search and bayes") {
  TEST_CASE("local search started at the planted object stops at once") {
    const auto p = fx::nonlinear_toy();
    RandomSource rng(p.seed, "ls");
    const auto x = sample_object(p, rng);
    const auto y = eval_observable(p.require_family(), x, p);
    const auto rep = local_search_round(p.require_family(), p, y, x, rng, LocalSearchOptions{100, 1, x});
    CHECK(rep.outcome == Outcome::planted_recovered);
    CHECK(rep.details.at("observable_distance") == "0");

    const auto none = local_search_round(p.require_family(), p, y, x, rng, LocalSearchOptions{0, 1, {}});
    CHECK(none.outcome == Outcome::failed);
  }

  TEST_CASE("local search respects its budget") {
    const auto p = fx::nonlinear_toy(8);
    RandomSource rng(p.seed, "ls");
    const auto x = sample_object(p, rng);
    const auto y = eval_observable(p.require_family(), x, p);
    const auto rep = local_search_round(p.require_family(), p, y, x, rng, LocalSearchOptions{500, 4, {}});
    CHECK(rep.work.evaluations <= 500);
  }

  TEST_CASE("observable distance") {
    PublicObservable a, b;
    a.entries = {1, 2, 3};
    b.entries = {1, 0, 4};
    CHECK(observable_distance(a, b) == 2);
  }

  TEST_CASE("bayes fiber guess lands in the fiber") {
    const auto p = fx::linear_toy(1, 2);
    const auto table = build_fiber_table(p);
    RandomSource rng(p.seed, "bayes");
    for (int i = 0; i < 50; ++i) {
      const auto x = sample_object(p, rng);
      const auto y = eval_observable(p.require_family(), x, p);
      const auto rep = bayes_fiber_guess(y, table, x, rng);
      REQUIRE(rep.candidate.has_value());
      CHECK(eval_observable(p.require_family(), *rep.candidate, p) == y);
    }
    PublicObservable bad = table.fibers().front().y;
    bad.entries[0] = 7;
    CHECK_THROWS_AS(bayes_fiber_guess(bad, table, std::nullopt, rng), InvalidParameters);
  }
}

TEST_SUITE("structure detectors") {
  TEST_CASE("telescoping detector") {
    const auto t = fx::telescoping_toy();
    RandomSource rng(t.seed, "tele");
    CHECK(telescoping_detector(t.require_family(), t, rng, 200).flagged);

    const auto lin = fx::linear_toy(3);
    const auto r = telescoping_detector(lin.require_family(), lin, rng, 200);
    CHECK_FALSE(r.flagged);
    REQUIRE(r.distinguishing_pair.has_value());
    const auto& [a, b] = *r.distinguishing_pair;
    CHECK(iterate_path(a, lin).back() == iterate_path(b, lin).back());
  }

  TEST_CASE("distinguisher accepts uniform keys and rejects a stuck entry") {
    RandomSource rng(seed_from_u64(17), "dist");
    std::vector<PublicObservable> keys(400);
    for (auto& k : keys) {
      k.ell = 4;
      k.entries = {rng.uniform_below(11), rng.uniform_below(11), rng.uniform_below(11)};
    }
    const std::vector<std::uint64_t> ranges(3, 11);
    const auto ok = multi_instance_distinguisher(keys, ranges);
    CHECK_FALSE(ok.reject);
    CHECK(ok.tests == 3 + 3);

    for (auto& k : keys) k.entries[1] = rng.uniform_below(2);
    CHECK(multi_instance_distinguisher(keys, ranges).reject);

    keys.resize(50);
    CHECK_THROWS_AS(multi_instance_distinguisher(keys, ranges), InvalidParameters);
  }

  TEST_CASE("reference ranges") {
    const auto p = fx::linear_toy(2);
    CHECK(reference_ranges(p.require_family()) == std::vector<std::uint64_t>{5, 5});
  }
}

TEST_CASE("constraint instance round trip") {
  const auto p = energy_toy();
  RandomSource rng(p.seed, "export");
  const auto y = eval_observable(p.require_family(), sample_object(p, rng), p);
  const auto path = std::filesystem::temp_directory_path() / "nhp_test_instance.yaml";
  export_constraint_instance(p, y, path);
  const auto [p2, y2] = import_constraint_instance(path);
  CHECK(y2 == y);
  CHECK(p2.require_family().fingerprint() == p.require_family().fingerprint());
  CHECK(p2.support_size() == p.support_size());
  std::filesystem::remove(path);
}
