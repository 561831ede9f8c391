#include <doctest.h>

#include <algorithm>
#include <string>

#include "fixtures.hpp"
#include "nhp/experiment.hpp"
#include "nhp/infometrics.hpp"

using namespace nhp;

namespace {

const char* kGrid = R"(version: 1
seed: 42
workers: 1
trials: 300
solvers: [random-guess, bayes-fiber, empty-output]
cells:
  - label: linear-q5
    params:
      q: 5
      n: 1
      T: 3
      macro_alphabet: [[1], [2]]
      micro_alphabet: [[0], [1]]
      boundary: {start: [0]}
      family: {kind: linear_projected, m: 1}
  - label: big
    params:
      q: 257
      n: 2
      T: 12
      macro_alphabet: [[1, 0], [0, 1]]
      micro_alphabet: [[0, 0], [1, 1]]
      family: {kind: nonlinear_local, m: 8}
)";

const ReportRecord* find(const std::vector<ReportRecord>& rs, const std::string& label, const std::string& solver,
                         const std::string& metric) {
  for (const auto& r : rs)
    if (r.label == label && r.solver == solver && r.metric == metric) return &r;
  return nullptr;
}

}  // namespace

TEST_SUITE("grid") {
  TEST_CASE("output does not depend on the worker count") {
    auto g = parse_grid(kGrid);
    const auto one = run_grid(g);
    g.workers = 4;
    const auto four = run_grid(g);
    CHECK(one.records == four.records);
    CHECK(one.partial_cells == 1);
    CHECK(four.partial_cells == 1);
  }

  TEST_CASE("records and their provenance") {
    const auto g = parse_grid(kGrid);
    const auto res = run_grid(g);
    CHECK(std::is_sorted(res.records.begin(), res.records.end(),
                         [](const auto& a, const auto& b) { return a.label < b.label; }));
    for (const auto& r : res.records) {
      CHECK((r.provenance == "formula" || r.provenance == "enumerated" || r.provenance == "measured"));
      CHECK(r.ci_low.has_value() == r.ci_high.has_value());
    }

    const auto* n = find(res.records, "linear-q5", "", "support_size");
    REQUIRE(n);
    CHECK(n->value == "64");

    // bayes-fiber sits at P_guess = |image| / N.
    const auto* img = find(res.records, "linear-q5", "", "image_size");
    REQUIRE(img);
    const double pg = std::stod(img->value) / 64.0;
    const auto* ow = find(res.records, "linear-q5", "bayes-fiber", "ow_advantage");
    REQUIRE(ow);
    REQUIRE(ow->ci_low.has_value());
    CHECK(std::abs(std::stod(ow->value) - pg) < 4 * std::sqrt(pg * (1 - pg) / 300));
    CHECK(find(res.records, "linear-q5", "bayes-fiber", "rel_advantage")->value == "1");

    const auto* empty = find(res.records, "linear-q5", "empty-output", "ow_advantage");
    REQUIRE(empty);
    CHECK(empty->value == "0");
    CHECK(find(res.records, "linear-q5", "empty-output", "outputs")->value == "0");
  }

  TEST_CASE("cells over the cap are skipped with their count") {
    const auto g = parse_grid(kGrid);
    const auto cell = run_grid_cell(g.cells[1], g);
    CHECK(std::find(cell.skipped.begin(), cell.skipped.end(), "oracle: cap-exceeded") != cell.skipped.end());
    const auto* req = find(cell.records, "big", "", "required_count");
    REQUIRE(req);
    CHECK(req->value == g.cells[1].params.support_size().str());
    // bayes-fiber needs the table; random-guess still runs.
    const auto* skip = find(cell.records, "big", "bayes-fiber", "skipped");
    REQUIRE(skip);
    CHECK(find(cell.records, "big", "random-guess", "trials") != nullptr);
  }

  TEST_CASE("table records match the information metrics") {
    const auto p = fx::linear_toy(2);
    const auto t = build_fiber_table(p);
    const auto recs = table_records(t, "x");
    const auto* h = find(recs, "x", "", "conditional_entropy_bits");
    REQUIRE(h);
    CHECK(std::stod(h->value) == doctest::Approx(conditional_entropy(t)).epsilon(1e-9));
    CHECK(find(recs, "x", "", "security_caveat")->value == "post-structural-attack only");
  }
}

TEST_SUITE("checklist") {
  TEST_CASE("nonlinear toy survives") {
    const auto p = parse_params(R"(q: 101
n: 1
T: 6
macro_alphabet: [[-1], [1]]
micro_alphabet: [[-1], [0], [1]]
boundary: {start: [0]}
seed: 7
family: {kind: nonlinear_local, m: 6}
)");
    const auto rep = run_checklist(p);
    CHECK(rep.verdict == "survives implemented filters");
    REQUIRE(rep.items.size() == 15);
    CHECK(rep.items.front().id == "i");
    CHECK(rep.items.back().id == "xv");
    for (const auto& it : rep.items) CHECK(it.status != ItemStatus::fail);
    CHECK(rep.items[2].status == ItemStatus::delegated);
  }

  TEST_CASE("telescoping family is rejected by the affine fit") {
    const auto rep = run_checklist(fx::telescoping_toy());
    CHECK(rep.verdict == "reject: linear collapse");
    CHECK(rep.items[1].status == ItemStatus::fail);
  }

  TEST_CASE("composite modulus makes the affine item not applicable") {
    auto p = fx::params(12, 1, 3, {{1}, {5}}, {{0}, {1}}, 1, true, 5);
    p = fx::with_family(p, make_transition_energy(p.dims(), 3, min_entry_width(p.modulus), p.seed));
    const auto rep = run_checklist(p);
    CHECK(rep.items[1].status == ItemStatus::not_applicable);
    const auto text = format_checklist(rep);
    CHECK(text.find("not-applicable") != std::string::npos);
  }

  TEST_CASE("checklist records carry a status per item plus the verdict") {
    const auto rep = run_checklist(fx::telescoping_toy());
    const auto recs = checklist_records(rep, "t");
    const auto statuses = std::count_if(recs.begin(), recs.end(), [](const auto& r) { return r.metric == "status"; });
    CHECK(static_cast<std::size_t>(statuses) == rep.items.size());
    CHECK(recs.back().metric == "verdict");
    CHECK(recs.back().value == rep.verdict);
    CHECK(find(recs, "t", "item-ii", "status")->value == "fail");
  }
}
