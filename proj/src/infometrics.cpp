#include "nhp/infometrics.hpp"

#include <algorithm>
#include <cmath>

#include "nhp/encoding.hpp"
#include "nhp/pathgen.hpp"

namespace nhp {

PosteriorStats posterior_stats(std::span<const std::uint64_t> fiber_sizes) {
  PosteriorStats st;
  st.fiber_sizes.assign(fiber_sizes.begin(), fiber_sizes.end());
  std::uint64_t min_k = 0;
  for (auto k : fiber_sizes) {
    if (k == 0) throw InvalidParameters("fiber sizes must be positive");
    st.support_size += k;
    min_k = min_k == 0 ? k : std::min(min_k, k);
  }
  if (st.support_size == 0) throw InvalidParameters("empty fiber table");
  st.image_size = fiber_sizes.size();
  st.conditional_entropy = conditional_entropy(fiber_sizes);
  st.p_guess = static_cast<double>(st.image_size) / static_cast<double>(st.support_size);
  st.min_entropy_worst = std::log2(static_cast<double>(min_k));
  st.min_entropy_average = -std::log2(st.p_guess);
  return st;
}

namespace {

std::vector<std::uint64_t> sizes_of(const FiberTable& table) {
  std::vector<std::uint64_t> ks;
  ks.reserve(table.image_size());
  for (const auto& fb : table.fibers()) ks.push_back(fb.members.size());
  return ks;
}

}  // namespace

PosteriorStats posterior_stats(const FiberTable& table) { return posterior_stats(sizes_of(table)); }

double conditional_entropy(std::span<const std::uint64_t> fiber_sizes) {
  std::uint64_t n = 0;
  for (auto k : fiber_sizes) n += k;
  if (n == 0) throw InvalidParameters("empty fiber table");
  double h = 0.0;
  for (auto k : fiber_sizes) {
    if (k > 1) h += static_cast<double>(k) * std::log2(static_cast<double>(k));
  }
  return h / static_cast<double>(n);
}

double conditional_entropy(const FiberTable& table) { return conditional_entropy(sizes_of(table)); }

GuessingReport guessing_probability(const FiberTable& table) {
  const auto st = posterior_stats(table);
  return GuessingReport{st.p_guess, st.min_entropy_worst, st.min_entropy_average};
}

namespace {

void check_prior(const FiberTable& table, std::span<const double> prior) {
  if (prior.size() != table.support_size()) throw DimensionMismatch("prior size != support size");
  double total = 0.0;
  for (double p : prior) {
    if (!(p >= 0.0)) throw InvalidParameters("prior has a negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidParameters("prior does not sum to 1");
}

}  // namespace

double conditional_entropy(const FiberTable& table, std::span<const double> prior) {
  check_prior(table, prior);
  double h = 0.0;
  for (const auto& fb : table.fibers()) {
    double w = 0.0;
    for (auto i : fb.members) w += prior[i];
    if (w <= 0.0) continue;
    for (auto i : fb.members) {
      if (prior[i] > 0.0) h -= prior[i] * std::log2(prior[i] / w);
    }
  }
  return h;
}

std::vector<double> generator_prior(const FiberTable& table) {
  std::vector<double> prior(table.support_size());
  double total = 0.0;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    prior[i] = sample_probability(table.object(i), table.params());
    total += prior[i];
  }
  // Removes float drift; the exact masses already sum to 1 over a full support.
  for (auto& v : prior) v /= total;
  return prior;
}

double fiber_pick_success(const FiberTable& table, std::span<const double> prior) {
  check_prior(table, prior);
  double s = 0.0;
  for (const auto& fb : table.fibers()) {
    double w = 0.0;
    for (auto i : fb.members) w += prior[i];
    s += w / static_cast<double>(fb.members.size());
  }
  return s;
}

double guessing_probability(const FiberTable& table, std::span<const double> prior) {
  check_prior(table, prior);
  double pg = 0.0;
  for (const auto& fb : table.fibers()) {
    double best = 0.0;
    for (auto i : fb.members) best = std::max(best, prior[i]);
    pg += best;
  }
  return pg;
}

std::uint64_t list_size(std::uint64_t fiber_size, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw InvalidParameters("delta must lie in [0, 1]");
  // The small slack keeps products such as 0.9 * 10 from rounding up past an integer.
  const double need = (1.0 - delta) * static_cast<double>(fiber_size);
  const auto l = static_cast<std::uint64_t>(std::ceil(need - 1e-9));
  return std::clamp<std::uint64_t>(l, 1, std::max<std::uint64_t>(fiber_size, 1));
}

std::uint64_t list_size(const FiberTable& table, const PublicObservable& y, double delta) {
  const Fiber* fb = table.find(y);
  if (fb == nullptr) throw InvalidParameters("observable value is not in the image");
  return list_size(fb->members.size(), delta);
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double fano_bound(double h_cond, std::uint64_t n) {
  if (n < 2) throw InvalidParameters("Fano bound needs N >= 2");
  return std::max(0.0, (h_cond - 1.0) / std::log2(static_cast<double>(n)));
}

bool fano_feasible(double p_error, double h_cond, std::uint64_t n, double tol) {
  if (n < 2) throw InvalidParameters("Fano bound needs N >= 2");
  const double rhs = binary_entropy(p_error) + p_error * std::log2(static_cast<double>(n - 1));
  return h_cond <= rhs + tol;
}

BigCount digest_bound(std::uint64_t n_bits, std::uint64_t ell) {
  return n_bits > ell ? pow2(n_bits - ell) : BigCount(1);
}

CollisionExpectation random_collision_expectation(std::uint64_t n, std::uint64_t m) {
  if (n < 2 || m < 1) throw InvalidParameters("collision expectation needs N >= 2, M >= 1");
  CollisionExpectation ce;
  ce.pairs = BigCount(n) * (n - 1) / 2;
  ce.range = m;
  ce.value = static_cast<double>(ce.pairs) / static_cast<double>(m);
  return ce;
}

MonteCarloEstimate random_collision_monte_carlo(std::uint64_t n, std::uint64_t m,
                                                std::size_t trials, RandomSource& rng) {
  if (n < 2 || m < 1 || trials < 2) throw InvalidParameters("bad Monte Carlo parameters");
  std::vector<std::uint64_t> vals(n);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& v : vals) v = rng.uniform_below(m);
    std::sort(vals.begin(), vals.end());
    double pairs = 0.0;
    for (std::size_t i = 0; i < vals.size();) {
      std::size_t j = i;
      while (j < vals.size() && vals[j] == vals[i]) ++j;
      const double run = static_cast<double>(j - i);
      pairs += run * (run - 1.0) / 2.0;
      i = j;
    }
    sum += pairs;
    sum_sq += pairs * pairs;
  }
  const double tn = static_cast<double>(trials);
  const double mean = sum / tn;
  const double var = std::max(0.0, (sum_sq - tn * mean * mean) / (tn - 1.0));
  return MonteCarloEstimate{mean, std::sqrt(var / tn), trials};
}

SecurityEstimate security_bits(double p_guess, std::uint64_t public_bits) {
  if (!(p_guess > 0.0 && p_guess <= 1.0)) throw InvalidParameters("P_guess must lie in (0, 1]");
  SecurityEstimate se;
  se.classical_bits = p_guess == 1.0 ? 0.0 : -std::log2(p_guess);
  se.quantum_bits = se.classical_bits / 2.0;
  se.public_bits = public_bits;
  return se;
}

double min_entropy(std::span<const double> probs) {
  double total = 0.0, best = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw InvalidParameters("probability table has a negative entry");
    total += p;
    best = std::max(best, p);
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidParameters("probability table is not normalized");
  return -std::log2(best);
}

AdditivityResult min_entropy_additivity_check(const std::vector<std::vector<double>>& steps,
                                              double tol) {
  AdditivityResult res;
  double outcomes = 1.0;
  for (const auto& s : steps) {
    res.sum_of_parts += min_entropy(s);
    outcomes *= static_cast<double>(s.size());
  }
  if (outcomes <= double(1 << 20)) {
    std::vector<double> joint{1.0};
    for (const auto& s : steps) {
      std::vector<double> next;
      next.reserve(joint.size() * s.size());
      for (double a : joint) {
        for (double p : s) next.push_back(a * p);
      }
      joint = std::move(next);
    }
    res.joint = -std::log2(*std::max_element(joint.begin(), joint.end()));
  } else {
    double log_max = 0.0;
    for (const auto& s : steps) log_max += std::log2(*std::max_element(s.begin(), s.end()));
    res.joint = -log_max;
  }
  res.holds = std::abs(res.joint - res.sum_of_parts) <= tol;
  return res;
}

bool information_bound_holds(const FiberTable& table) {
  const double n = static_cast<double>(table.support_size());
  const double info = std::log2(n) - conditional_entropy(table);
  const double L = static_cast<double>(table.family().m()) * table.family().ell();
  return info <= L + 1e-9;
}

bool necessary_length_holds(const FiberTable& table) {
  if (!identifiability_report(table).injective) return true;
  const std::uint64_t L = std::uint64_t{table.family().m()} * table.family().ell();
  return L >= ceil_log2(table.support_size());
}

}  // namespace nhp
