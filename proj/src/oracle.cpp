#include "nhp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "nhp/encoding.hpp"
#include "nhp/noise.hpp"

namespace nhp {

void EnumerationGuard::check(const BigCount& count, const char* what) const {
  if (count > cap) {
    throw CapExceeded(std::string(what) + ": " + count.str() + " objects exceed the cap of " +
                          cap.str(),
                      count.str());
  }
}

// ---------------------------------------------------------------------------
// Support enumeration

SupportEnumerator::SupportEnumerator(const ParameterSet& p)
    : q_(p.modulus.value()),
      n_(p.n),
      T_(p.T),
      b_(p.b()),
      r_(p.r()),
      bound_(p.noise.enabled ? p.noise.bound : 0),
      noise_width_(p.noise.coordinate_support()) {
  if (p.boundary) fixed_x0_ = p.boundary->start;
  const BigCount total = p.support_size();
  if (total > (BigCount(1) << 62)) {
    throw CapExceeded("support too large to index: " + total.str(), total.str());
  }
  size_ = static_cast<std::uint64_t>(total);
}

MicroObject SupportEnumerator::at(std::uint64_t index) const {
  if (index >= size_) throw InvalidParameters("support index out of range");
  MicroObject x;
  x.macro_idx.assign(T_, 0);
  x.micro_idx.assign(T_, 0);
  x.noise_lift.assign(T_, std::vector<std::int64_t>(n_, 0));
  // The last digit varies fastest.
  for (std::size_t i = T_; i-- > 0;) {
    for (std::size_t k = n_; k-- > 0;) {
      x.noise_lift[i][k] = static_cast<std::int64_t>(index % noise_width_) - bound_;
      index /= noise_width_;
    }
    x.micro_idx[i] = static_cast<std::uint32_t>(index % r_);
    index /= r_;
    x.macro_idx[i] = static_cast<std::uint32_t>(index % b_);
    index /= b_;
  }
  if (fixed_x0_) {
    x.x0 = *fixed_x0_;
  } else {
    x.x0 = StateVector(n_);
    for (std::size_t k = n_; k-- > 0;) {
      x.x0[k] = static_cast<Residue>(index % q_);
      index /= q_;
    }
  }
  return x;
}

std::optional<std::uint64_t> SupportEnumerator::index_of(const MicroObject& x) const {
  if (x.x0.size() != n_ || x.macro_idx.size() != T_ || x.micro_idx.size() != T_ ||
      x.noise_lift.size() != T_) {
    return std::nullopt;
  }
  std::uint64_t idx = 0;
  if (fixed_x0_) {
    if (x.x0 != *fixed_x0_) return std::nullopt;
  } else {
    for (std::size_t k = 0; k < n_; ++k) {
      if (x.x0[k] >= q_) return std::nullopt;
      idx = idx * q_ + x.x0[k];
    }
  }
  for (std::size_t i = 0; i < T_; ++i) {
    if (x.macro_idx[i] >= b_ || x.micro_idx[i] >= r_ || x.noise_lift[i].size() != n_) {
      return std::nullopt;
    }
    idx = idx * b_ + x.macro_idx[i];
    idx = idx * r_ + x.micro_idx[i];
    for (auto z : x.noise_lift[i]) {
      if (z < -bound_ || z > bound_) return std::nullopt;
      idx = idx * noise_width_ + static_cast<std::uint64_t>(z + bound_);
    }
  }
  return idx;
}

std::vector<MicroObject> enumerate_support(const ParameterSet& p, const EnumerationGuard& guard) {
  p.validate();
  guard.check(p.support_size(), "enumerate_support");
  const SupportEnumerator en(p);
  std::vector<MicroObject> out;
  out.reserve(en.size());
  for (std::uint64_t i = 0; i < en.size(); ++i) out.push_back(en.at(i));
  return out;
}

// ---------------------------------------------------------------------------
// Fiber tables

FiberTable::FiberTable(ParameterSet p, ObservableFamily f, std::vector<MicroObject> support,
                       std::vector<PublicObservable> images)
    : p_(std::move(p)), f_(std::move(f)), enumerator_(p_), support_(std::move(support)) {
  if (support_.size() != images.size()) throw DimensionMismatch("support/image size mismatch");
  std::map<std::vector<std::uint8_t>, std::vector<std::size_t>> groups;
  std::vector<std::vector<std::uint8_t>> keys(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    keys[i] = serialize_public(images[i]);
    groups[keys[i]].push_back(i);
  }
  fibers_.reserve(groups.size());
  fiber_of_object_.assign(support_.size(), 0);
  for (auto& [key, members] : groups) {
    const std::size_t id = fibers_.size();
    for (auto i : members) fiber_of_object_[i] = id;
    by_key_.emplace(key, id);
    fibers_.push_back(Fiber{images[members.front()], key, std::move(members)});
  }
}

std::vector<std::uint8_t> FiberTable::encoding(std::size_t i) const {
  return encode_object(support_.at(i), p_);
}

std::optional<std::size_t> FiberTable::index_of(const MicroObject& x) const {
  auto idx = enumerator_.index_of(x);
  if (!idx || *idx >= support_.size()) return std::nullopt;
  return static_cast<std::size_t>(*idx);
}

const Fiber* FiberTable::find(const PublicObservable& y) const {
  auto it = by_key_.find(serialize_public(y));
  return it == by_key_.end() ? nullptr : &fibers_[it->second];
}

std::vector<MicroObject> FiberTable::fiber_of(const PublicObservable& y) const {
  std::vector<MicroObject> out;
  if (const Fiber* fb = find(y)) {
    for (auto i : fb->members) out.push_back(support_[i]);
  }
  return out;
}

FiberTable build_fiber_table(const ParameterSet& p, const ObservableFamily& f,
                             const EnumerationGuard& guard, unsigned workers) {
  if (!(f.dims() == p.dims())) throw DimensionMismatch("family dimensions do not match P");
  auto support = enumerate_support(p, guard);
  std::vector<PublicObservable> images(support.size());
  workers = std::max(1U, std::min<unsigned>(workers, 64));
  if (workers == 1 || support.size() < 4096) {
    for (std::size_t i = 0; i < support.size(); ++i) images[i] = eval_observable(f, support[i], p);
  } else {
    // Each worker fills a disjoint slice; grouping happens afterwards in index order.
    std::vector<std::thread> pool;
    const std::size_t chunk = (support.size() + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(support.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back([&, lo, hi] {
        for (std::size_t i = lo; i < hi; ++i) images[i] = eval_observable(f, support[i], p);
      });
    }
    for (auto& t : pool) t.join();
  }
  return FiberTable(p, f, std::move(support), std::move(images));
}

FiberTable build_fiber_table(const ParameterSet& p, const EnumerationGuard& guard,
                             unsigned workers) {
  return build_fiber_table(p, p.require_family(), guard, workers);
}

std::vector<MicroObject> fiber_of(const PublicObservable& y, const FiberTable& table) {
  return table.fiber_of(y);
}

IdentifiabilityReport identifiability_report(const FiberTable& table) {
  IdentifiabilityReport rep;
  rep.support_size = table.support_size();
  rep.image_size = table.image_size();
  rep.min_fiber = rep.support_size;
  for (const auto& fb : table.fibers()) {
    const std::size_t k = fb.members.size();
    rep.max_fiber = std::max(rep.max_fiber, k);
    rep.min_fiber = std::min(rep.min_fiber, k);
    rep.sum_sq_fiber += static_cast<std::uint64_t>(k) * k;
  }
  if (rep.image_size == 0) rep.min_fiber = 0;
  rep.injective = rep.max_fiber <= 1;
  rep.avg_fiber_seen = rep.support_size == 0 ? 0.0
                                             : static_cast<double>(rep.sum_sq_fiber) /
                                                   static_cast<double>(rep.support_size);
  return rep;
}

PairCheck quotient_identifiability_check(const FiberTable& table) {
  const auto& p = table.params();
  for (const auto& fb : table.fibers()) {
    const auto first = fb.members.front();
    const auto gamma = iterate_path(table.object(first), p);
    for (std::size_t j = 1; j < fb.members.size(); ++j) {
      if (iterate_path(table.object(fb.members[j]), p) != gamma) {
        return PairCheck{false, std::make_pair(first, fb.members[j])};
      }
    }
  }
  return PairCheck{};
}

MicroObject canonical_representative(const MicroObject& x, const FiberTable& table) {
  const auto& p = table.params();
  check_admissible(x, p);
  const auto gamma = iterate_path(x, p);
  std::optional<std::vector<std::uint8_t>> best;
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < table.support_size(); ++i) {
    if (iterate_path(table.object(i), p) != gamma) continue;
    auto enc = table.encoding(i);
    if (!best || enc < *best) {
      best = std::move(enc);
      best_idx = i;
    }
  }
  if (!best) throw InvalidParameters("object is outside the enumerated support");
  return table.object(best_idx);
}

// ---------------------------------------------------------------------------
// Counting

BigCount count_histories(std::uint64_t b, std::uint64_t r, std::uint64_t s, std::uint64_t T,
                         std::uint64_t n, std::uint64_t q, bool free_x0) {
  if (b == 0 || r == 0 || s == 0) throw InvalidParameters("count_histories: b, r, s must be >= 1");
  BigCount total = big_pow(BigCount(b) * r * s, T);
  if (free_x0) total *= big_pow(BigCount(q), n);
  return total;
}

std::uint64_t state_index(const StateVector& v, const Modulus& q) {
  std::uint64_t idx = 0;
  for (std::size_t k = v.size(); k-- > 0;) idx = idx * q.value() + v[k];
  return idx;
}

StateVector index_state(std::uint64_t index, const Modulus& q, std::size_t n) {
  StateVector v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = static_cast<Residue>(index % q.value());
    index /= q.value();
  }
  return v;
}

namespace {

std::uint64_t state_space_size(const Modulus& q, std::size_t n, std::uint64_t budget) {
  const BigCount v = big_pow(BigCount(q.value()), n);
  if (v > budget) throw BudgetExceeded("state space q^n = " + v.str() + " exceeds the budget");
  return static_cast<std::uint64_t>(v);
}

void check_increments(std::span<const StateVector> d, std::size_t n) {
  for (const auto& v : d) {
    if (v.size() != n) throw DimensionMismatch("increment has the wrong dimension");
  }
}

}  // namespace

std::vector<BigCount> displacement_counts(std::span<const StateVector> increments, std::size_t T,
                                          const Modulus& q, std::size_t n,
                                          std::uint64_t budget) {
  check_increments(increments, n);
  const std::uint64_t V = state_space_size(q, n, budget);
  if (BigCount(V) * increments.size() * std::max<std::size_t>(T, 1) > budget) {
    throw BudgetExceeded("endpoint DP work q^n |D| T exceeds the budget");
  }
  std::vector<std::uint64_t> shift;
  for (const auto& d : increments) shift.push_back(state_index(d, q));

  std::vector<BigCount> cur(V, 0);
  cur[0] = 1;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<BigCount> next(V, 0);
    for (std::uint64_t s = 0; s < V; ++s) {
      if (cur[s] == 0) continue;
      const auto sv = index_state(s, q, n);
      for (const auto& d : increments) next[state_index(add(sv, d, q), q)] += cur[s];
    }
    cur = std::move(next);
  }
  return cur;
}

BigCount endpoint_count_dp(std::span<const StateVector> increments, std::size_t T,
                           const StateVector& a, const StateVector& b, const Modulus& q,
                           std::size_t n, std::uint64_t budget) {
  if (a.size() != n || b.size() != n) throw DimensionMismatch("endpoint dimension");
  const auto counts = displacement_counts(increments, T, q, n, budget);
  return counts[state_index(sub(b, a, q), q)];
}

std::complex<double> endpoint_count_characters(std::span<const StateVector> increments,
                                               std::size_t T, const StateVector& a,
                                               const StateVector& b, const Modulus& q,
                                               std::size_t n, std::uint64_t budget) {
  q.require_prime("endpoint_count_characters");
  check_increments(increments, n);
  if (a.size() != n || b.size() != n) throw DimensionMismatch("endpoint dimension");
  const std::uint64_t V = state_space_size(q, n, budget);
  if (BigCount(V) * (increments.size() + 1) > budget) {
    throw BudgetExceeded("character sum work exceeds the budget");
  }
  std::vector<std::complex<double>> roots(q.value());
  for (std::uint64_t k = 0; k < q.value(); ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(q.value());
    roots[k] = {std::cos(theta), std::sin(theta)};
  }
  const auto diff = sub(a, b, q);
  double re = 0.0, im = 0.0, c_re = 0.0, c_im = 0.0;
  auto kahan = [](double& sum, double& c, double v) {
    const double y = v - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  };
  for (std::uint64_t wi = 0; wi < V; ++wi) {
    const auto w = index_state(wi, q, n);
    std::complex<double> s = 0.0;
    for (const auto& d : increments) s += roots[dot(w, d, q)];
    std::complex<double> p = 1.0;
    for (std::size_t t = 0; t < T; ++t) p *= s;
    const auto term = roots[dot(w, diff, q)] * p;
    kahan(re, c_re, term.real());
    kahan(im, c_im, term.imag());
  }
  return std::complex<double>(re, im) / static_cast<double>(V);
}

std::uint64_t MultiplicityMap::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

BigCount MultiplicityMap::history_multiplicity(std::span<const StateVector> increments) const {
  BigCount prod = 1;
  for (const auto& u : increments) prod *= at(u);
  return prod;
}

MultiplicityMap multiplicity_map(const ParameterSet& p, std::uint64_t budget) {
  const auto& q = p.modulus;
  const std::uint64_t V = state_space_size(q, p.n, budget);
  const BigCount triples = BigCount(p.b()) * p.r() * p.noise_support();
  if (triples > budget) throw BudgetExceeded("b r s = " + triples.str() + " exceeds the budget");

  // Noise residues with multiplicity, then D + E, then the convolution of both.
  std::vector<std::uint64_t> noise(V, 0);
  const std::uint64_t width = p.noise.coordinate_support();
  const std::int64_t B = p.noise.enabled ? p.noise.bound : 0;
  const auto s = static_cast<std::uint64_t>(p.noise_support());
  for (std::uint64_t idx = 0; idx < s; ++idx) {
    StateVector eta(p.n);
    std::uint64_t rest = idx;
    for (std::size_t k = 0; k < p.n; ++k) {
      eta[k] = q.reduce(static_cast<std::int64_t>(rest % width) - B);
      rest /= width;
    }
    ++noise[state_index(eta, q)];
  }
  MultiplicityMap mm{q, p.n, std::vector<std::uint64_t>(V, 0)};
  for (const auto& d : p.macro_alphabet) {
    for (const auto& e : p.micro_alphabet) {
      const auto de = add(d, e, q);
      for (std::uint64_t ni = 0; ni < V; ++ni) {
        if (noise[ni] == 0) continue;
        mm.counts[state_index(add(de, index_state(ni, q, p.n), q), q)] += noise[ni];
      }
    }
  }
  return mm;
}

BigCount projection_fiber_count(std::size_t n, std::size_t k, std::size_t T, const Modulus& q,
                                bool endpoints_fixed) {
  q.require_prime("projection_fiber_count");
  if (k > n) throw InvalidParameters("projection rank k exceeds n");
  if (endpoints_fixed && T < 1) throw InvalidParameters("fixed endpoints need T >= 1");
  const std::uint64_t free_states = endpoints_fixed ? T - 1 : T + 1;
  return big_pow(BigCount(q.value()), (n - k) * free_states);
}

BigCount projection_fiber_count(const FieldMatrix& proj, std::size_t T,
                                const std::vector<StateVector>& projected_path,
                                const std::optional<std::pair<StateVector, StateVector>>& endpoints) {
  const auto& q = proj.modulus();
  const std::size_t k = proj.rows();
  const std::size_t n = proj.cols();
  if (mat_rank(proj) != k) throw InvalidParameters("projection must have full row rank");
  if (projected_path.size() != T + 1) throw DimensionMismatch("projected path length");
  for (const auto& y : projected_path) {
    if (y.size() != k) throw DimensionMismatch("projected state dimension");
  }
  if (endpoints) {
    const auto& [a, b] = *endpoints;
    if (a.size() != n || b.size() != n) throw DimensionMismatch("endpoint dimension");
    if (proj.apply(a.coords()) != projected_path.front().raw() ||
        proj.apply(b.coords()) != projected_path.back().raw()) {
      return 0;
    }
  }
  return projection_fiber_count(n, k, T, q, endpoints.has_value());
}

std::uint64_t projection_preimage_enumerate(
    std::size_t n, std::size_t k, std::size_t T, const Modulus& q,
    const std::vector<StateVector>& projected_path,
    const std::optional<std::pair<StateVector, StateVector>>& endpoints,
    const EnumerationGuard& guard) {
  if (k > n) throw InvalidParameters("projection rank k exceeds n");
  if (projected_path.size() != T + 1) throw DimensionMismatch("projected path length");
  const BigCount total = big_pow(BigCount(q.value()), n * (T + 1));
  guard.check(total, "projection_preimage_enumerate");
  const auto N = static_cast<std::uint64_t>(total);
  std::uint64_t count = 0;
  std::vector<StateVector> path(T + 1, StateVector(n));
  for (std::uint64_t idx = 0; idx < N; ++idx) {
    std::uint64_t rest = idx;
    for (auto& x : path) {
      for (std::size_t c = 0; c < n; ++c) {
        x[c] = static_cast<Residue>(rest % q.value());
        rest /= q.value();
      }
    }
    bool ok = true;
    for (std::size_t i = 0; ok && i <= T; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        if (path[i][c] != projected_path[i][c]) {
          ok = false;
          break;
        }
      }
    }
    if (ok && endpoints) ok = path.front() == endpoints->first && path.back() == endpoints->second;
    if (ok) ++count;
  }
  return count;
}

BigCount hamming_sphere_size(std::uint64_t n, std::uint64_t k, std::uint64_t q) {
  if (k > n) throw InvalidParameters("sphere radius exceeds n");
  BigCount binom = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    binom *= n - i;
    binom /= i + 1;
  }
  return binom * big_pow(BigCount(q - 1), k);
}

BigCount hamming_ball_size(std::uint64_t n, std::uint64_t radius, std::uint64_t q) {
  BigCount total = 0;
  for (std::uint64_t k = 0; k <= std::min(n, radius); ++k) total += hamming_sphere_size(n, k, q);
  return total;
}

ConcentrationResult hamming_concentration_check(std::size_t n, std::uint64_t q,
                                                std::size_t trials, RandomSource& rng) {
  if (trials < 1000) throw InvalidParameters("concentration check needs >= 1000 trials");
  if (n == 0 || q < 2) throw InvalidParameters("concentration check needs n >= 1, q >= 2");
  ConcentrationResult res;
  const double nd = static_cast<double>(n);
  res.expected_mean = nd * (1.0 - 1.0 / static_cast<double>(q));
  res.mean_tolerance = 4.0 * std::sqrt(nd / 4.0 / static_cast<double>(trials));
  res.t = std::sqrt(nd * std::log(200.0) / 2.0);
  res.tail_bound = 2.0 * std::exp(-2.0 * res.t * res.t / nd);
  res.histogram.assign(n + 1, 0);
  double sum = 0.0;
  std::size_t tail = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    std::size_t d = 0;
    for (std::size_t c = 0; c < n; ++c) d += rng.uniform_below(q) != rng.uniform_below(q);
    ++res.histogram[d];
    sum += static_cast<double>(d);
    if (std::abs(static_cast<double>(d) - res.expected_mean) >= res.t) ++tail;
  }
  res.empirical_mean = sum / static_cast<double>(trials);
  res.mean_ok = std::abs(res.empirical_mean - res.expected_mean) <= res.mean_tolerance;
  res.tail_fraction = static_cast<double>(tail) / static_cast<double>(trials);
  res.tail_ok = res.tail_fraction <= 3.0 * res.tail_bound;
  return res;
}

OverlapResult obs_noise_overlap_check(const ObservableFamily& f, const ParameterSet& p,
                                      const EnumerationGuard& guard) {
  const auto* qr = std::get_if<QuantizedReal>(&f.body());
  if (qr == nullptr) throw NotApplicable("overlap check needs a QuantizedReal family");
  const auto support = enumerate_support(p, guard);
  const std::int64_t B = qr->observation_noise.enabled ? qr->observation_noise.bound : 0;

  // Per object, per entry: sorted set of bins reachable under integer noise in [-B, B].
  std::vector<std::vector<std::vector<std::uint64_t>>> reach(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto feats = quantized_features(*qr, realize(support[i], p));
    reach[i].resize(feats.size());
    for (std::size_t j = 0; j < feats.size(); ++j) {
      auto& bins = reach[i][j];
      for (std::int64_t e = -B; e <= B; ++e) {
        bins.push_back(wrap_bin(quantize(feats[j] + static_cast<double>(e),
                                         QuantizerSpec{qr->tau[j]}),
                                f.ell()));
      }
      std::sort(bins.begin(), bins.end());
      bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
    }
  }
  auto intersects = [](const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
      if (*i == *j) return true;
      if (*i < *j) ++i; else ++j;
    }
    return false;
  };
  for (std::size_t i = 0; i < support.size(); ++i) {
    for (std::size_t k = i + 1; k < support.size(); ++k) {
      bool all = true;
      for (std::size_t j = 0; all && j < reach[i].size(); ++j) all = intersects(reach[i][j], reach[k][j]);
      if (all) return OverlapResult{false, std::make_pair(i, k)};
    }
  }
  return OverlapResult{};
}

}  // namespace nhp
