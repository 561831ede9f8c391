#include "nhp/attacks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "nhp/config.hpp"
#include "nhp/encoding.hpp"
#include "nhp/noise.hpp"
#include "nhp/pathgen.hpp"

namespace nhp {

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

AttackReport make_report(const char* method) {
  AttackReport r;
  r.method = method;
  return r;
}

}  // namespace

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::planted_recovered: return "planted-recovered";
    case Outcome::witness_found: return "witness-found";
    case Outcome::localized: return "localized";
    case Outcome::failed: return "failed";
    case Outcome::not_applicable: return "not-applicable";
  }
  return "failed";
}

Outcome classify_candidate(const MicroObject& candidate, const ObservableFamily& f,
                           const ParameterSet& p, const PublicObservable& y,
                           const std::optional<MicroObject>& planted, Outcome otherwise) {
  if (!is_admissible(candidate, p)) return otherwise;
  if (planted && encode_object(candidate, p) == encode_object(*planted, p)) {
    return Outcome::planted_recovered;
  }
  if (eval_observable(f, candidate, p) == y) return Outcome::witness_found;
  return otherwise;
}

std::size_t observable_distance(const PublicObservable& a, const PublicObservable& b) {
  if (a.m() != b.m()) throw DimensionMismatch("observables of different length");
  std::size_t d = 0;
  for (std::size_t j = 0; j < a.m(); ++j) d += a.entries[j] != b.entries[j];
  return d;
}

// ---------------------------------------------------------------------------
// Vectorization

ObjectVectorizer::ObjectVectorizer(const ParameterSet& p)
    : p_(p),
      x0_block_(p.x0_free()),
      macro_block_(p.b() > 1),
      micro_block_(p.r() > 1),
      noise_block_(p.noise.enabled && p.noise.bound > 0) {
  if (noise_block_ && p.modulus.value() <= static_cast<std::uint64_t>(2 * p.noise.bound)) {
    throw AliasError("q <= 2B: noise residues do not determine their lifts");
  }
  const std::size_t per_step = macro_block_ + micro_block_ + noise_block_;
  dim_ = (x0_block_ ? p.n : 0) + p.T * per_step * p.n;
}

std::vector<Residue> ObjectVectorizer::to_vector(const MicroObject& x) const {
  check_admissible(x, p_);
  std::vector<Residue> v;
  v.reserve(dim_);
  if (x0_block_) v.insert(v.end(), x.x0.raw().begin(), x.x0.raw().end());
  for (std::size_t i = 0; i < p_.T; ++i) {
    if (macro_block_) {
      const auto& d = p_.macro_alphabet[x.macro_idx[i]].raw();
      v.insert(v.end(), d.begin(), d.end());
    }
    if (micro_block_) {
      const auto& e = p_.micro_alphabet[x.micro_idx[i]].raw();
      v.insert(v.end(), e.begin(), e.end());
    }
    if (noise_block_) {
      for (auto z : x.noise_lift[i]) v.push_back(p_.modulus.reduce(z));
    }
  }
  return v;
}

namespace {

StateVector take(std::span<const Residue> v, std::size_t& pos, std::size_t n) {
  StateVector s(std::vector<Residue>(v.begin() + static_cast<std::ptrdiff_t>(pos),
                                     v.begin() + static_cast<std::ptrdiff_t>(pos + n)));
  pos += n;
  return s;
}

}  // namespace

PathRealization ObjectVectorizer::realize_vector(std::span<const Residue> v) const {
  if (v.size() != dim_) throw DimensionMismatch("vector has the wrong dimension");
  const auto& q = p_.modulus;
  const std::size_t n = p_.n;
  std::size_t pos = 0;
  PathRealization r;
  StateVector x = x0_block_ ? take(v, pos, n) : p_.boundary->start;
  r.states.push_back(x);
  for (std::size_t i = 0; i < p_.T; ++i) {
    const StateVector d = macro_block_ ? take(v, pos, n) : p_.macro_alphabet.front();
    const StateVector e = micro_block_ ? take(v, pos, n) : p_.micro_alphabet.front();
    const StateVector eta = noise_block_ ? take(v, pos, n) : zero_state(n);
    x = add(add(add(x, d, q), e, q), eta, q);
    r.states.push_back(x);
    std::vector<std::int64_t> elift(n), nlift(n);
    for (std::size_t k = 0; k < n; ++k) {
      elift[k] = q.centered(e[k]);
      nlift[k] = q.centered(eta[k]);
    }
    r.micro.push_back(e);
    r.micro_lift.push_back(std::move(elift));
    r.noise_lift.push_back(std::move(nlift));
  }
  return r;
}

std::optional<MicroObject> ObjectVectorizer::to_object(std::span<const Residue> v) const {
  if (v.size() != dim_) throw DimensionMismatch("vector has the wrong dimension");
  const std::size_t n = p_.n;
  std::size_t pos = 0;
  MicroObject x;
  x.x0 = x0_block_ ? take(v, pos, n) : p_.boundary->start;
  x.macro_idx.assign(p_.T, 0);
  x.micro_idx.assign(p_.T, 0);
  x.noise_lift.assign(p_.T, std::vector<std::int64_t>(n, 0));
  auto index_in = [](const std::vector<StateVector>& alphabet,
                     const StateVector& s) -> std::optional<std::uint32_t> {
    auto it = std::find(alphabet.begin(), alphabet.end(), s);
    if (it == alphabet.end()) return std::nullopt;
    return static_cast<std::uint32_t>(it - alphabet.begin());
  };
  for (std::size_t i = 0; i < p_.T; ++i) {
    if (macro_block_) {
      auto idx = index_in(p_.macro_alphabet, take(v, pos, n));
      if (!idx) return std::nullopt;
      x.macro_idx[i] = *idx;
    }
    if (micro_block_) {
      auto idx = index_in(p_.micro_alphabet, take(v, pos, n));
      if (!idx) return std::nullopt;
      x.micro_idx[i] = *idx;
    }
    if (noise_block_) {
      for (std::size_t k = 0; k < n; ++k) {
        auto z = canonical_lift(v[pos++], p_.noise.bound, p_.modulus);
        if (!z) return std::nullopt;
        x.noise_lift[i][k] = *z;
      }
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Affine surrogate and linear collapse

AffineModel affine_surrogate_fit(const VectorOracle& phi, std::size_t dim, std::size_t m,
                                 const Modulus& q, std::size_t probes, RandomSource& rng) {
  q.require_prime("affine_surrogate_fit");
  AffineModel model{FieldMatrix(m, dim, q), {}, 0, probes, false, 0};
  std::vector<Residue> v(dim, 0);
  auto call = [&](std::span<const Residue> x) {
    ++model.evaluations;
    auto y = phi(x);
    if (y.size() != m) throw DimensionMismatch("oracle returned the wrong number of entries");
    return y;
  };
  model.c = call(v);
  for (std::size_t j = 0; j < dim; ++j) {
    v[j] = 1;
    const auto col = call(v);
    v[j] = 0;
    for (std::size_t r = 0; r < m; ++r) model.A(r, j) = q.sub(col[r], model.c[r]);
  }
  for (std::size_t t = 0; t < probes; ++t) {
    for (auto& x : v) x = static_cast<Residue>(rng.uniform_below(q.value()));
    auto pred = model.A.apply(v);
    for (std::size_t r = 0; r < m; ++r) pred[r] = q.add(pred[r], model.c[r]);
    if (pred != call(v)) ++model.residual;
  }
  model.exact = model.residual == 0;
  return model;
}

AffineModel affine_surrogate_fit(const ObservableFamily& f, const ParameterSet& p,
                                 std::size_t probes, RandomSource& rng) {
  p.modulus.require_prime("affine_surrogate_fit");
  if (!f.is_mod_q()) throw NotApplicable("affine fit needs a family with entries mod q");
  const ObjectVectorizer vec(p);
  VectorOracle phi = [&](std::span<const Residue> v) {
    const auto raw = evaluate_entries(f, vec.realize_vector(v));
    return std::vector<Residue>(raw.begin(), raw.end());
  };
  return affine_surrogate_fit(phi, vec.dimension(), f.m(), p.modulus, probes, rng);
}

AttackReport linear_collapse(const AffineModel& model, const ObservableFamily& f,
                             const ParameterSet& p, const PublicObservable& y,
                             const std::optional<MicroObject>& planted, RandomSource& rng,
                             const LinearCollapseOptions& opts) {
  if (!model.exact) throw InvalidParameters("linear_collapse needs an exact affine model");
  const Stopwatch clock;
  auto rep = make_report("linear-collapse");
  const auto& q = p.modulus;
  const ObjectVectorizer vec(p);
  if (vec.dimension() != model.A.cols() || y.m() != model.A.rows()) {
    throw DimensionMismatch("model does not match P and Y");
  }
  rep.work.evaluations = model.evaluations;
  std::vector<Residue> target;
  for (auto e : y.entries) {
    if (e >= q.value()) {
      rep.details["reason"] = "entry outside Z_q";
      rep.wall_seconds = clock.seconds();
      return rep;
    }
    target.push_back(static_cast<Residue>(e));
  }
  const auto sol = solve_affine(model.A, model.c, target);
  if (!sol) {
    rep.details["reason"] = "inconsistent system";
    rep.wall_seconds = clock.seconds();
    return rep;
  }
  const std::size_t kdim = sol->kernel_basis.size();
  rep.details["dimension"] = std::to_string(vec.dimension());
  rep.details["rank"] = std::to_string(sol->rank);
  rep.details["kernel_dim"] = std::to_string(kdim);
  const BigCount coset = big_pow(BigCount(q.value()), kdim);
  rep.details["coset_size"] = coset.str();

  auto member = [&](const std::vector<Residue>& coeffs) {
    std::vector<Residue> v = sol->particular;
    for (std::size_t j = 0; j < kdim; ++j) {
      if (coeffs[j] == 0) continue;
      for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = q.add(v[k], q.mul(coeffs[j], sol->kernel_basis[j][k]));
      }
    }
    return v;
  };

  std::optional<MicroObject> found;
  bool exhaustive = coset <= opts.exhaustive_limit;
  std::uint64_t admissible = 0;
  std::vector<Residue> coeffs(kdim, 0);
  if (exhaustive) {
    const auto total = static_cast<std::uint64_t>(coset);
    for (std::uint64_t idx = 0; idx < total; ++idx) {
      std::uint64_t rest = idx;
      for (auto& c : coeffs) {
        c = static_cast<Residue>(rest % q.value());
        rest /= q.value();
      }
      if (auto x = vec.to_object(member(coeffs))) {
        ++admissible;
        if (!found) found = std::move(x);
      }
    }
    rep.details["admissible_in_coset"] = std::to_string(admissible);
  } else {
    for (std::uint64_t s = 0; s < opts.samples && !found; ++s) {
      for (auto& c : coeffs) c = static_cast<Residue>(rng.uniform_below(q.value()));
      found = vec.to_object(member(coeffs));
    }
  }

  if (!found) {
    rep.outcome = exhaustive ? Outcome::failed : Outcome::localized;
    rep.details["reason"] = "no admissible coset member found";
  } else {
    ++rep.work.evaluations;
    rep.outcome = classify_candidate(*found, f, p, y, planted, Outcome::failed);
    rep.candidate = std::move(found);
  }
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Dynamic programming over (state, accumulator)

std::optional<StepDecomposition> step_decomposition(const ObservableFamily& f) {
  const auto& d = f.dims();
  const Modulus q = d.q;
  const std::size_t T = d.T;
  if (T == 0) return std::nullopt;
  return std::visit(
      [&](const auto& body) -> std::optional<StepDecomposition> {
        using B = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<B, LinearProjected>) {
          return StepDecomposition{
              f.m(), [q, T, a = body.a](std::size_t i, const StateVector& x, const StateVector& xn,
                                        std::vector<Residue>& out) {
                for (std::size_t j = 0; j < a.size(); ++j) {
                  Residue v = dot(a[j][i], x, q);
                  if (i + 1 == T) v = q.add(v, dot(a[j][T], xn, q));
                  out.push_back(v);
                }
              }};
        } else if constexpr (std::is_same_v<B, TransitionEnergy>) {
          return StepDecomposition{
              f.m(), [q, te = body](std::size_t i, const StateVector& x, const StateVector& xn,
                                    std::vector<Residue>& out) {
                const auto diff = sub(xn, x, q);
                for (std::size_t j = 0; j < te.u.size(); ++j) {
                  out.push_back(q.add(q.mul(dot(te.u[j][i], x, q), dot(te.v[j][i], xn, q)),
                                      dot(te.w[j][i], diff, q)));
                }
              }};
        } else if constexpr (std::is_same_v<B, Telescoping>) {
          return StepDecomposition{
              f.m(), [q](std::size_t, const StateVector& x, const StateVector& xn,
                         std::vector<Residue>& out) {
                for (std::size_t k = 0; k < x.size(); ++k) out.push_back(q.sub(xn[k], x[k]));
              }};
        } else if constexpr (std::is_same_v<B, Composite>) {
          std::vector<StepDecomposition> parts;
          for (const auto& part : body.parts) {
            auto dp = step_decomposition(part);
            if (!dp) return std::nullopt;
            parts.push_back(std::move(*dp));
          }
          return StepDecomposition{
              f.m(), [parts](std::size_t i, const StateVector& x, const StateVector& xn,
                             std::vector<Residue>& out) {
                for (const auto& part : parts) part.phi(i, x, xn, out);
              }};
        } else if constexpr (std::is_same_v<B, PostProcessed>) {
          if (body.h.kind != PostProcessor::Kind::identity &&
              body.h.kind != PostProcessor::Kind::keep_first) {
            return std::nullopt;
          }
          auto inner = step_decomposition(*body.inner);
          if (!inner) return std::nullopt;
          const std::size_t keep = f.m();
          return StepDecomposition{
              keep, [inner = std::move(*inner), keep](std::size_t i, const StateVector& x,
                                                      const StateVector& xn, std::vector<Residue>& out) {
                std::vector<Residue> full;
                inner.phi(i, x, xn, full);
                out.insert(out.end(), full.begin(), full.begin() + static_cast<std::ptrdiff_t>(keep));
              }};
        } else {
          return std::nullopt;
        }
      },
      f.body());
}

AttackReport dp_collapse(const ObservableFamily& f, const ParameterSet& p, const PublicObservable& y,
                         const std::optional<MicroObject>& planted, std::uint64_t budget) {
  const Stopwatch clock;
  auto rep = make_report("dp-collapse");
  const auto dec = f.is_mod_q() ? step_decomposition(f) : std::nullopt;
  if (!dec) {
    rep.outcome = Outcome::not_applicable;
    rep.details["reason"] = "observable has no per-step decomposition";
    return rep;
  }
  const auto& q = p.modulus;
  const std::size_t n = p.n;
  const std::size_t T = p.T;
  const std::size_t m = dec->m;
  const BigCount Vb = big_pow(BigCount(q.value()), n);
  const BigCount Mb = big_pow(BigCount(q.value()), m);
  const BigCount work = BigCount(T) * Vb * Mb;
  rep.details["table_bound"] = work.str();
  if (work > budget || Vb * Mb >= std::numeric_limits<std::uint32_t>::max()) {
    throw BudgetExceeded("dp_collapse: T V M = " + work.str() + " exceeds the budget");
  }
  const auto V = static_cast<std::uint64_t>(Vb);
  const auto M = static_cast<std::uint64_t>(Mb);
  rep.details["V"] = std::to_string(V);
  rep.details["M"] = std::to_string(M);

  std::uint64_t target_acc = 0;
  for (std::size_t j = m; j-- > 0;) {
    if (y.entries.at(j) >= q.value()) {
      rep.details["reason"] = "entry outside Z_q";
      return rep;
    }
    target_acc = target_acc * q.value() + y.entries[j];
  }

  // Allowed increments, each with the first microscopic triple realizing it.
  const auto mult = multiplicity_map(p, budget);
  std::vector<std::uint64_t> allowed;
  for (std::uint64_t u = 0; u < V; ++u) {
    if (mult.counts[u] > 0) allowed.push_back(u);
  }
  const std::uint64_t width = p.noise.coordinate_support();
  const std::int64_t Bn = p.noise.enabled ? p.noise.bound : 0;
  const auto s = static_cast<std::uint64_t>(p.noise_support());
  struct Triple {
    std::uint32_t macro, micro;
    std::vector<std::int64_t> lift;
  };
  std::vector<std::optional<Triple>> first(V);
  for (std::uint32_t a = 0; a < p.b(); ++a) {
    for (std::uint32_t b = 0; b < p.r(); ++b) {
      for (std::uint64_t idx = 0; idx < s; ++idx) {
        std::vector<std::int64_t> lift(n);
        std::uint64_t rest = idx;
        for (std::size_t k = 0; k < n; ++k) {
          lift[k] = static_cast<std::int64_t>(rest % width) - Bn;
          rest /= width;
        }
        const auto u = add(add(p.macro_alphabet[a], p.micro_alphabet[b], q), make_state(lift, q), q);
        auto& slot = first[state_index(u, q)];
        if (!slot) slot = Triple{a, b, std::move(lift)};
      }
    }
  }

  auto acc_add = [&](std::uint64_t acc, const std::vector<Residue>& delta) {
    std::uint64_t out = 0, scale = 1;
    for (std::size_t j = 0; j < m; ++j) {
      const auto digit = static_cast<Residue>(acc % q.value());
      acc /= q.value();
      out += scale * q.add(digit, delta[j]);
      scale *= q.value();
    }
    return out;
  };

  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::vector<std::uint32_t>> parent(T + 1, std::vector<std::uint32_t>(V * M, kNone));
  std::vector<std::uint64_t> frontier;
  if (p.boundary) {
    frontier.push_back(state_index(p.boundary->start, q) * M);
  } else {
    for (std::uint64_t st = 0; st < V; ++st) frontier.push_back(st * M);
  }
  std::vector<Residue> delta;
  for (std::size_t i = 0; i < T; ++i) {
    std::vector<std::uint64_t> next;
    for (auto cell : frontier) {
      const std::uint64_t st = cell / M;
      const std::uint64_t acc = cell % M;
      const auto x = index_state(st, q, n);
      for (auto u : allowed) {
        const auto xn = add(x, index_state(u, q, n), q);
        delta.clear();
        dec->phi(i, x, xn, delta);
        const std::uint64_t ncell = state_index(xn, q) * M + acc_add(acc, delta);
        if (parent[i + 1][ncell] == kNone) {
          parent[i + 1][ncell] = static_cast<std::uint32_t>(cell);
          next.push_back(ncell);
        }
      }
    }
    rep.work.table_entries += next.size();
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
  }

  std::optional<std::uint64_t> end_cell;
  if (p.boundary && p.boundary->end) {
    const std::uint64_t c = state_index(*p.boundary->end, q) * M + target_acc;
    if (parent[T][c] != kNone) end_cell = c;
  } else {
    for (std::uint64_t st = 0; st < V && !end_cell; ++st) {
      if (parent[T][st * M + target_acc] != kNone) end_cell = st * M + target_acc;
    }
  }
  rep.details["reachable"] = end_cell ? "true" : "false";
  if (!end_cell) {
    rep.details["reason"] = "target unreachable";
    rep.wall_seconds = clock.seconds();
    return rep;
  }

  std::vector<std::uint64_t> states(T + 1);
  std::uint64_t cell = *end_cell;
  for (std::size_t i = T; i > 0; --i) {
    states[i] = cell / M;
    cell = parent[i][cell];
  }
  states[0] = cell / M;

  MicroObject x;
  x.x0 = index_state(states[0], q, n);
  for (std::size_t i = 0; i < T; ++i) {
    const auto u = sub(index_state(states[i + 1], q, n), index_state(states[i], q, n), q);
    const auto& tr = first[state_index(u, q)];
    x.macro_idx.push_back(tr->macro);
    x.micro_idx.push_back(tr->micro);
    x.noise_lift.push_back(tr->lift);
  }
  ++rep.work.evaluations;
  rep.outcome = classify_candidate(x, f, p, y, planted, Outcome::localized);
  rep.candidate = std::move(x);
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Meet in the middle

MitmResult mitm_split(const ObservableFamily& f, const ParameterSet& p, std::size_t t,
                      const PublicObservable& y, const std::optional<MicroObject>& planted,
                      RandomSource& rng, const MitmOptions& opts) {
  const Stopwatch clock;
  MitmResult res{make_report("mitm-split"), {}};
  auto& rep = res.report;
  if (t > p.T) throw InvalidParameters("split index exceeds T");
  if (y.m() != f.m()) throw DimensionMismatch("Y does not match the family");
  rep.details["split"] = std::to_string(t);

  ParameterSet pl = p;
  pl.T = t;
  pl.family.reset();
  ParameterSet pr = p;
  pr.T = p.T - t;
  pr.family.reset();
  pr.boundary = Boundary{zero_state(p.n), std::nullopt};
  const SupportEnumerator left(pl);
  const SupportEnumerator right(pr);
  const std::uint64_t nl = left.size(), nr = right.size();
  rep.details["N_L"] = std::to_string(nl);
  rep.details["N_R"] = std::to_string(nr);
  if (BigCount(nl) + nr > opts.budget) throw BudgetExceeded("mitm_split: N_L + N_R exceeds the budget");

  auto join = [&](const MicroObject& l, const MicroObject& r) {
    MicroObject x = l;
    x.macro_idx.insert(x.macro_idx.end(), r.macro_idx.begin(), r.macro_idx.end());
    x.micro_idx.insert(x.micro_idx.end(), r.micro_idx.begin(), r.micro_idx.end());
    x.noise_lift.insert(x.noise_lift.end(), r.noise_lift.begin(), r.noise_lift.end());
    return x;
  };
  auto phi = [&](const MicroObject& x) {
    ++rep.work.evaluations;
    return eval_observable(f, x, p).entries;
  };
  // Checking a match is output verification and is kept out of the search count.
  std::uint64_t verifications = 0;
  auto verify = [&](const MicroObject& x) {
    ++verifications;
    return eval_observable(f, x, p).entries == y.entries;
  };
  const auto& mods = f.entry_moduli();
  auto combine = [&](const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b, bool minus) {
    std::vector<std::uint64_t> out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
      const std::uint64_t mj = mods[j];
      out[j] = minus ? (a[j] % mj + mj - b[j] % mj) % mj : (a[j] % mj + b[j] % mj) % mj;
    }
    return out;
  };

  const MicroObject l0 = left.at(0);
  const MicroObject r0 = right.at(0);
  std::vector<std::vector<std::uint64_t>> left_img(nl);
  for (std::uint64_t i = 0; i < nl; ++i) left_img[i] = phi(join(left.at(i), r0));
  const auto& base = left_img[0];
  std::vector<std::vector<std::uint64_t>> right_img(nr);
  right_img[0].assign(f.m(), 0);
  for (std::uint64_t j = 1; j < nr; ++j) right_img[j] = combine(phi(join(l0, right.at(j))), base, true);
  rep.work.table_entries = nl;

  for (std::size_t k = 0; k < opts.separability_probes; ++k) {
    const auto i = rng.uniform_below(nl);
    const auto j = rng.uniform_below(nr);
    if (phi(join(left.at(i), right.at(j))) != combine(left_img[i], right_img[j], false)) {
      rep.outcome = Outcome::not_applicable;
      rep.details["reason"] = "separability probe failed";
      rep.wall_seconds = clock.seconds();
      return res;
    }
  }

  std::map<std::vector<std::uint64_t>, std::vector<std::uint64_t>> by_image;
  for (std::uint64_t i = 0; i < nl; ++i) by_image[left_img[i]].push_back(i);
  for (std::uint64_t j = 0; j < nr; ++j) {
    auto it = by_image.find(combine(y.entries, right_img[j], true));
    if (it == by_image.end()) continue;
    const MicroObject r = right.at(j);
    for (auto i : it->second) {
      MicroObject x = join(left.at(i), r);
      if (!verify(x)) continue;
      if (!opts.collect_all) {
        rep.details["verification_evaluations"] = std::to_string(verifications);
        rep.outcome = classify_candidate(x, f, p, y, planted, Outcome::localized);
        rep.candidate = std::move(x);
        rep.wall_seconds = clock.seconds();
        return res;
      }
      res.witnesses.push_back(std::move(x));
    }
  }
  rep.details["verification_evaluations"] = std::to_string(verifications);
  if (!res.witnesses.empty()) {
    std::sort(res.witnesses.begin(), res.witnesses.end());
    rep.candidate = res.witnesses.front();
    rep.outcome = classify_candidate(*rep.candidate, f, p, y, planted, Outcome::localized);
    rep.details["witnesses"] = std::to_string(res.witnesses.size());
  } else {
    rep.details["reason"] = "no match";
  }
  rep.wall_seconds = clock.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Local search

namespace {

std::vector<std::int64_t> candidate_values(std::int64_t lo, std::int64_t hi, std::int64_t current,
                                           RandomSource& rng) {
  std::vector<std::int64_t> vals;
  if (hi - lo < 64) {
    for (std::int64_t v = lo; v <= hi; ++v) {
      if (v != current) vals.push_back(v);
    }
    return vals;
  }
  for (std::int64_t d : {-2, -1, 1, 2}) {
    const std::int64_t v = current + d;
    if (v >= lo && v <= hi) vals.push_back(v);
  }
  for (int k = 0; k < 8; ++k) {
    const auto v = lo + static_cast<std::int64_t>(rng.uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
    if (v != current) vals.push_back(v);
  }
  return vals;
}

std::vector<MicroObject> neighbours(const MicroObject& x, const ParameterSet& p, RandomSource& rng) {
  std::vector<MicroObject> out;
  if (p.x0_free()) {
    for (std::size_t k = 0; k < p.n; ++k) {
      for (auto v : candidate_values(0, static_cast<std::int64_t>(p.modulus.value()) - 1, x.x0[k], rng)) {
        out.push_back(x);
        out.back().x0[k] = static_cast<Residue>(v);
      }
    }
  }
  for (std::size_t i = 0; i < p.T; ++i) {
    for (auto v : candidate_values(0, static_cast<std::int64_t>(p.b()) - 1, x.macro_idx[i], rng)) {
      out.push_back(x);
      out.back().macro_idx[i] = static_cast<std::uint32_t>(v);
    }
    for (auto v : candidate_values(0, static_cast<std::int64_t>(p.r()) - 1, x.micro_idx[i], rng)) {
      out.push_back(x);
      out.back().micro_idx[i] = static_cast<std::uint32_t>(v);
    }
    if (p.noise.enabled && p.noise.bound > 0) {
      for (std::size_t k = 0; k < p.n; ++k) {
        for (auto v : candidate_values(-p.noise.bound, p.noise.bound, x.noise_lift[i][k], rng)) {
          out.push_back(x);
          out.back().noise_lift[i][k] = v;
        }
      }
    }
  }
  return out;
}

}  // namespace

AttackReport local_search_round(const ObservableFamily& f, const ParameterSet& p,
                                const PublicObservable& y, const std::optional<MicroObject>& planted,
                                RandomSource& rng, const LocalSearchOptions& opts) {
  const Stopwatch clock;
  auto rep = make_report("local-search");
  auto finish = [&](MicroObject best, std::size_t dist) {
    if (planted) rep.details["planted_distance"] = std::to_string(object_distance(best, *planted, p));
    rep.details["observable_distance"] = std::to_string(dist);
    rep.outcome = dist == 0 ? classify_candidate(best, f, p, y, planted, Outcome::localized)
                            : Outcome::localized;
    rep.candidate = std::move(best);
    rep.wall_seconds = clock.seconds();
    return rep;
  };
  if (opts.budget == 0) {
    rep.candidate = opts.start ? *opts.start : sample_object(p, rng);
    rep.outcome = Outcome::failed;
    rep.details["reason"] = "zero budget";
    return rep;
  }
  auto dist_of = [&](const MicroObject& x) {
    ++rep.work.evaluations;
    return observable_distance(eval_observable(f, x, p), y);
  };

  std::optional<MicroObject> best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (std::size_t restart = 0; restart < std::max<std::size_t>(opts.restarts, 1); ++restart) {
    if (rep.work.evaluations >= opts.budget) break;
    MicroObject cur = (restart == 0 && opts.start) ? *opts.start : sample_object(p, rng);
    check_admissible(cur, p);
    std::size_t cur_d = dist_of(cur);
    while (cur_d > 0 && rep.work.evaluations < opts.budget) {
      std::optional<MicroObject> step;
      std::size_t step_d = cur_d;
      for (auto& nb : neighbours(cur, p, rng)) {
        if (rep.work.evaluations >= opts.budget) break;
        const auto d = dist_of(nb);
        if (d < step_d) {
          step_d = d;
          step = std::move(nb);
          if (d == 0) break;
        }
      }
      if (!step) break;
      cur = std::move(*step);
      cur_d = step_d;
    }
    if (cur_d < best_d) {
      best_d = cur_d;
      best = cur;
    }
    if (best_d == 0) break;
  }
  rep.details["restarts_budget"] = std::to_string(opts.restarts);
  return finish(std::move(*best), best_d);
}

// ---------------------------------------------------------------------------
// Fiber guessing

AttackReport bayes_fiber_guess(const PublicObservable& y, const FiberTable& table,
                               const std::optional<MicroObject>& planted, RandomSource& rng) {
  const Stopwatch clock;
  auto rep = make_report("bayes-fiber");
  const Fiber* fb = table.find(y);
  if (fb == nullptr) throw InvalidParameters("Y is not in the fiber table");
  const auto pick = fb->members[rng.uniform_below(fb->members.size())];
  rep.candidate = table.object(pick);
  rep.details["fiber_size"] = std::to_string(fb->members.size());
  rep.outcome = classify_candidate(*rep.candidate, table.family(), table.params(), y, planted,
                                   Outcome::localized);
  rep.wall_seconds = clock.seconds();
  return rep;
}

// ---------------------------------------------------------------------------
// Telescoping detector

TelescopingResult telescoping_detector(const ObservableFamily& f, const ParameterSet& p,
                                       RandomSource& rng, std::size_t probes) {
  if (p.T < 2) throw InvalidParameters("endpoint-matched pairs need T >= 2");
  TelescopingResult res;
  const std::size_t max_attempts = 20 * std::max<std::size_t>(probes, 1);
  for (std::size_t attempt = 0; attempt < max_attempts && res.pairs_tested < probes; ++attempt) {
    const MicroObject x = sample_object(p, rng);
    MicroObject xp = x;
    std::vector<std::size_t> order(p.T);
    for (std::size_t i = 0; i < p.T; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < p.T; ++i) {
      xp.macro_idx[i] = x.macro_idx[order[i]];
      xp.micro_idx[i] = x.micro_idx[order[i]];
      xp.noise_lift[i] = x.noise_lift[order[i]];
    }
    if (iterate_path(x, p) == iterate_path(xp, p)) continue;
    ++res.pairs_tested;
    if (eval_observable(f, x, p) != eval_observable(f, xp, p)) {
      res.flagged = false;
      res.distinguishing_pair = std::make_pair(x, xp);
      return res;
    }
  }
  if (res.pairs_tested == 0) {
    throw InvalidParameters("cannot build endpoint-matched pairs with different interiors");
  }
  res.flagged = true;
  return res;
}

// ---------------------------------------------------------------------------
// Multi-instance distinguisher

std::vector<std::uint64_t> reference_ranges(const ObservableFamily& f) {
  return f.entry_moduli();
}

DistinguisherResult multi_instance_distinguisher(const std::vector<PublicObservable>& keys,
                                                 const std::vector<std::uint64_t>& ranges,
                                                 double alpha) {
  if (keys.size() < 100) throw InvalidParameters("distinguisher needs at least 100 keys");
  const std::size_t m = ranges.size();
  for (const auto& k : keys) {
    if (k.m() != m) throw DimensionMismatch("keys have inconsistent length");
  }
  const std::size_t N = keys.size();
  DistinguisherResult res;
  std::vector<double> pvals;

  for (std::size_t j = 0; j < m; ++j) {
    const std::uint64_t range = ranges[j];
    const std::uint64_t bins = std::min<std::uint64_t>(range, N / 5);
    if (bins < 2) {
      res.chi_square_p.push_back(1.0);
      continue;
    }
    using u128 = unsigned __int128;
    auto bin_start = [&](std::uint64_t b) {  // first value mapped to bin b
      return static_cast<std::uint64_t>((u128(b) * range + bins - 1) / bins);
    };
    std::vector<double> observed(bins, 0.0);
    for (const auto& k : keys) {
      const std::uint64_t v = k.entries[j];
      if (v >= range) throw InvalidParameters("entry outside its reference range");
      ++observed[static_cast<std::size_t>(u128(v) * bins / range)];
    }
    double stat = 0.0;
    for (std::uint64_t b = 0; b < bins; ++b) {
      const double width = static_cast<double>(bin_start(b + 1) - bin_start(b));
      const double expected = static_cast<double>(N) * width / static_cast<double>(range);
      const double diff = observed[b] - expected;
      stat += diff * diff / expected;
    }
    const double p = boost::math::gamma_q(static_cast<double>(bins - 1) / 2.0, stat / 2.0);
    res.chi_square_p.push_back(p);
    pvals.push_back(p);
  }

  const std::size_t positions = std::min<std::size_t>(m, 64);
  std::vector<std::vector<double>> cols(positions, std::vector<double>(N));
  std::vector<double> mean(positions, 0.0), sd(positions, 0.0);
  for (std::size_t j = 0; j < positions; ++j) {
    for (std::size_t i = 0; i < N; ++i) cols[j][i] = static_cast<double>(keys[i].entries[j]);
    for (double v : cols[j]) mean[j] += v;
    mean[j] /= static_cast<double>(N);
    for (double v : cols[j]) sd[j] += (v - mean[j]) * (v - mean[j]);
    sd[j] = std::sqrt(sd[j]);
  }
  const boost::math::students_t tdist(static_cast<double>(N - 2));
  for (std::size_t a = 0; a < positions; ++a) {
    for (std::size_t b = a + 1; b < positions; ++b) {
      if (sd[a] == 0.0 || sd[b] == 0.0) continue;
      double cov = 0.0;
      for (std::size_t i = 0; i < N; ++i) cov += (cols[a][i] - mean[a]) * (cols[b][i] - mean[b]);
      const double r = cov / (sd[a] * sd[b]);
      res.max_abs_correlation = std::max(res.max_abs_correlation, std::abs(r));
      double p = 0.0;
      if (std::abs(r) < 1.0) {
        const double t = std::abs(r) * std::sqrt(static_cast<double>(N - 2) / (1.0 - r * r));
        p = 2.0 * boost::math::cdf(boost::math::complement(tdist, t));
      }
      pvals.push_back(p);
    }
  }

  res.tests = pvals.size();
  for (double p : pvals) {
    res.min_corrected_p = std::min(res.min_corrected_p, std::min(1.0, p * static_cast<double>(res.tests)));
  }
  res.reject = res.min_corrected_p < alpha;
  return res;
}

void export_constraint_instance(const ParameterSet& p, const PublicObservable& y,
                                const std::filesystem::path& path) {
  write_text_file(path, dump_constraint_instance(p, y));
}

std::pair<ParameterSet, PublicObservable> import_constraint_instance(
    const std::filesystem::path& path) {
  return parse_constraint_instance(read_text_file(path));
}

}  // namespace nhp
