#include "nhp/observables.hpp"

#include <cmath>

#include "nhp/encoding.hpp"
#include "nhp/noise.hpp"

namespace nhp {

PathRealization realize(const MicroObject& x, const ParameterSet& p) {
  PathRealization r;
  r.states = iterate_path(x, p);
  r.micro.reserve(p.T);
  r.micro_lift.reserve(p.T);
  for (std::size_t i = 0; i < p.T; ++i) {
    const auto& eps = p.micro_alphabet[x.micro_idx[i]];
    r.micro.push_back(eps);
    std::vector<std::int64_t> lift(p.n);
    for (std::size_t k = 0; k < p.n; ++k) lift[k] = p.modulus.centered(eps[k]);
    r.micro_lift.push_back(std::move(lift));
  }
  r.noise_lift = x.noise_lift;
  return r;
}

std::int64_t quantize(double value, const QuantizerSpec& spec) {
  if (!std::isfinite(value)) throw InvalidParameters("quantize: non-finite value");
  if (!(spec.tau > 0.0)) throw InvalidParameters("quantize: tau must be positive");
  const double x = value / spec.tau;
  const double fl = std::floor(x);
  const double frac = x - fl;
  double out;
  if (frac > 0.5) {
    out = fl + 1.0;
  } else if (frac < 0.5) {
    out = fl;
  } else {
    out = std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
  }
  return static_cast<std::int64_t>(out);
}

std::vector<double> quantized_features(const QuantizedReal& f, const PathRealization& r) {
  const std::size_t m = f.tau.size();
  const std::size_t T = r.micro.size();
  std::vector<double> out(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < T; ++i) {
      const auto& sw = f.state_w[j][i];
      const auto& mw = f.micro_w[j][i];
      const auto& nw = f.noise_w[j][i];
      for (std::size_t k = 0; k < sw.size(); ++k) {
        acc += sw[k] * static_cast<double>(r.states[i][k]);
        acc += mw[k] * static_cast<double>(r.micro_lift[i][k]);
        acc += nw[k] * static_cast<double>(r.noise_lift[i][k]);
      }
    }
    out[j] = acc;
  }
  return out;
}

std::vector<double> add_observation_noise(std::span<const double> features, const NoiseSpec& spec,
                                          RandomSource& rng) {
  const TdgTable table(spec);
  std::vector<double> out(features.begin(), features.end());
  for (auto& v : out) v += static_cast<double>(table.sample(rng));
  return out;
}

std::uint64_t wrap_bin(std::int64_t bin, std::uint32_t ell) {
  const std::uint64_t mask = (ell >= 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << ell) - 1);
  return static_cast<std::uint64_t>(bin) & mask;
}

namespace {

void eval_into(const ObservableFamily& f, const PathRealization& r, RandomSource* noise_rng,
               std::vector<std::uint64_t>& out) {
  const auto& q = f.dims().q;
  const std::size_t T = f.dims().T;
  std::visit(
      [&](const auto& body) {
        using F = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<F, LinearProjected>) {
          for (const auto& row : body.a) {
            Residue acc = 0;
            for (std::size_t i = 0; i <= T; ++i) acc = q.add(acc, dot(row[i], r.states[i], q));
            out.push_back(acc);
          }
        } else if constexpr (std::is_same_v<F, TransitionEnergy>) {
          for (std::size_t j = 0; j < body.u.size(); ++j) {
            Residue acc = 0;
            for (std::size_t i = 0; i < T; ++i) {
              const auto& x = r.states[i];
              const auto& xn = r.states[i + 1];
              Residue term = q.mul(dot(body.u[j][i], x, q), dot(body.v[j][i], xn, q));
              term = q.add(term, dot(body.w[j][i], sub(xn, x, q), q));
              acc = q.add(acc, term);
            }
            out.push_back(acc);
          }
        } else if constexpr (std::is_same_v<F, QuantizedReal>) {
          auto feats = quantized_features(body, r);
          if (noise_rng != nullptr && body.observation_noise.enabled) {
            feats = add_observation_noise(feats, body.observation_noise, *noise_rng);
          }
          for (std::size_t j = 0; j < feats.size(); ++j) {
            out.push_back(wrap_bin(quantize(feats[j], QuantizerSpec{body.tau[j]}), f.ell()));
          }
        } else if constexpr (std::is_same_v<F, NonlinearLocal>) {
          for (std::size_t j = 0; j < body.chi.size(); ++j) {
            Residue acc = 0;
            for (std::size_t i = 0; i < T; ++i) {
              const Residue ax = dot(body.a[j][i], r.states[i], q);
              Residue term = q.mul(ax, ax);
              term = q.add(term, q.mul(body.c[j][i], dot(body.b[j][i], r.states[i + 1], q)));
              term = q.add(term, dot(body.d[j][i], r.micro[i], q));
              acc = q.add(acc, q.mul(body.chi[j][i], term));
            }
            out.push_back(acc);
          }
        } else if constexpr (std::is_same_v<F, Telescoping>) {
          const auto diff = sub(r.states[T], r.states[0], q);
          for (auto c : diff.coords()) out.push_back(c);
        } else if constexpr (std::is_same_v<F, Composite>) {
          for (const auto& part : body.parts) eval_into(part, r, noise_rng, out);
        } else if constexpr (std::is_same_v<F, PostProcessed>) {
          std::vector<std::uint64_t> inner;
          eval_into(*body.inner, r, noise_rng, inner);
          switch (body.h.kind) {
            case PostProcessor::Kind::identity:
              out.insert(out.end(), inner.begin(), inner.end());
              break;
            case PostProcessor::Kind::truncate_bits:
              for (auto v : inner) out.push_back(wrap_bin(static_cast<std::int64_t>(v), body.h.param));
              break;
            case PostProcessor::Kind::keep_first:
              out.insert(out.end(), inner.begin(), inner.begin() + body.h.param);
              break;
            case PostProcessor::Kind::constant:
              out.push_back(0);
              break;
          }
        }
      },
      f.body());
}

}  // namespace

std::vector<std::uint64_t> evaluate_entries(const ObservableFamily& f, const PathRealization& r,
                                            RandomSource* noise_rng) {
  if (r.states.size() != f.dims().T + 1) throw DimensionMismatch("realization has wrong length");
  std::vector<std::uint64_t> out;
  out.reserve(f.m());
  eval_into(f, r, noise_rng, out);
  return out;
}

PublicObservable eval_observable(const ObservableFamily& f, const MicroObject& x,
                                 const ParameterSet& p) {
  if (!(f.dims() == p.dims())) throw DimensionMismatch("family built for different (q, n, T)");
  return PublicObservable{evaluate_entries(f, realize(x, p)), f.ell(), f.fingerprint()};
}

PublicObservable observe(const ObservableFamily& f, const MicroObject& x, const ParameterSet& p,
                         RandomSource& rng) {
  if (!(f.dims() == p.dims())) throw DimensionMismatch("family built for different (q, n, T)");
  return PublicObservable{evaluate_entries(f, realize(x, p), &rng), f.ell(), f.fingerprint()};
}

ObservableFamily compose_postprocess(const PostProcessor& h, const ObservableFamily& f) {
  std::uint32_t ell = f.ell();
  switch (h.kind) {
    case PostProcessor::Kind::identity:
    case PostProcessor::Kind::keep_first: break;
    case PostProcessor::Kind::truncate_bits: ell = h.param; break;
    case PostProcessor::Kind::constant: ell = 1; break;
  }
  return ObservableFamily(f.dims(), ell,
                          PostProcessed{std::make_shared<const ObservableFamily>(f), h});
}

std::vector<std::uint8_t> serialize_public(const PublicObservable& y) {
  if (y.ell < 1 || y.ell > 64) throw InvalidParameters("public observable ell must be in [1, 64]");
  if (y.entries.size() > 0xFFFFFFFFu) throw InvalidParameters("too many entries");
  std::vector<std::uint8_t> out(std::begin(kPublicMagic), std::end(kPublicMagic));
  out.push_back(kPublicVersion);
  const auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  put_u32(static_cast<std::uint32_t>(y.entries.size()));
  put_u32(y.ell);
  out.insert(out.end(), y.fingerprint.begin(), y.fingerprint.end());
  BitWriter w;
  for (auto e : y.entries) {
    if (y.ell < 64 && (e >> y.ell) != 0) throw InvalidParameters("entry exceeds ell bits");
    w.put(e, y.ell);
  }
  auto payload = std::move(w).finish();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

PublicObservable parse_public(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPublicHeaderBytes) throw ParseError("public observable: truncated header");
  for (int i = 0; i < 4; ++i) {
    if (bytes[i] != kPublicMagic[i]) throw ParseError("public observable: bad magic");
  }
  if (bytes[4] != kPublicVersion) throw ParseError("public observable: unsupported version");
  const auto get_u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[off + i];
    return v;
  };
  const std::uint32_t m = get_u32(5);
  const std::uint32_t ell = get_u32(9);
  if (ell < 1 || ell > 64) throw ParseError("public observable: ell out of range");
  const std::uint64_t payload_bits = std::uint64_t{m} * ell;
  const std::uint64_t payload_bytes = (payload_bits + 7) / 8;
  if (bytes.size() != kPublicHeaderBytes + payload_bytes) {
    throw ParseError("public observable: length does not match m and ell");
  }
  PublicObservable y;
  y.ell = ell;
  std::copy(bytes.begin() + 13, bytes.begin() + 45, y.fingerprint.begin());
  BitReader r(bytes.subspan(kPublicHeaderBytes));
  y.entries.resize(m);
  for (auto& e : y.entries) e = r.get(ell);
  if (!r.rest_is_zero()) throw ParseError("public observable: nonzero padding");
  return y;
}

std::uint32_t min_entry_width(const Modulus& q) {
  return static_cast<std::uint32_t>(std::max<std::size_t>(1, ceil_log2(q.value())));
}

namespace {

StateVector random_state(const PathDims& d, RandomSource& rng) {
  StateVector v(d.n);
  for (std::size_t k = 0; k < d.n; ++k) v[k] = static_cast<Residue>(rng.uniform_below(d.q.value()));
  return v;
}

std::vector<std::vector<StateVector>> random_table(const PathDims& d, std::size_t m,
                                                   std::size_t len, RandomSource& rng) {
  std::vector<std::vector<StateVector>> t(m);
  for (auto& row : t) {
    row.reserve(len);
    for (std::size_t i = 0; i < len; ++i) row.push_back(random_state(d, rng));
  }
  return t;
}

std::vector<std::vector<Residue>> random_residues(const PathDims& d, std::size_t m,
                                                  std::size_t len, RandomSource& rng) {
  std::vector<std::vector<Residue>> t(m, std::vector<Residue>(len));
  for (auto& row : t)
    for (auto& v : row) v = static_cast<Residue>(rng.uniform_below(d.q.value()));
  return t;
}

/// Dyadic weights k/16 with k in [-32, 32]; exact in binary so sums are platform-stable.
std::vector<std::vector<std::vector<double>>> random_weights(const PathDims& d, std::size_t m,
                                                             RandomSource& rng) {
  std::vector<std::vector<std::vector<double>>> t(
      m, std::vector<std::vector<double>>(d.T, std::vector<double>(d.n)));
  for (auto& row : t)
    for (auto& w : row)
      for (auto& x : w) x = (static_cast<double>(rng.uniform_below(65)) - 32.0) / 16.0;
  return t;
}

}  // namespace

ObservableFamily make_linear_projected(const PathDims& d, std::size_t m, std::uint32_t ell,
                                       const Seed& seed) {
  RandomSource rng(seed, "obs-coeffs");
  return ObservableFamily(d, ell, LinearProjected{random_table(d, m, d.T + 1, rng)});
}

ObservableFamily make_transition_energy(const PathDims& d, std::size_t m, std::uint32_t ell,
                                        const Seed& seed) {
  RandomSource rng(seed, "obs-coeffs");
  TransitionEnergy te;
  te.u = random_table(d, m, d.T, rng);
  te.v = random_table(d, m, d.T, rng);
  te.w = random_table(d, m, d.T, rng);
  return ObservableFamily(d, ell, std::move(te));
}

ObservableFamily make_quantized_real(const PathDims& d, std::size_t m, std::uint32_t ell,
                                     double tau, const NoiseSpec& observation_noise,
                                     const Seed& seed) {
  RandomSource rng(seed, "obs-coeffs");
  QuantizedReal qr;
  qr.state_w = random_weights(d, m, rng);
  qr.micro_w = random_weights(d, m, rng);
  qr.noise_w = random_weights(d, m, rng);
  qr.tau.assign(m, tau);
  qr.observation_noise = observation_noise;
  return ObservableFamily(d, ell, std::move(qr));
}

ObservableFamily make_nonlinear_local(const PathDims& d, std::size_t m, std::uint32_t ell,
                                      const Seed& seed) {
  RandomSource rng(seed, "obs-coeffs");
  NonlinearLocal nl;
  nl.chi = random_residues(d, m, d.T, rng);
  nl.a = random_table(d, m, d.T, rng);
  nl.b = random_table(d, m, d.T, rng);
  nl.d = random_table(d, m, d.T, rng);
  nl.c = random_residues(d, m, d.T, rng);
  return ObservableFamily(d, ell, std::move(nl));
}

ObservableFamily make_telescoping(const PathDims& d, std::uint32_t ell) {
  return ObservableFamily(d, ell, Telescoping{});
}

ObservableFamily make_all_states(const PathDims& d, std::uint32_t ell) {
  LinearProjected lp;
  for (std::size_t i = 0; i <= d.T; ++i) {
    for (std::size_t k = 0; k < d.n; ++k) {
      std::vector<StateVector> row(d.T + 1, StateVector(d.n));
      row[i][k] = 1;
      lp.a.push_back(std::move(row));
    }
  }
  return ObservableFamily(d, ell, std::move(lp));
}

ObservableFamily make_composite(std::vector<ObservableFamily> parts) {
  if (parts.empty()) throw InvalidParameters("composite family needs at least one part");
  const auto dims = parts.front().dims();
  const auto ell = parts.front().ell();
  return ObservableFamily(dims, ell, Composite{std::move(parts)});
}

}  // namespace nhp
