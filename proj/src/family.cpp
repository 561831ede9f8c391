#include "nhp/family.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "nhp/random.hpp"

namespace nhp {

const char* family_kind_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::linear_projected: return "linear_projected";
    case FamilyKind::transition_energy: return "transition_energy";
    case FamilyKind::quantized_real: return "quantized_real";
    case FamilyKind::nonlinear_local: return "nonlinear_local";
    case FamilyKind::telescoping: return "telescoping";
    case FamilyKind::composite: return "composite";
    case FamilyKind::post_processed: return "post_processed";
  }
  return "unknown";
}

FamilyKind family_kind_from_name(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(FamilyKind::post_processed); ++k) {
    if (name == family_kind_name(static_cast<FamilyKind>(k))) return static_cast<FamilyKind>(k);
  }
  throw ParseError("unknown observable family kind '" + name + "'");
}

namespace {

struct ByteWriter {
  std::vector<std::uint8_t> out;

  void u8(std::uint8_t v) { out.push_back(v); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const StateVector& v) {
    for (auto c : v.coords()) u64(c);
  }
  void table(const std::vector<std::vector<StateVector>>& t) {
    u64(t.size());
    for (const auto& row : t) {
      u64(row.size());
      for (const auto& v : row) vec(v);
    }
  }
  void residues(const std::vector<std::vector<Residue>>& t) {
    u64(t.size());
    for (const auto& row : t) {
      u64(row.size());
      for (auto r : row) u64(r);
    }
  }
  void weights(const std::vector<std::vector<std::vector<double>>>& t) {
    u64(t.size());
    for (const auto& row : t) {
      u64(row.size());
      for (const auto& w : row) {
        u64(w.size());
        for (double x : w) f64(x);
      }
    }
  }
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidParameters(msg);
}

void check_table(const std::vector<std::vector<StateVector>>& t, std::size_t m, std::size_t len,
                 const PathDims& d, const char* name) {
  require(t.size() == m, std::string(name) + ": expected " + std::to_string(m) + " rows");
  for (const auto& row : t) {
    require(row.size() == len, std::string(name) + ": expected " + std::to_string(len) +
                                   " coefficient vectors per row");
    for (const auto& v : row) {
      require(v.size() == d.n, std::string(name) + ": coefficient vector has wrong dimension");
      for (auto c : v.coords()) require(c < d.q.value(), std::string(name) + ": coefficient not in Z_q");
    }
  }
}

void check_residues(const std::vector<std::vector<Residue>>& t, std::size_t m, std::size_t len,
                    const PathDims& d, const char* name) {
  require(t.size() == m, std::string(name) + ": wrong number of rows");
  for (const auto& row : t) {
    require(row.size() == len, std::string(name) + ": wrong row length");
    for (auto c : row) require(c < d.q.value(), std::string(name) + ": coefficient not in Z_q");
  }
}

void check_weights(const std::vector<std::vector<std::vector<double>>>& t, std::size_t m,
                   const PathDims& d, const char* name) {
  require(t.size() == m, std::string(name) + ": wrong number of rows");
  for (const auto& row : t) {
    require(row.size() == d.T, std::string(name) + ": wrong row length");
    for (const auto& w : row) {
      require(w.size() == d.n, std::string(name) + ": weight vector has wrong dimension");
      for (double x : w) require(std::isfinite(x), std::string(name) + ": non-finite weight");
    }
  }
}

}  // namespace

ObservableFamily::ObservableFamily(PathDims dims, std::uint32_t ell, Body body)
    : dims_(dims), ell_(ell), body_(std::move(body)) {
  ByteWriter w;
  w.u8(1);  // description format version
  w.u8(static_cast<std::uint8_t>(kind()));
  w.u64(dims_.q.value());
  w.u64(dims_.n);
  w.u64(dims_.T);

  const auto q = dims_.q.value();
  const auto require_width_for_q = [&] {
    require(ell_ >= 1 && ell_ <= 63, "entry width ell must be in [1, 63]");
    require((std::uint64_t{1} << ell_) >= q,
            "mod-q families need 2^ell >= q (ell=" + std::to_string(ell_) + ")");
  };

  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, LinearProjected>) {
          m_ = f.a.size();
          check_table(f.a, m_, dims_.T + 1, dims_, "linear_projected.a");
          require_width_for_q();
          mod_q_ = true;
          state_only_ = true;
          w.table(f.a);
        } else if constexpr (std::is_same_v<F, TransitionEnergy>) {
          m_ = f.u.size();
          check_table(f.u, m_, dims_.T, dims_, "transition_energy.u");
          check_table(f.v, m_, dims_.T, dims_, "transition_energy.v");
          check_table(f.w, m_, dims_.T, dims_, "transition_energy.w");
          require_width_for_q();
          mod_q_ = true;
          state_only_ = true;
          w.table(f.u);
          w.table(f.v);
          w.table(f.w);
        } else if constexpr (std::is_same_v<F, QuantizedReal>) {
          m_ = f.tau.size();
          require(ell_ >= 1 && ell_ <= 63, "entry width ell must be in [1, 63]");
          check_weights(f.state_w, m_, dims_, "quantized_real.state_w");
          check_weights(f.micro_w, m_, dims_, "quantized_real.micro_w");
          check_weights(f.noise_w, m_, dims_, "quantized_real.noise_w");
          for (double t : f.tau) require(t > 0.0 && std::isfinite(t), "quantizer scale tau must be > 0");
          f.observation_noise.validate();
          obs_noise_ = f.observation_noise.enabled;
          w.weights(f.state_w);
          w.weights(f.micro_w);
          w.weights(f.noise_w);
          w.u64(f.tau.size());
          for (double t : f.tau) w.f64(t);
          w.u8(f.observation_noise.enabled ? 1 : 0);
          w.f64(f.observation_noise.sigma);
          w.u64(static_cast<std::uint64_t>(f.observation_noise.bound));
          // Bins are reduced mod 2^ell; recorded so two widths never share a fingerprint.
          w.u8(0xB1);
        } else if constexpr (std::is_same_v<F, NonlinearLocal>) {
          m_ = f.chi.size();
          check_residues(f.chi, m_, dims_.T, dims_, "nonlinear_local.chi");
          check_table(f.a, m_, dims_.T, dims_, "nonlinear_local.a");
          check_table(f.b, m_, dims_.T, dims_, "nonlinear_local.b");
          check_table(f.d, m_, dims_.T, dims_, "nonlinear_local.d");
          check_residues(f.c, m_, dims_.T, dims_, "nonlinear_local.c");
          require_width_for_q();
          mod_q_ = true;
          w.residues(f.chi);
          w.table(f.a);
          w.table(f.b);
          w.table(f.d);
          w.residues(f.c);
        } else if constexpr (std::is_same_v<F, Telescoping>) {
          m_ = dims_.n;
          require_width_for_q();
          mod_q_ = true;
          state_only_ = true;
        } else if constexpr (std::is_same_v<F, Composite>) {
          require(!f.parts.empty(), "composite family needs at least one part");
          mod_q_ = true;
          state_only_ = true;
          w.u64(f.parts.size());
          for (const auto& part : f.parts) {
            require(part.dims() == dims_, "composite part built for different (q, n, T)");
            require(part.ell() == ell_, "composite parts must share the entry width ell");
            m_ += part.m();
            mod_q_ = mod_q_ && part.is_mod_q();
            state_only_ = state_only_ && part.depends_only_on_states();
            obs_noise_ = obs_noise_ || part.has_observation_noise();
            for (auto b : part.fingerprint()) w.u8(b);
          }
        } else if constexpr (std::is_same_v<F, PostProcessed>) {
          require(f.inner != nullptr, "post-processed family needs an inner family");
          const auto& inner = *f.inner;
          require(inner.dims() == dims_, "post-processor inner family has different (q, n, T)");
          obs_noise_ = inner.has_observation_noise();
          state_only_ = inner.depends_only_on_states();
          switch (f.h.kind) {
            case PostProcessor::Kind::identity:
              require(ell_ == inner.ell(), "identity post-processor keeps ell");
              m_ = inner.m();
              mod_q_ = inner.is_mod_q();
              break;
            case PostProcessor::Kind::truncate_bits:
              require(f.h.param >= 1 && f.h.param <= inner.ell(),
                      "truncate width must be in [1, inner ell]");
              require(ell_ == f.h.param, "truncated family ell must equal the kept width");
              m_ = inner.m();
              mod_q_ = inner.is_mod_q() && f.h.param == inner.ell();
              break;
            case PostProcessor::Kind::keep_first:
              require(f.h.param >= 1 && f.h.param <= inner.m(),
                      "keep-first count must be in [1, inner m]");
              require(ell_ == inner.ell(), "keep-first post-processor keeps ell");
              m_ = f.h.param;
              mod_q_ = inner.is_mod_q();
              break;
            case PostProcessor::Kind::constant:
              require(ell_ == 1, "constant post-processor has ell = 1");
              m_ = 1;
              mod_q_ = false;
              state_only_ = true;
              break;
          }
          w.u8(static_cast<std::uint8_t>(f.h.kind));
          w.u64(f.h.param);
          for (auto b : inner.fingerprint()) w.u8(b);
        }
      },
      body_);

  require(m_ >= 1, "observable family needs m >= 1 entries");
  w.u64(m_);
  w.u64(ell_);

  // Per-entry group orders.
  entry_moduli_.clear();
  if (const auto* comp = std::get_if<Composite>(&body_)) {
    for (const auto& part : comp->parts) {
      entry_moduli_.insert(entry_moduli_.end(), part.entry_moduli().begin(),
                           part.entry_moduli().end());
    }
  } else if (const auto* pp = std::get_if<PostProcessed>(&body_)) {
    const auto& inner = *pp->inner;
    switch (pp->h.kind) {
      case PostProcessor::Kind::identity: entry_moduli_ = inner.entry_moduli(); break;
      case PostProcessor::Kind::keep_first:
        entry_moduli_.assign(inner.entry_moduli().begin(),
                             inner.entry_moduli().begin() + static_cast<long>(m_));
        break;
      case PostProcessor::Kind::truncate_bits:
        entry_moduli_.assign(m_, mod_q_ ? q : (std::uint64_t{1} << ell_));
        break;
      case PostProcessor::Kind::constant: entry_moduli_.assign(1, 2); break;
    }
  } else {
    entry_moduli_.assign(m_, mod_q_ ? q : (std::uint64_t{1} << ell_));
  }

  fingerprint_ = blake2b_256(w.out);
}

}  // namespace nhp
