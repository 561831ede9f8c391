#include "nhp/pathgen.hpp"

#include <cmath>
#include <sstream>

#include "nhp/encoding.hpp"
#include "nhp/noise.hpp"

namespace nhp {

MicroObject sample_object(const ParameterSet& p, RandomSource& rng) {
  if (p.macro_alphabet.empty() || p.micro_alphabet.empty()) {
    throw InvalidParameters("cannot sample with an empty alphabet");
  }
  Seed root{};
  rng.fill(root);
  RandomSource x0_rng(root, "x0");
  RandomSource macro_rng(root, "macro");
  RandomSource micro_rng(root, "micro");
  RandomSource noise_rng(root, "noise");

  MicroObject x;
  if (p.boundary) {
    x.x0 = p.boundary->start;
  } else {
    x.x0 = StateVector(p.n);
    for (std::size_t k = 0; k < p.n; ++k) {
      x.x0[k] = static_cast<Residue>(x0_rng.uniform_below(p.modulus.value()));
    }
  }
  x.macro_idx.resize(p.T);
  x.micro_idx.resize(p.T);
  for (auto& i : x.macro_idx) i = static_cast<std::uint32_t>(macro_rng.uniform_below(p.b()));
  for (auto& i : x.micro_idx) i = static_cast<std::uint32_t>(micro_rng.uniform_below(p.r()));
  x.noise_lift.assign(p.T, std::vector<std::int64_t>(p.n, 0));
  if (p.noise.enabled) {
    const TdgTable table(p.noise);
    for (auto& eta : x.noise_lift) {
      for (auto& z : eta) z = table.sample(noise_rng);
    }
  }
  return x;
}

double sample_probability(const MicroObject& x, const ParameterSet& p) {
  if (!is_admissible(x, p)) return 0.0;
  double pr = std::pow(static_cast<double>(p.b()) * static_cast<double>(p.r()), -static_cast<double>(p.T));
  if (!p.boundary) pr *= std::pow(static_cast<double>(p.modulus.value()), -static_cast<double>(p.n));
  if (p.noise.enabled) {
    const TdgTable table(p.noise);
    for (const auto& eta : x.noise_lift)
      for (auto z : eta) pr *= table.probability(z);
  }
  return pr;
}

std::string RejectionPolicy::describe() const {
  std::ostringstream os;
  os << "accept iff macro-index order-0 entropy >= " << min_macro_entropy
     << " bits/symbol (max " << max_attempts << " attempts)";
  return os.str();
}

double histogram_entropy(const std::vector<std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

std::optional<MicroObject> sample_object_rejecting(const ParameterSet& p, RandomSource& rng,
                                                   const RejectionPolicy& policy) {
  for (std::size_t attempt = 0; attempt < policy.max_attempts; ++attempt) {
    MicroObject x = sample_object(p, rng);
    std::vector<std::uint64_t> hist(p.b(), 0);
    for (auto i : x.macro_idx) ++hist[i];
    if (histogram_entropy(hist) >= policy.min_macro_entropy) return x;
  }
  return std::nullopt;
}

std::optional<double> autocorrelation(const std::vector<double>& seq, std::size_t lag) {
  if (lag == 0 || seq.size() <= lag) return std::nullopt;
  double mean = 0.0;
  for (double v : seq) mean += v;
  mean /= static_cast<double>(seq.size());
  double denom = 0.0;
  for (double v : seq) denom += (v - mean) * (v - mean);
  if (denom <= 0.0) return std::nullopt;
  double num = 0.0;
  for (std::size_t t = 0; t + lag < seq.size(); ++t) num += (seq[t] - mean) * (seq[t + lag] - mean);
  return num / denom;
}

DiagnosticsReport generator_diagnostics(const std::vector<MicroObject>& samples,
                                        const ParameterSet& p) {
  if (samples.size() < 2) throw InvalidParameters("diagnostics need at least 2 samples");
  constexpr std::size_t kMaxLag = 4;
  DiagnosticsReport rep;
  rep.samples = samples.size();
  rep.macro_histogram.assign(p.T, std::vector<std::uint64_t>(p.b(), 0));
  rep.micro_histogram.assign(p.T, std::vector<std::uint64_t>(p.r(), 0));
  std::vector<std::uint64_t> macro_all(p.b(), 0), micro_all(p.r(), 0);
  std::vector<std::uint64_t> byte_hist(256, 0);

  std::vector<std::vector<double>> ac_sum(p.n, std::vector<double>(kMaxLag, 0.0));
  std::vector<std::vector<std::size_t>> ac_cnt(p.n, std::vector<std::size_t>(kMaxLag, 0));

  // Pooled macro-index autocorrelation uses the global mean and variance.
  double idx_mean = 0.0;
  for (const auto& x : samples) {
    for (auto i : x.macro_idx) idx_mean += i;
  }
  idx_mean /= static_cast<double>(samples.size() * p.T);
  std::vector<double> idx_num(kMaxLag, 0.0);
  double idx_den = 0.0;

  for (const auto& x : samples) {
    for (std::size_t i = 0; i < p.T; ++i) {
      ++rep.macro_histogram[i][x.macro_idx[i]];
      ++rep.micro_histogram[i][x.micro_idx[i]];
      ++macro_all[x.macro_idx[i]];
      ++micro_all[x.micro_idx[i]];
      const double d = x.macro_idx[i] - idx_mean;
      idx_den += d * d;
      for (std::size_t lag = 1; lag <= kMaxLag && i + lag < p.T; ++lag) {
        idx_num[lag - 1] += d * (x.macro_idx[i + lag] - idx_mean);
      }
    }
    const auto path = iterate_path(x, p);
    for (std::size_t k = 0; k < p.n; ++k) {
      std::vector<double> seq;
      seq.reserve(path.size());
      for (const auto& s : path) seq.push_back(static_cast<double>(s[k]));
      for (std::size_t lag = 1; lag <= kMaxLag; ++lag) {
        if (auto r = autocorrelation(seq, lag)) {
          ac_sum[k][lag - 1] += *r;
          ++ac_cnt[k][lag - 1];
        }
      }
    }
    for (auto byte : encode_object(x, p)) ++byte_hist[byte];
  }

  for (std::size_t i = 0; i < p.T; ++i) {
    rep.macro_step_entropy.push_back(histogram_entropy(rep.macro_histogram[i]));
    rep.micro_step_entropy.push_back(histogram_entropy(rep.micro_histogram[i]));
  }
  rep.macro_entropy = histogram_entropy(macro_all);
  rep.micro_entropy = histogram_entropy(micro_all);
  rep.state_autocorrelation.assign(p.n, std::vector<double>(kMaxLag, 0.0));
  for (std::size_t k = 0; k < p.n; ++k) {
    for (std::size_t lag = 0; lag < kMaxLag; ++lag) {
      if (ac_cnt[k][lag]) rep.state_autocorrelation[k][lag] = ac_sum[k][lag] / ac_cnt[k][lag];
    }
  }
  rep.macro_index_autocorrelation.assign(kMaxLag, 0.0);
  if (idx_den > 0.0) {
    for (std::size_t lag = 0; lag < kMaxLag; ++lag) rep.macro_index_autocorrelation[lag] = idx_num[lag] / idx_den;
  }
  rep.encoding_entropy_bits_per_byte = histogram_entropy(byte_hist);
  return rep;
}

}  // namespace nhp
