#include "nhp/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nhp {

void NoiseSpec::validate() const {
  if (!enabled) return;
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidParameters("noise sigma must be a positive finite number");
  }
  if (bound < 0) throw InvalidParameters("noise truncation bound B must be >= 0");
  if (bound > 1'000'000) throw InvalidParameters("noise truncation bound B is unreasonably large");
}

double rho(double sigma, std::int64_t z) {
  const double zz = static_cast<double>(z);
  return std::exp(-std::numbers::pi * zz * zz / (sigma * sigma));
}

TdgTable::TdgTable(const NoiseSpec& spec) : bound_(spec.bound) {
  if (!spec.enabled) throw InvalidParameters("sampling from a disabled noise spec");
  spec.validate();
  prob_.resize(static_cast<std::size_t>(2 * bound_ + 1));
  double total = 0.0;
  for (std::int64_t z = -bound_; z <= bound_; ++z) {
    prob_[static_cast<std::size_t>(z + bound_)] = rho(spec.sigma, z);
  }
  // Sum smallest-first so the normalisation is symmetric in z and -z.
  std::vector<double> sorted = prob_;
  std::sort(sorted.begin(), sorted.end());
  for (double p : sorted) total += p;
  cdf_.resize(prob_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < prob_.size(); ++i) {
    prob_[i] /= total;
    acc += prob_[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

double TdgTable::probability(std::int64_t z) const {
  if (z < -bound_ || z > bound_) return 0.0;
  return prob_[static_cast<std::size_t>(z + bound_)];
}

std::int64_t TdgTable::sample(RandomSource& rng) const {
  const double u = rng.uniform01();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()),
                                         cdf_.size() - 1);
  return static_cast<std::int64_t>(idx) - bound_;
}

std::int64_t sample_tdg(const NoiseSpec& spec, RandomSource& rng) {
  return TdgTable(spec).sample(rng);
}

std::optional<std::int64_t> canonical_lift(Residue residue, std::int64_t bound, const Modulus& q) {
  const auto qq = static_cast<std::int64_t>(q.value());
  if (qq <= 2 * bound) {
    throw AliasError("reduction mod " + std::to_string(qq) + " is not injective on [-" +
                     std::to_string(bound) + ", " + std::to_string(bound) + "]");
  }
  const auto r = static_cast<std::int64_t>(residue % q.value());
  if (r <= bound) return r;
  if (r - qq >= -bound) return r - qq;
  return std::nullopt;
}

}  // namespace nhp
