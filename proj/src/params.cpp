#include "nhp/params.hpp"

#include <set>

namespace nhp {

BigCount ParameterSet::noise_support() const {
  if (!noise.enabled) return 1;
  return big_pow(BigCount(2 * noise.bound + 1), n);
}

BigCount ParameterSet::support_size() const {
  BigCount per_step = BigCount(b()) * BigCount(r()) * noise_support();
  BigCount total = big_pow(per_step, T);
  if (x0_free()) total *= big_pow(BigCount(modulus.value()), n);
  return total;
}

const ObservableFamily& ParameterSet::require_family() const {
  if (!family) throw InvalidParameters("parameter set has no observable family");
  return *family;
}

namespace {

void check_alphabet(const std::vector<StateVector>& alphabet, std::size_t n, const Modulus& q,
                    const char* name) {
  std::set<StateVector> seen;
  for (const auto& v : alphabet) {
    if (v.size() != n) {
      throw InvalidParameters(std::string(name) + " entry has dimension " +
                              std::to_string(v.size()) + ", expected " + std::to_string(n));
    }
    for (auto c : v.coords()) {
      if (c >= q.value()) throw InvalidParameters(std::string(name) + " entry not reduced mod q");
    }
    if (!seen.insert(v).second) {
      throw InvalidParameters(std::string(name) + " contains duplicate " + to_string(v));
    }
  }
}

}  // namespace

void ParameterSet::validate() const {
  if (n < 1) throw InvalidParameters("dimension n must be >= 1");
  if (T < 1) throw InvalidParameters("path length T must be >= 1");
  check_alphabet(macro_alphabet, n, modulus, "macro_alphabet");
  check_alphabet(micro_alphabet, n, modulus, "micro_alphabet");
  noise.validate();
  if (encoding_version != kEncodingVersion) {
    throw InvalidParameters("unsupported encoding_version " + std::to_string(encoding_version));
  }
  if (boundary) {
    if (boundary->start.size() != n) throw InvalidParameters("boundary start has wrong dimension");
    if (boundary->end && boundary->end->size() != n) {
      throw InvalidParameters("boundary end has wrong dimension");
    }
  }
  if (family && !(family->dims() == dims())) {
    throw InvalidParameters("observable family was built for different (q, n, T)");
  }
}

std::vector<StateVector> make_alphabet(const std::vector<std::vector<std::int64_t>>& rows,
                                       const Modulus& q) {
  std::vector<StateVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(make_state(r, q));
  return out;
}

}  // namespace nhp
