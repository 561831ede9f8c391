#include "nhp/object.hpp"

namespace nhp {

void check_admissible(const MicroObject& x, const ParameterSet& p) {
  if (x.x0.size() != p.n) throw InvalidParameters("x0 has wrong dimension");
  for (auto c : x.x0.coords()) {
    if (c >= p.modulus.value()) throw InvalidParameters("x0 coordinate out of range");
  }
  if (p.boundary && x.x0 != p.boundary->start) {
    throw InvalidParameters("x0 differs from the fixed boundary start");
  }
  if (x.macro_idx.size() != p.T || x.micro_idx.size() != p.T || x.noise_lift.size() != p.T) {
    throw InvalidParameters("object sequences must all have length T");
  }
  for (std::size_t i = 0; i < p.T; ++i) {
    if (x.macro_idx[i] >= p.b()) throw InvalidParameters("macro index out of range");
    if (x.micro_idx[i] >= p.r()) throw InvalidParameters("micro index out of range");
    if (x.noise_lift[i].size() != p.n) throw InvalidParameters("noise lift has wrong dimension");
    const std::int64_t bound = p.noise.enabled ? p.noise.bound : 0;
    for (auto z : x.noise_lift[i]) {
      if (z < -bound || z > bound) throw InvalidParameters("noise lift outside [-B, B]");
    }
  }
}

bool is_admissible(const MicroObject& x, const ParameterSet& p) noexcept {
  try {
    check_admissible(x, p);
    return true;
  } catch (const Error&) {
    return false;
  }
}

StateVector noise_residue(const MicroObject& x, std::size_t step, const Modulus& q) {
  return make_state(x.noise_lift[step], q);
}

StateVector effective_increment(const MicroObject& x, std::size_t step, const ParameterSet& p) {
  const auto& q = p.modulus;
  StateVector u = add(p.macro_alphabet[x.macro_idx[step]], p.micro_alphabet[x.micro_idx[step]], q);
  return add(u, noise_residue(x, step, q), q);
}

std::vector<StateVector> iterate_path(const MicroObject& x, const ParameterSet& p) {
  check_admissible(x, p);
  std::vector<StateVector> path;
  path.reserve(p.T + 1);
  path.push_back(x.x0);
  for (std::size_t i = 0; i < p.T; ++i) {
    path.push_back(add(path.back(), effective_increment(x, i, p), p.modulus));
  }
  return path;
}

std::size_t state_path_distance(const std::vector<StateVector>& a,
                                const std::vector<StateVector>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("state paths have different lengths");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
  return d;
}

std::size_t object_distance(const MicroObject& a, const MicroObject& b, const ParameterSet& p) {
  std::size_t d = state_path_distance(iterate_path(a, p), iterate_path(b, p));
  for (std::size_t i = 0; i < p.T; ++i) {
    d += (a.macro_idx[i] != b.macro_idx[i]);
    d += (a.micro_idx[i] != b.micro_idx[i]);
    d += (a.noise_lift[i] != b.noise_lift[i]);
  }
  return d;
}

}  // namespace nhp
