#include "nhp/encoding.hpp"

namespace nhp {

std::size_t ceil_log2(std::uint64_t x) noexcept {
  std::size_t bits = 0;
  while (bits < 64 && (std::uint64_t{1} << bits) < x) ++bits;
  return bits;
}

EncodingLayout encoding_layout(const ParameterSet& p) {
  EncodingLayout l{};
  l.residue_bits = ceil_log2(p.modulus.value());
  l.macro_bits = ceil_log2(p.b());
  l.micro_bits = ceil_log2(p.r());
  l.noise_bits = p.noise.enabled ? ceil_log2(static_cast<std::uint64_t>(2 * p.noise.bound + 1)) : 0;
  l.total_bits = 8 + p.n * l.residue_bits + p.T * (l.macro_bits + l.micro_bits + p.n * l.noise_bits);
  return l;
}

void BitWriter::put(std::uint64_t value, std::size_t bits) {
  for (std::size_t i = 0; i < bits; ++i) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if ((value >> i) & 1U) bytes_.back() |= static_cast<std::uint8_t>(1U << (bits_ % 8));
    ++bits_;
  }
}

std::vector<std::uint8_t> BitWriter::finish() && { return std::move(bytes_); }

std::uint64_t BitReader::get(std::size_t bits) {
  if (pos_ + bits > bytes_.size() * 8) throw DecodeError("bit stream exhausted");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bits; ++i, ++pos_) {
    if ((bytes_[pos_ / 8] >> (pos_ % 8)) & 1U) v |= std::uint64_t{1} << i;
  }
  return v;
}

bool BitReader::rest_is_zero() const {
  for (std::size_t p = pos_; p < bytes_.size() * 8; ++p) {
    if ((bytes_[p / 8] >> (p % 8)) & 1U) return false;
  }
  return true;
}

std::vector<std::uint8_t> encode_object(const MicroObject& x, const ParameterSet& p) {
  check_admissible(x, p);
  const auto l = encoding_layout(p);
  const std::int64_t bound = p.noise.enabled ? p.noise.bound : 0;
  BitWriter w;
  w.put(p.encoding_version, 8);
  for (auto c : x.x0.coords()) w.put(c, l.residue_bits);
  for (auto i : x.macro_idx) w.put(i, l.macro_bits);
  for (auto i : x.micro_idx) w.put(i, l.micro_bits);
  for (const auto& eta : x.noise_lift) {
    for (auto z : eta) w.put(static_cast<std::uint64_t>(z + bound), l.noise_bits);
  }
  return std::move(w).finish();
}

MicroObject decode_object(std::span<const std::uint8_t> bytes, const ParameterSet& p) {
  const auto l = encoding_layout(p);
  if (bytes.size() != l.total_bytes()) {
    throw DecodeError("encoded object must be " + std::to_string(l.total_bytes()) +
                      " bytes, got " + std::to_string(bytes.size()));
  }
  BitReader r(bytes);
  const auto version = r.get(8);
  if (version != p.encoding_version) {
    throw DecodeError("encoding version " + std::to_string(version) + " does not match " +
                      std::to_string(p.encoding_version));
  }
  MicroObject x;
  x.x0 = StateVector(p.n);
  for (std::size_t k = 0; k < p.n; ++k) {
    const auto v = r.get(l.residue_bits);
    if (v >= p.modulus.value()) throw DecodeError("x0 residue out of range");
    x.x0[k] = static_cast<Residue>(v);
  }
  x.macro_idx.resize(p.T);
  x.micro_idx.resize(p.T);
  for (auto& i : x.macro_idx) {
    const auto v = r.get(l.macro_bits);
    if (v >= p.b()) throw DecodeError("macro index out of range");
    i = static_cast<std::uint32_t>(v);
  }
  for (auto& i : x.micro_idx) {
    const auto v = r.get(l.micro_bits);
    if (v >= p.r()) throw DecodeError("micro index out of range");
    i = static_cast<std::uint32_t>(v);
  }
  const std::int64_t bound = p.noise.enabled ? p.noise.bound : 0;
  x.noise_lift.assign(p.T, std::vector<std::int64_t>(p.n, 0));
  for (auto& eta : x.noise_lift) {
    for (auto& z : eta) {
      const auto v = static_cast<std::int64_t>(r.get(l.noise_bits));
      if (v > 2 * bound) throw DecodeError("noise lift out of range");
      z = v - bound;
    }
  }
  if (!r.rest_is_zero()) throw DecodeError("nonzero padding bits");
  if (p.boundary && x.x0 != p.boundary->start) throw DecodeError("x0 violates fixed boundary");
  return x;
}

}  // namespace nhp
