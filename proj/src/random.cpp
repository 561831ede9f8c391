#include "nhp/random.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

#include "nhp/errors.hpp"

namespace nhp {

namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) throw Error("libsodium initialisation failed");
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Seed seed_from_hex(std::string_view hex) {
  if (hex.size() != 64) throw ParseError("seed must be 64 hex characters");
  Seed s{};
  for (std::size_t i = 0; i < 32; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("seed contains a non-hex character");
    s[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return s;
}

std::string seed_to_hex(const Seed& seed) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : seed) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

Seed seed_from_u64(std::uint64_t value) {
  Seed s{};
  for (int i = 0; i < 8; ++i) s[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return s;
}

std::array<std::uint8_t, 32> blake2b_256(std::span<const std::uint8_t> data,
                                         std::span<const std::uint8_t> key) {
  ensure_sodium();
  std::array<std::uint8_t, 32> out{};
  crypto_generichash(out.data(), out.size(), data.data(), data.size(),
                     key.empty() ? nullptr : key.data(), key.size());
  return out;
}

RandomSource::RandomSource(const Seed& root, std::string_view label) : label_(label) {
  static constexpr char prefix[] = "nhp.rs.v1";
  std::string msg(prefix, sizeof(prefix));  // includes the terminating NUL as separator
  msg.append(label);
  key_ = blake2b_256(
      std::span(reinterpret_cast<const std::uint8_t*>(msg.data()), msg.size()), root);
}

RandomSource RandomSource::child(std::string_view label) const {
  return RandomSource(key_, label);
}

RandomSource RandomSource::fork(std::string_view label) {
  Seed root{};
  fill(root);
  return RandomSource(root, label);
}

void RandomSource::refill() {
  static_assert(sizeof(buffer_) % 64 == 0);
  std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
  std::memset(buffer_.data(), 0, buffer_.size());
  crypto_stream_chacha20_xor_ic(buffer_.data(), buffer_.data(), buffer_.size(), nonce.data(),
                                block_counter_, key_.data());
  block_counter_ += buffer_.size() / 64;
  pos_ = 0;
}

void RandomSource::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buffer_.size()) refill();
    const std::size_t take = std::min(out.size() - done, buffer_.size() - pos_);
    std::memcpy(out.data() + done, buffer_.data() + pos_, take);
    pos_ += take;
    done += take;
  }
}

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t RandomSource::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw Error("uniform_below: bound must be positive");
  // Rejection of the short tail keeps the result exactly uniform.
  const std::uint64_t limit = max() - (max() % bound + 1) % bound;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v > limit);
  return v % bound;
}

double RandomSource::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace nhp
