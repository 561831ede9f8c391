#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>

namespace nhp {

using Seed = std::array<std::uint8_t, 32>;

Seed seed_from_hex(std::string_view hex);
std::string seed_to_hex(const Seed& seed);
/// Convenience for tests and fixtures: a seed whose first 8 bytes hold `value` little-endian.
Seed seed_from_u64(std::uint64_t value);

/// Deterministic, domain-separated random stream.
///
/// The stream key is BLAKE2b-256 keyed by the root seed over "nhp.rs.v1\0" || label;
/// the stream itself is ChaCha20 keystream under that key. Sources built from the same
/// root with different labels are independent. The same (root, label) always yields
/// the same stream.
///
/// Satisfies UniformRandomBitGenerator so it can drive <random> and <algorithm>.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  RandomSource(const Seed& root, std::string_view label);

  /// A source keyed by this source's key and `label`. Does not touch this stream.
  RandomSource child(std::string_view label) const;
  /// Draws 32 fresh bytes from this stream and roots a new labelled source on them.
  RandomSource fork(std::string_view label);

  std::uint64_t next_u64();
  /// Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  void fill(std::span<std::uint8_t> out);

  const std::string& label() const noexcept { return label_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

 private:
  void refill();

  std::array<std::uint8_t, 32> key_{};
  std::string label_;
  std::array<std::uint8_t, 1024> buffer_{};
  std::size_t pos_ = 1024;
  std::uint64_t block_counter_ = 0;
};

/// BLAKE2b-256 over `data`, optionally keyed.
std::array<std::uint8_t, 32> blake2b_256(std::span<const std::uint8_t> data,
                                         std::span<const std::uint8_t> key = {});

}  // namespace nhp
