#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nhp/object.hpp"
#include "nhp/params.hpp"

namespace nhp {

/// Bit widths of the canonical witness encoding for one parameter set.
struct EncodingLayout {
  std::size_t residue_bits;  // ceil(log2 q)
  std::size_t macro_bits;    // ceil(log2 b)
  std::size_t micro_bits;    // ceil(log2 r)
  std::size_t noise_bits;    // ceil(log2(2B+1)); 0 when noise is disabled
  std::size_t total_bits;    // 8 + n*residue + T*(macro + micro + n*noise)

  std::size_t total_bytes() const noexcept { return (total_bits + 7) / 8; }
};

/// ceil(log2 x) for x >= 1.
std::size_t ceil_log2(std::uint64_t x) noexcept;

EncodingLayout encoding_layout(const ParameterSet& p);

/// Canonical injective encoding. Layout, LSB-first within a little-endian byte stream:
/// version byte; x0 as n residues; T macro indices; T micro indices; T noise vectors,
/// each coordinate stored as the offset lift z + B. Zero padding to a byte boundary.
std::vector<std::uint8_t> encode_object(const MicroObject& x, const ParameterSet& p);

/// Inverse of encode_object. Throws DecodeError on wrong length, nonzero padding,
/// version mismatch or any out-of-range field.
MicroObject decode_object(std::span<const std::uint8_t> bytes, const ParameterSet& p);

/// LSB-first bit packing shared by the witness and public-key formats.
class BitWriter {
 public:
  void put(std::uint64_t value, std::size_t bits);
  std::vector<std::uint8_t> finish() &&;
  std::size_t bit_count() const noexcept { return bits_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint64_t get(std::size_t bits);
  std::size_t position() const noexcept { return pos_; }
  /// True when every bit from the current position to the end is zero.
  bool rest_is_zero() const;

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace nhp
