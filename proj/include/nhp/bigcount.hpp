#pragma once

#include <cstdint>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace nhp {

/// Exact nonnegative counting integer. Counts never go through floating point.
using BigCount = boost::multiprecision::cpp_int;

inline BigCount big_pow(const BigCount& base, std::uint64_t exponent) {
  BigCount result = 1;
  BigCount b = base;
  while (exponent > 0) {
    if (exponent & 1U) result *= b;
    b *= b;
    exponent >>= 1U;
  }
  return result;
}

inline BigCount pow2(std::uint64_t exponent) {
  BigCount result = 1;
  result <<= exponent;
  return result;
}

inline std::string to_string(const BigCount& value) { return value.str(); }

/// log2 of a positive count, good to double precision even for huge values.
double log2_big(const BigCount& value);

/// True iff value == 2^k for some k; stores k.
bool is_power_of_two(const BigCount& value, std::uint64_t* exponent = nullptr);

}  // namespace nhp
