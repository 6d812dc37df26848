#pragma once

#include <cstdint>
#include <span>

namespace occtrack {

/// IEEE 754 binary16 storage. Arithmetic is done by widening to float and
/// rounding each result back, which reproduces native half arithmetic for
/// single add/mul operations.
struct Half {
  std::uint16_t bits = 0;
};

/// Round-to-nearest-even conversion; portable bit-twiddling version.
std::uint16_t float_to_half_bits(float value) noexcept;
float half_bits_to_float(std::uint16_t bits) noexcept;

inline Half to_half(float v) noexcept { return Half{float_to_half_bits(v)}; }
inline float to_float(Half h) noexcept { return half_bits_to_float(h.bits); }

/// Bulk conversions; use F16C when the build enables it.
void convert_to_half(std::span<const float> in, std::span<Half> out) noexcept;
void convert_to_float(std::span<const Half> in, std::span<float> out) noexcept;

bool has_hardware_half_conversion() noexcept;

}  // namespace occtrack
