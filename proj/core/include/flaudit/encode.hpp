#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>

#include "flaudit/bytes.hpp"

// Canonical byte layout for committed values. This layout is normative:
// two implementations that disagree here produce different roots.
//   - 64-bit floats -> 8 bytes of the IEEE-754 bit pattern, little-endian
//   - 64-bit unsigned indices -> 8 bytes little-endian
//   - byte strings pass through unchanged

namespace flaudit {

inline void append_u64_le(Bytes& out, uint64_t v) {
  for (int i = 0; i < 8; i++) out.push_back(uint8_t(v >> (8 * i)));
}

inline void append_f64(Bytes& out, double v) {
  append_u64_le(out, std::bit_cast<uint64_t>(v));
}

inline Bytes encode_index(uint64_t v) {
  Bytes out;
  out.reserve(8);
  append_u64_le(out, v);
  return out;
}

inline Bytes encode_f64(double v) {
  Bytes out;
  out.reserve(8);
  append_f64(out, v);
  return out;
}

inline Bytes encode_f64_seq(std::span<const double> values) {
  Bytes out;
  out.reserve(values.size() * 8);
  for (double v : values) append_f64(out, v);
  return out;
}

}  // namespace flaudit
