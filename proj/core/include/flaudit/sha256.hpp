#pragma once

#include <array>
#include <compare>
#include <cstdint>

#include "flaudit/bytes.hpp"

namespace flaudit {

/// 32-byte hash value. Equality is byte equality.
struct Digest {
  std::array<uint8_t, 32> bytes{};

  auto operator<=>(const Digest&) const = default;
  std::string hex() const { return to_hex(bytes); }
  ByteView view() const { return ByteView(bytes.data(), bytes.size()); }
};

/// Incremental SHA-256 (FIPS 180-4).
class Sha256 {
 public:
  Sha256() { reset(); }
  void reset();
  void update(ByteView data);
  void update(uint8_t byte) { update(ByteView(&byte, 1)); }
  Digest finish();

 private:
  void process_block(const uint8_t* block);

  std::array<uint32_t, 8> state_;
  uint64_t total_len_ = 0;
  std::array<uint8_t, 64> buffer_;
  size_t buffer_len_ = 0;
};

Digest sha256(ByteView data);

}  // namespace flaudit
