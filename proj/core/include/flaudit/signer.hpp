#pragma once

#include <memory>
#include <string>

#include "flaudit/bytes.hpp"
#include "flaudit/sha256.hpp"

namespace flaudit {

/// Pluggable signature scheme. The default is a keyed-hash MAC, which is
/// enough for this simulation: every verifying party is trusted and holds
/// the key. A deployment would substitute an asymmetric scheme here.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual std::string scheme() const = 0;
  virtual Bytes sign(ByteView message) const = 0;
  virtual bool verify(ByteView message, ByteView signature) const = 0;
};

Bytes hmac_sha256(ByteView key, ByteView message);

class HmacSigner final : public Signer {
 public:
  explicit HmacSigner(Bytes key) : key_(std::move(key)) {}
  /// Deterministic key derivation for simulation setups.
  static HmacSigner from_seed(uint64_t seed, const std::string& role);

  std::string scheme() const override { return "hmac-sha256"; }
  Bytes sign(ByteView message) const override;
  bool verify(ByteView message, ByteView signature) const override;

 private:
  Bytes key_;
};

}  // namespace flaudit
