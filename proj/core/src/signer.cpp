#include "flaudit/signer.hpp"

#include "flaudit/encode.hpp"

namespace flaudit {

Bytes hmac_sha256(ByteView key, ByteView message) {
  std::array<uint8_t, 64> block{};
  if (key.size() > 64) {
    Digest kd = sha256(key);
    std::copy(kd.bytes.begin(), kd.bytes.end(), block.begin());
  } else {
    std::copy(key.begin(), key.end(), block.begin());
  }
  std::array<uint8_t, 64> ipad, opad;
  for (int i = 0; i < 64; i++) {
    ipad[i] = block[i] ^ 0x36;
    opad[i] = block[i] ^ 0x5c;
  }
  Sha256 inner;
  inner.update(ByteView(ipad.data(), ipad.size()));
  inner.update(message);
  Digest inner_digest = inner.finish();
  Sha256 outer;
  outer.update(ByteView(opad.data(), opad.size()));
  outer.update(inner_digest.view());
  Digest mac = outer.finish();
  return Bytes(mac.bytes.begin(), mac.bytes.end());
}

HmacSigner HmacSigner::from_seed(uint64_t seed, const std::string& role) {
  Bytes material;
  append_u64_le(material, seed);
  material.insert(material.end(), role.begin(), role.end());
  Digest d = sha256(material);
  return HmacSigner(Bytes(d.bytes.begin(), d.bytes.end()));
}

Bytes HmacSigner::sign(ByteView message) const { return hmac_sha256(key_, message); }

bool HmacSigner::verify(ByteView message, ByteView signature) const {
  Bytes expected = hmac_sha256(key_, message);
  if (signature.size() != expected.size()) return false;
  uint8_t diff = 0;
  for (size_t i = 0; i < expected.size(); i++) diff |= expected[i] ^ signature[i];
  return diff == 0;
}

}  // namespace flaudit
