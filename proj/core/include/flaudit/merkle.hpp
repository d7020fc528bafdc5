#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flaudit/encode.hpp"
#include "flaudit/sha256.hpp"

// Merkle commitments over vectors of values.
//
// Domain separation: leaf = H(0x00 || payload), internal = H(0x01 || L || R).
// A level with an odd node count promotes its last node unchanged (no
// duplication). Evidence carries one (sibling, side) step per level at which
// the climbing node has a sibling; `side` is the side the sibling sits on.

namespace flaudit {

enum class Side : uint8_t { left = 0, right = 1 };

struct EvidenceStep {
  Digest sibling;
  Side side;

  bool operator==(const EvidenceStep&) const = default;
};

/// Membership proof for one leaf: the co-path hashes from leaf to root.
struct Evidence {
  uint64_t index = 0;
  std::vector<EvidenceStep> path;

  bool operator==(const Evidence&) const = default;
};

Digest leaf_digest(ByteView payload);
Digest internal_digest(const Digest& left, const Digest& right);

class MerkleTree {
 public:
  /// Construct_Commit over raw leaf payloads.
  static MerkleTree from_leaf_bytes(std::span<const Bytes> leaves);
  /// Same, starting from precomputed leaf digests.
  static MerkleTree from_leaf_digests(std::vector<Digest> leaves);

  const Digest& root() const { return levels_.back()[0]; }
  uint64_t leaf_count() const { return levels_[0].size(); }
  const Digest& leaf(uint64_t i) const;
  size_t level_count() const { return levels_.size(); }

  Evidence evidence_for(uint64_t i) const;

  /// u64 little-endian leaf count, then digests level by level from leaves
  /// up to the root.
  Bytes serialize() const;
  /// Rejects blobs whose internal hashes do not recompute.
  static MerkleTree deserialize(ByteView blob);

 private:
  MerkleTree() = default;
  void build_levels();

  std::vector<std::vector<Digest>> levels_;  // levels_[0] = leaves
};

/// Verify_Element: climb from H(0x00 || payload) through `evid` and compare
/// with `commitment`. The claimed index must equal evid.index and the side
/// flags must match the geometry implied by (index, leaf_count); without the
/// geometry check a relabelled foreign path would verify.
bool verify_element(ByteView payload, uint64_t index, const Digest& commitment,
                    const Evidence& evid, uint64_t leaf_count);

/// Same check starting from a precomputed leaf digest.
bool verify_leaf(const Digest& leaf, uint64_t index, const Digest& commitment,
                 const Evidence& evid, uint64_t leaf_count);

/// One leaf per group: payload is the concatenation of the group's encoded
/// values, so a whole group is committed and retrieved as a unit.
MerkleTree group_commit(std::span<const std::vector<double>> groups);

/// Payload bytes for a group of float values (usable with verify_element).
inline Bytes group_payload(std::span<const double> values) {
  return encode_f64_seq(values);
}

}  // namespace flaudit
