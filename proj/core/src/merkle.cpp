#include "flaudit/merkle.hpp"

#include "flaudit/errors.hpp"

namespace flaudit {

Digest leaf_digest(ByteView payload) {
  Sha256 h;
  h.update(uint8_t(0x00));
  h.update(payload);
  return h.finish();
}

Digest internal_digest(const Digest& left, const Digest& right) {
  Sha256 h;
  h.update(uint8_t(0x01));
  h.update(left.view());
  h.update(right.view());
  return h.finish();
}

void MerkleTree::build_levels() {
  while (levels_.back().size() > 1) {
    const auto& prev = levels_.back();
    std::vector<Digest> next;
    next.reserve((prev.size() + 1) / 2);
    for (size_t i = 0; i + 1 < prev.size(); i += 2) {
      next.push_back(internal_digest(prev[i], prev[i + 1]));
    }
    if (prev.size() % 2 == 1) next.push_back(prev.back());  // promote
    levels_.push_back(std::move(next));
  }
}

MerkleTree MerkleTree::from_leaf_bytes(std::span<const Bytes> leaves) {
  require(!leaves.empty(), ErrorCode::empty_input, "construct_commit: no leaves");
  std::vector<Digest> digests;
  digests.reserve(leaves.size());
  for (const auto& payload : leaves) digests.push_back(leaf_digest(payload));
  return from_leaf_digests(std::move(digests));
}

MerkleTree MerkleTree::from_leaf_digests(std::vector<Digest> leaves) {
  require(!leaves.empty(), ErrorCode::empty_input, "construct_commit: no leaves");
  MerkleTree t;
  t.levels_.push_back(std::move(leaves));
  t.build_levels();
  return t;
}

const Digest& MerkleTree::leaf(uint64_t i) const {
  require(i < leaf_count(), ErrorCode::index_out_of_range, "leaf index");
  return levels_[0][i];
}

Evidence MerkleTree::evidence_for(uint64_t i) const {
  require(i < leaf_count(), ErrorCode::index_out_of_range,
          "evidence_for: index past leaf count");
  Evidence evid;
  evid.index = i;
  uint64_t idx = i;
  for (size_t lvl = 0; lvl + 1 < levels_.size(); lvl++) {
    const auto& nodes = levels_[lvl];
    uint64_t sib = idx ^ 1;
    if (sib < nodes.size()) {
      Side side = (idx % 2 == 0) ? Side::right : Side::left;
      evid.path.push_back({nodes[sib], side});
    }
    // otherwise idx is the promoted last node of an odd level: no step
    idx /= 2;
  }
  return evid;
}

bool verify_leaf(const Digest& leaf, uint64_t index, const Digest& commitment,
                 const Evidence& evid, uint64_t leaf_count) {
  if (leaf_count == 0 || index >= leaf_count) return false;
  if (evid.index != index) return false;
  Digest acc = leaf;
  uint64_t idx = index;
  uint64_t width = leaf_count;
  size_t step = 0;
  while (width > 1) {
    bool promoted = (idx == width - 1) && (width % 2 == 1);
    if (!promoted) {
      if (step >= evid.path.size()) return false;
      const auto& s = evid.path[step++];
      Side expected = (idx % 2 == 0) ? Side::right : Side::left;
      if (s.side != expected) return false;
      acc = (s.side == Side::right) ? internal_digest(acc, s.sibling)
                                    : internal_digest(s.sibling, acc);
    }
    idx /= 2;
    width = (width + 1) / 2;
  }
  return step == evid.path.size() && acc == commitment;
}

bool verify_element(ByteView payload, uint64_t index, const Digest& commitment,
                    const Evidence& evid, uint64_t leaf_count) {
  return verify_leaf(leaf_digest(payload), index, commitment, evid, leaf_count);
}

MerkleTree group_commit(std::span<const std::vector<double>> groups) {
  require(!groups.empty(), ErrorCode::empty_input, "group_commit: no groups");
  std::vector<Digest> digests;
  digests.reserve(groups.size());
  for (const auto& g : groups) {
    require(!g.empty(), ErrorCode::empty_input, "group_commit: empty group");
    digests.push_back(leaf_digest(group_payload(g)));
  }
  return MerkleTree::from_leaf_digests(std::move(digests));
}

Bytes MerkleTree::serialize() const {
  Bytes out;
  append_u64_le(out, leaf_count());
  for (const auto& level : levels_) {
    for (const auto& d : level) append(out, d.view());
  }
  return out;
}

MerkleTree MerkleTree::deserialize(ByteView blob) {
  require(blob.size() >= 8, ErrorCode::domain_error, "merkle blob too short");
  uint64_t n = 0;
  for (int i = 0; i < 8; i++) n |= uint64_t(blob[i]) << (8 * i);
  require(n > 0, ErrorCode::empty_input, "merkle blob: zero leaves");

  uint64_t total = 0;
  for (uint64_t w = n;; w = (w + 1) / 2) {
    total += w;
    if (w == 1) break;
  }
  require(blob.size() == 8 + total * 32, ErrorCode::domain_error,
          "merkle blob: size mismatch");

  MerkleTree t;
  size_t pos = 8;
  for (uint64_t w = n;; w = (w + 1) / 2) {
    std::vector<Digest> level(w);
    for (uint64_t i = 0; i < w; i++) {
      std::copy(blob.begin() + pos, blob.begin() + pos + 32,
                level[i].bytes.begin());
      pos += 32;
    }
    t.levels_.push_back(std::move(level));
    if (w == 1) break;
  }

  // reject blobs whose internal structure does not hash out
  for (size_t lvl = 0; lvl + 1 < t.levels_.size(); lvl++) {
    const auto& cur = t.levels_[lvl];
    const auto& up = t.levels_[lvl + 1];
    for (size_t i = 0; i + 1 < cur.size(); i += 2) {
      require(up[i / 2] == internal_digest(cur[i], cur[i + 1]),
              ErrorCode::domain_error, "merkle blob: bad internal hash");
    }
    if (cur.size() % 2 == 1) {
      require(up.back() == cur.back(), ErrorCode::domain_error,
              "merkle blob: bad promoted node");
    }
  }
  return t;
}

}  // namespace flaudit
