#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flaudit/errors.hpp"
#include "flaudit/merkle.hpp"
#include "flaudit/signer.hpp"

// Signed training records and their hash trees. Each record carries a
// per-record Merkle tree over its x then y elements; the signature covers
// that tree's root. The global record tree has one leaf per record with
// payload encode(id) || sigma, a byte-exact hash(id|sigma). Ids are 1-based;
// the leaf ordinal is id - 1.

namespace flaudit {

struct Record {
  uint64_t id = 0;  // 1-based, assigned by the store
  std::vector<double> x;
  std::vector<double> y;
  Bytes sigma;
};

/// Root of the per-record tree over x_1..x_nX, y_1..y_nY (concatenated in
/// that order, one element per leaf).
Digest record_hash(std::span<const double> x, std::span<const double> y);

MerkleTree build_record_tree(std::span<const double> x,
                             std::span<const double> y);

bool validate_record(const Record& r, const Signer& authority);

Bytes record_leaf_payload(uint64_t id, ByteView sigma);

/// What crosses the isolation boundary to the monitor after preparation.
struct RecordDigestInfo {
  Digest h_r;
  uint64_t n_r = 0;
};

class RecordStore {
 public:
  /// Validates every record, assigns ids 1..n, and builds the global tree.
  /// Throws invalid_record naming the first failing position (1-based).
  static RecordStore build(std::vector<Record> records, const Signer& authority);

  const std::vector<Record>& records() const { return records_; }
  const Record& record(uint64_t id) const;
  uint64_t count() const { return records_.size(); }
  const MerkleTree& record_tree() const { return record_tree_; }
  RecordDigestInfo digest_info() const {
    return RecordDigestInfo{record_tree_.root(), count()};
  }

  /// Evidence for record `id` in the global tree.
  Evidence evidence_for(uint64_t id) const;
  /// Per-record tree, rebuilt on demand (workers keep tensors, not trees).
  MerkleTree per_record_tree(uint64_t id) const;

 private:
  std::vector<Record> records_;
  MerkleTree record_tree_;

  RecordStore(std::vector<Record> records, MerkleTree tree)
      : records_(std::move(records)), record_tree_(std::move(tree)) {}
};

/// Unsigned record data as loaded from disk: {n_X, n_Y, records:[{x,y}]}.
struct RecordFile {
  size_t n_x = 0;
  size_t n_y = 0;
  std::vector<Record> records;  // ids unset, sigmas empty
};

RecordFile load_records_json(const std::string& path);
RecordFile parse_records_json(const std::string& text);

/// Sign every record with the authority key (done at load by the harness).
std::vector<Record> sign_records(std::vector<Record> records,
                                 const Signer& authority);

}  // namespace flaudit
