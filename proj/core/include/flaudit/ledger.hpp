#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flaudit/bytes.hpp"
#include "flaudit/errors.hpp"
#include "flaudit/signer.hpp"

// Simulated smart contract: deposits, slashing with eviction, and the
// endorsement registry. Amounts are integer micro-units. State is a pure
// fold over the append-only event log, so replaying the log reproduces it.

namespace flaudit {

struct LedgerEvent {
  enum class Kind { join, slash, endorsement };
  Kind kind;
  std::string worker;
  int64_t amount = 0;      // join: deposit; slash: amount taken
  uint64_t round = 0;      // endorsement only
  std::string reason;      // slash only
  Bytes signature;         // endorsement only
  Bytes updates_digest;    // endorsement only

  std::string to_json_line() const;
  static LedgerEvent from_json_line(const std::string& line);
};

struct WorkerAccount {
  int64_t balance = 0;
  bool evicted = false;
};

struct EndorsementRecord {
  uint64_t round = 0;
  Bytes updates_digest;
  Bytes signature;
};

class Ledger {
 public:
  Ledger() = default;

  /// Register the monitor key that endorsements for `worker` must verify
  /// under. Key setup is off-contract (pre-shared in config).
  void register_monitor_key(const std::string& worker, HmacSigner key);

  /// Worker joins with deposit d; requires d >= required.
  void join(const std::string& worker, int64_t deposit, int64_t required);

  /// Full balance moves to the coordinator; worker becomes evicted.
  void slash(const std::string& worker, const std::string& reason);

  /// Records an endorsement after verifying the signature under the
  /// worker's registered monitor key.
  void record_endorsement(const std::string& worker, uint64_t round,
                          const Bytes& updates_digest, const Bytes& signature);

  bool is_active(const std::string& worker) const;
  std::vector<std::string> active_workers() const;
  int64_t balance(const std::string& worker) const;
  int64_t coordinator_balance() const { return coordinator_balance_; }
  int64_t total_balance() const;
  std::optional<EndorsementRecord> endorsement(const std::string& worker,
                                               uint64_t round) const;

  const std::vector<LedgerEvent>& events() const { return events_; }
  std::string snapshot_json() const;

  /// Rebuild state by folding an event log (no signature re-checks; the log
  /// is trusted storage).
  static Ledger replay(const std::vector<LedgerEvent>& events);

 private:
  void apply(const LedgerEvent& ev);

  std::map<std::string, WorkerAccount> accounts_;
  std::map<std::string, HmacSigner> monitor_keys_;
  std::map<std::pair<std::string, uint64_t>, EndorsementRecord> endorsements_;
  int64_t coordinator_balance_ = 0;
  std::vector<LedgerEvent> events_;
};

}  // namespace flaudit
