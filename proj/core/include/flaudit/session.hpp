#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "flaudit/coordinator.hpp"
#include "flaudit/monitor.hpp"
#include "flaudit/worker.hpp"

namespace flaudit {

struct StageVerdict {
  std::string stage;
  std::string battery;
  bool honest = true;
  std::string reason;
};

struct RoundResult {
  uint64_t round = 0;
  uint64_t record_id = 0;
  bool honest = true;
  std::string first_failure;  // stage/battery of the first dishonest verdict
  std::vector<StageVerdict> verdicts;
  std::vector<TestReport> reports;
  bool endorsed = false;
  Bytes endorsement;
  ModelUpdate update;   // meaningful only when the round completed
  Digest update_digest;
  uint64_t monitor_reads_scalars = 0;
  uint64_t monitor_reads_digests = 0;
};

/// Drives one worker/monitor pair through a full round: init, every stage
/// in program order (commit, then audit), and endorsement. Auditing stops at
/// the first dishonest verdict, mirroring the protocol's early abort. The
/// optional transcript sink receives every message as a JSON line.
RoundResult run_round(Worker& worker, Monitor& monitor, uint64_t round,
                      const std::function<void(const std::string&)>* transcript = nullptr);

/// One worker slot in a federation simulation.
struct FederationWorker {
  std::string name;
  CheatStrategy cheat;
};

struct FederationConfig {
  uint64_t rounds = 1;
  size_t p = 2;
  uint64_t seed = 1;
  int64_t deposit = 0;       // 0: derive from required_deposit
  int64_t required_deposit = 1'000'000;
  std::vector<FederationWorker> workers;
};

struct WorkerRoundOutcome {
  std::string worker;
  bool participated = false;
  bool honest = false;
  bool endorsed = false;
  bool slashed_this_round = false;
  std::string first_failure;
  uint64_t record_id = 0;
};

struct FederationRoundReport {
  uint64_t round = 0;
  std::vector<WorkerRoundOutcome> workers;
  uint64_t model_version_after = 0;
  bool aggregated = false;
};

/// Whole-system simulation: coordinator, ledger, one (worker, monitor) pair
/// per configured worker. Dishonest verdicts slash immediately; endorsed
/// updates aggregate into the next model version.
class Federation {
 public:
  Federation(GlobalModel initial_model, RecordFile records,
             FederationConfig config);

  /// Receives every per-stage TestReport as it is produced.
  using ReportSink = std::function<void(uint64_t round, const std::string& worker,
                                        const TestReport& report)>;
  void set_report_sink(ReportSink sink) { report_sink_ = std::move(sink); }

  FederationRoundReport run_one_round();
  std::vector<FederationRoundReport> run_all();

  const Ledger& ledger() const { return ledger_; }
  const Coordinator& coordinator() const { return coordinator_; }
  uint64_t rounds_run() const { return next_round_; }

 private:
  struct Slot {
    std::string name;
    std::unique_ptr<RecordStore> store;
    std::unique_ptr<Worker> worker;
    std::unique_ptr<Monitor> monitor;
  };

  FederationConfig config_;
  HmacSigner cs_key_;
  HmacSigner authority_key_;
  Coordinator coordinator_;
  Ledger ledger_;
  std::vector<Slot> slots_;
  uint64_t next_round_ = 0;
  ReportSink report_sink_;
};

}  // namespace flaudit
