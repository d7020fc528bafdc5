#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flaudit/coordinator.hpp"
#include "flaudit/messages.hpp"
#include "flaudit/records.hpp"
#include "flaudit/rng.hpp"
#include "flaudit/worker.hpp"

namespace flaudit {

using WorkerChannel = std::function<Response(const Challenge&)>;

struct ProbeRecord {
  std::vector<uint64_t> tuple;
  std::string failed;  // name of the failing sub-test, empty when clean
};

struct TestReport {
  std::string stage;
  std::string battery;
  std::vector<ProbeRecord> probes;
  bool honest = true;
  std::string reason;
  uint64_t reads_scalars = 0;    // worker scalars retrieved
  uint64_t reads_digests = 0;    // evidence digests retrieved
  uint64_t recompute_mults = 0;  // multiplications spent re-deriving values

  std::string to_json_line() const;
};

/// Trusted local monitor for one worker. After vetting the signed model
/// package it keeps the filters and theta group commitments but drops theta
/// itself; at round time it holds only {h_R, n_R}, per-stage committed
/// roots, and the audit transcripts. Training data enters only through
/// audited retrievals.
class Monitor {
 public:
  /// Verifies the package against the coordinator key before trusting any
  /// component (throws bad_signature). p is the per-stage probe count, >= 2.
  Monitor(RecordDigestInfo record_info, const ModelPackage& package,
          const Signer& cs_key, const Signer& authority_key,
          HmacSigner endorse_key, size_t p, uint64_t seed);

  size_t probes_per_stage() const { return p_; }

  /// Install the package for a new round (new model version); verified the
  /// same way as at construction.
  void set_package(const ModelPackage& package);

  /// Draws the record id for this round.
  uint64_t begin_round(uint64_t round);
  /// Checks the opening of hash(id|sigma) against h_R and the authority
  /// signature over the per-record root. Records an "init" report.
  bool check_init(const InitReply& reply);
  /// Records stage roots after vetting tree names and leaf counts against
  /// the model-derived layout. Returns false (and flags the round) on a
  /// malformed commitment.
  bool on_commit(const CommitMsg& msg);

  /// Runs every battery the stage calls for, appending reports.
  std::vector<TestReport> test_stage(const StageId& id,
                                     const WorkerChannel& channel);
  /// One battery with an optional forced probe plan (used by tests that
  /// must land on a chosen index).
  TestReport run_battery(
      const StageId& id, ProbeTarget::Battery battery,
      const WorkerChannel& channel,
      const std::optional<std::vector<std::vector<uint64_t>>>& plan =
          std::nullopt);

  bool round_honest() const;
  const std::vector<TestReport>& reports() const { return reports_; }

  /// Signature over (round, updates digest); refuses when any verdict this
  /// round is dishonest or commitments are missing.
  Bytes endorse(const Digest& updates_digest);

 private:
  struct CommitmentRef {
    Digest root;
    uint64_t leaves = 0;
  };

  const CommitmentRef* find_root(const std::string& stage,
                                 const std::string& tree) const;
  bool check_entry(TestReport& report, const Response& resp, size_t at,
                   const std::string& stage, const std::string& tree,
                   uint64_t ordinal, size_t payload_len,
                   const std::string& subtest);
  Response ask(const WorkerChannel& channel, const Challenge& challenge,
               TestReport& report);

  // committed-vector views used by the elementwise (SIMD) battery
  struct VectorView {
    enum class Kind { element, conv_rows, row_fold, tuple_fold };
    Kind kind = Kind::element;
    std::string stage;
    std::string tree;
    size_t dim0 = 0;   // conv_rows: alpha_y; tuple_fold: alpha_x
    size_t width = 0;  // payload length
  };
  VectorView transform_output_view(size_t l) const;
  VectorView upstream_gradient_view(size_t l) const;
  void view_probe(const VectorView& view, uint64_t flat,
                  Challenge& challenge) const;
  std::optional<double> view_value(const VectorView& view, uint64_t flat,
                                   const Response& resp, size_t at,
                                   TestReport& report,
                                   const std::string& subtest);

  TestReport battery_simd(const StageId& id, const WorkerChannel& channel,
                          const std::vector<std::vector<uint64_t>>& plan);
  TestReport battery_conv_fwd(size_t l, const WorkerChannel& channel,
                              const std::vector<std::vector<uint64_t>>& plan);
  TestReport battery_conv_dx(size_t l, const WorkerChannel& channel,
                             const std::vector<std::vector<uint64_t>>& plan);
  TestReport battery_conv_df(size_t l, const WorkerChannel& channel,
                             const std::vector<std::vector<uint64_t>>& plan);
  TestReport battery_fc(size_t l, bool forward, const WorkerChannel& channel,
                        const std::vector<std::vector<uint64_t>>& plan);
  TestReport battery_final(const WorkerChannel& channel);

  std::vector<std::vector<uint64_t>> draw_plan(const StageId& id,
                                               ProbeTarget::Battery battery);

  Digest h_r_;
  uint64_t n_r_ = 0;
  GlobalModel trusted_;  // theta values dropped
  ModelSignatures signatures_;
  size_t n_y_ = 0;
  HmacSigner endorse_key_;
  const Signer* cs_key_;
  const Signer* authority_key_;
  size_t p_;
  Rng rng_;

  uint64_t round_ = 0;
  uint64_t record_id_ = 0;
  Digest record_root_;
  bool init_ok_ = false;
  std::map<std::string, std::map<std::string, CommitmentRef>> roots_;
  std::map<std::string, double> stage_scalars_;
  std::vector<TestReport> reports_;
  std::vector<StageId> program_;
  size_t commits_seen_ = 0;
};

std::string battery_name(ProbeTarget::Battery battery);

}  // namespace flaudit
