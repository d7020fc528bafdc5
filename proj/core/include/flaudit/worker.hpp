#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flaudit/messages.hpp"
#include "flaudit/model.hpp"
#include "flaudit/records.hpp"
#include "flaudit/rng.hpp"

namespace flaudit {

struct CheatStrategy {
  enum class Mode {
    none,
    fake_outputs,      // perturb m outputs of the target stage before committing
    fake_evidence,     // answer target-stage challenges with forged co-paths
    wrong_record,      // substitute a different record at round init
    skip_computation,  // commit zeros for the target stage instead of computing
  };
  Mode mode = Mode::none;
  std::string target_stage;  // stage name; ignored for wrong_record
  uint64_t m = 0;            // fake_outputs only
  uint64_t seed = 0;

  static CheatStrategy none() { return CheatStrategy{}; }
};

struct InitReply {
  uint64_t record_id = 0;
  Bytes sigma;
  Digest record_root;
  Evidence evidence;  // membership of hash(id|sigma) under h_R
};

/// One committed tree plus everything needed to serve probes on it. The
/// leaf payloads are kept verbatim; ordinal_of maps a structured probe tuple
/// to the leaf ordinal (the normative layout).
struct CommittedTree {
  MerkleTree tree;
  std::vector<std::vector<double>> leaves;
  std::function<uint64_t(std::span<const uint64_t>)> ordinal_of;
};

/// The untrusted worker: runs the stages of a round, builds every commitment
/// structure, answers monitor challenges, and optionally cheats. Trees are
/// finalized inside run_stage, before any challenge index is revealed;
/// answer() refuses stages that have not committed.
class Worker {
 public:
  Worker(std::string name, const RecordStore* store, ModelPackage package,
         CheatStrategy cheat);

  const std::string& name() const { return name_; }
  const GlobalModel& model() const { return package_.model; }

  /// Fetch a fresh package at the start of a round (new model version).
  void set_package(ModelPackage package);

  InitReply begin_round(uint64_t round, uint64_t requested_id);
  CommitMsg run_stage(const StageId& id);
  Response answer(const Challenge& challenge);
  /// Weight deltas of the completed round (conv filter and theta updates).
  ModelUpdate round_update() const;

  /// Flat slots perturbed by fake_outputs in the given stage this round.
  const std::vector<uint64_t>& faked_slots(const std::string& stage) const;

  // instrumentation: scalars / digests shipped in responses
  uint64_t scalars_served() const { return scalars_served_; }
  uint64_t digests_served() const { return digests_served_; }
  void reset_counters();

 private:
  struct LayerBuffers {
    std::vector<double> input;          // forward input (flat)
    std::vector<double> transform_out;  // flat Y, possibly faked
    Tensor partials;                    // fc forward partial sums
    std::vector<double> act_out;
    std::vector<double> grad_act_out;        // dL/d act_out
    std::vector<double> grad_transform_out;  // dL/d transform_out
    Tensor bwd_partials;                     // fc backward partial sums
    std::vector<double> grad_input;          // dL/d input
    ConvBackward conv_bwd;
    Tensor grad_theta;
  };

  void install_tree(const std::string& stage, const std::string& tree_id,
                    std::vector<std::vector<double>> leaves,
                    std::function<uint64_t(std::span<const uint64_t>)> ord,
                    CommitMsg& msg);
  CommitMsg run_transform_fwd(size_t l);
  CommitMsg run_act_fwd(size_t l);
  CommitMsg run_loss();
  CommitMsg run_act_bwd(size_t l);
  CommitMsg run_transform_bwd(size_t l);
  /// Applies this round's fake_outputs plan to the stage slot space and
  /// returns the chosen slots (empty when the stage is not targeted).
  std::vector<uint64_t> plan_fakes(const StageId& id);
  double fake_delta();
  bool targets(const StageId& id) const;

  std::string name_;
  const RecordStore* store_;
  ModelPackage package_;
  CheatStrategy cheat_;
  Rng cheat_rng_;

  uint64_t round_ = 0;
  uint64_t record_id_ = 0;
  std::vector<double> x0_;  // layer-0 input
  std::vector<double> y_target_;
  LossResult loss_;
  std::vector<LayerBuffers> layers_;
  std::vector<StageId> program_;
  size_t next_stage_ = 0;

  std::map<std::string, std::map<std::string, CommittedTree>> trees_;
  std::map<std::string, std::vector<uint64_t>> fakes_;
  uint64_t scalars_served_ = 0;
  uint64_t digests_served_ = 0;
};

}  // namespace flaudit
