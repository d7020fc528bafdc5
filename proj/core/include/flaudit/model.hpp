#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flaudit/nn.hpp"
#include "flaudit/schemes.hpp"
#include "flaudit/signer.hpp"

namespace flaudit {

/// One hidden layer: a transformation (convolution or full connection)
/// followed by an elementwise activation.
struct Layer {
  enum class Kind { conv, fc };
  Kind kind = Kind::fc;
  ConvSpec conv;
  std::vector<Tensor> filters;  // conv only
  FcSpec fc;
  Tensor theta;  // fc only
  ActivationKind activation = ActivationKind::identity;

  size_t input_size() const;
  size_t output_size() const;
};

struct GlobalModel {
  std::vector<Layer> layers;
  uint64_t version = 0;

  size_t input_size() const { return layers.front().input_size(); }
  size_t output_size() const { return layers.back().output_size(); }
  /// Checks layer chaining and per-layer invariants.
  void validate() const;
};

/// Per-component signatures the coordinator publishes with the model, so a
/// worker cannot swap components before handing them to its monitor.
struct ModelSignatures {
  // filter_sigs[layer][t]; empty vector for fc layers
  std::vector<std::vector<Bytes>> filter_sigs;
  // theta commitments per layer (fc layers only; zeroed otherwise)
  std::vector<Digest> theta_fwd_roots;
  std::vector<Digest> theta_bwd_roots;
  std::vector<Bytes> theta_fwd_sigs;
  std::vector<Bytes> theta_bwd_sigs;
};

struct ModelPackage {
  GlobalModel model;
  ModelSignatures signatures;
};

Bytes filter_sign_payload(uint64_t version, size_t layer, size_t t,
                          const Tensor& filter);
Bytes theta_sign_payload(uint64_t version, size_t layer, bool forward,
                         const Digest& root);

/// Weight deltas a worker submits after a round (already scaled by -eta).
struct ModelUpdate {
  // one entry per layer: filter deltas for conv, a theta delta for fc
  std::vector<std::vector<Tensor>> filter_deltas;
  std::vector<Tensor> theta_deltas;

  Digest digest() const;
};

// ---- stage naming ----

enum class StageKind {
  transform_fwd,
  act_fwd,
  loss,
  act_bwd,
  transform_bwd,
};

struct StageId {
  size_t layer = 0;  // unused for loss
  StageKind kind = StageKind::loss;

  bool operator==(const StageId&) const = default;
};

std::string stage_name(const GlobalModel& model, const StageId& id);

/// Canonical stage order for one round: forward through every layer and the
/// loss, then backward to layer 0.
std::vector<StageId> stage_program(const GlobalModel& model);

/// Number of fakeable computation slots in a stage. For a convolution
/// backward stage this covers both the per-filter input gradients and the
/// expanded filter-gradient entries; for the loss stage the gradient entries
/// plus the loss value itself.
size_t stage_slot_count(const GlobalModel& model, const StageId& id,
                        size_t n_y);

/// Which audit battery probes a given slot, and the structured probe tuple
/// that lands on it. Used by tests that force a probe onto a faked slot.
struct ProbeTarget {
  enum class Battery { simd, conv_fwd, conv_dx, conv_df, fc_fwd, fc_bwd, final_layer };
  Battery battery;
  std::vector<uint64_t> tuple;
};

ProbeTarget stage_slot_target(const GlobalModel& model, const StageId& id,
                              uint64_t slot, size_t n_y);

}  // namespace flaudit
