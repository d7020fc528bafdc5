#pragma once

#include <string>
#include <vector>

#include "flaudit/ledger.hpp"
#include "flaudit/model.hpp"

namespace flaudit {

struct EndorsedUpdate {
  std::string worker;
  ModelUpdate update;
};

/// Central server: signs and distributes the global model, collects endorsed
/// updates, applies their unweighted mean, and evicts workers that fail to
/// produce an endorsement for a round.
class Coordinator {
 public:
  Coordinator(GlobalModel initial, HmacSigner key);

  const GlobalModel& model() const { return model_; }
  uint64_t version() const { return model_.version; }

  /// Model plus per-component signatures (filters, theta group commitments).
  ModelPackage publish() const;

  /// Applies the mean of endorsed deltas; each update must have a matching
  /// endorsement in the ledger. Active workers missing from `updates` are
  /// evicted through the ledger. Returns the new version.
  uint64_t aggregate(uint64_t round, const std::vector<EndorsedUpdate>& updates,
                     Ledger& ledger);

 private:
  GlobalModel model_;
  HmacSigner key_;
};

/// Signature material a monitor needs to vet a package it did not fetch
/// itself; verification failure throws bad_signature.
void verify_package(const ModelPackage& pkg, const Signer& cs_key);

}  // namespace flaudit
