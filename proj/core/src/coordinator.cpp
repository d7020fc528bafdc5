#include "flaudit/coordinator.hpp"

namespace flaudit {

Coordinator::Coordinator(GlobalModel initial, HmacSigner key)
    : model_(std::move(initial)), key_(std::move(key)) {
  model_.validate();
}

ModelPackage Coordinator::publish() const {
  ModelPackage pkg;
  pkg.model = model_;
  auto& sig = pkg.signatures;
  sig.filter_sigs.resize(model_.layers.size());
  sig.theta_fwd_roots.resize(model_.layers.size());
  sig.theta_bwd_roots.resize(model_.layers.size());
  sig.theta_fwd_sigs.resize(model_.layers.size());
  sig.theta_bwd_sigs.resize(model_.layers.size());
  for (size_t l = 0; l < model_.layers.size(); l++) {
    const Layer& layer = model_.layers[l];
    if (layer.kind == Layer::Kind::conv) {
      for (size_t t = 0; t < layer.filters.size(); t++) {
        sig.filter_sigs[l].push_back(key_.sign(
            filter_sign_payload(model_.version, l, t, layer.filters[t])));
      }
    } else {
      FcSplit split_x = fc_layout(layer.fc.l_x);
      FcSplit split_y = fc_layout(layer.fc.l_y);
      sig.theta_fwd_roots[l] =
          build_theta_groups_tree(layer.theta, split_x).root();
      sig.theta_bwd_roots[l] =
          build_theta_bwd_groups_tree(layer.theta, split_y).root();
      sig.theta_fwd_sigs[l] = key_.sign(
          theta_sign_payload(model_.version, l, true, sig.theta_fwd_roots[l]));
      sig.theta_bwd_sigs[l] = key_.sign(
          theta_sign_payload(model_.version, l, false, sig.theta_bwd_roots[l]));
    }
  }
  return pkg;
}

void verify_package(const ModelPackage& pkg, const Signer& cs_key) {
  const GlobalModel& m = pkg.model;
  m.validate();
  const auto& sig = pkg.signatures;
  require(sig.filter_sigs.size() == m.layers.size() &&
              sig.theta_fwd_roots.size() == m.layers.size(),
          ErrorCode::bad_signature, "signature table size mismatch");
  for (size_t l = 0; l < m.layers.size(); l++) {
    const Layer& layer = m.layers[l];
    if (layer.kind == Layer::Kind::conv) {
      require(sig.filter_sigs[l].size() == layer.filters.size(),
              ErrorCode::bad_signature, "missing filter signatures");
      for (size_t t = 0; t < layer.filters.size(); t++) {
        require(cs_key.verify(
                    filter_sign_payload(m.version, l, t, layer.filters[t]),
                    sig.filter_sigs[l][t]),
                ErrorCode::bad_signature, "filter signature invalid");
      }
    } else {
      FcSplit split_x = fc_layout(layer.fc.l_x);
      FcSplit split_y = fc_layout(layer.fc.l_y);
      require(build_theta_groups_tree(layer.theta, split_x).root() ==
                  sig.theta_fwd_roots[l],
              ErrorCode::bad_signature, "theta forward root mismatch");
      require(build_theta_bwd_groups_tree(layer.theta, split_y).root() ==
                  sig.theta_bwd_roots[l],
              ErrorCode::bad_signature, "theta backward root mismatch");
      require(
          cs_key.verify(theta_sign_payload(m.version, l, true,
                                           sig.theta_fwd_roots[l]),
                        sig.theta_fwd_sigs[l]),
          ErrorCode::bad_signature, "theta forward signature invalid");
      require(
          cs_key.verify(theta_sign_payload(m.version, l, false,
                                           sig.theta_bwd_roots[l]),
                        sig.theta_bwd_sigs[l]),
          ErrorCode::bad_signature, "theta backward signature invalid");
    }
  }
}

uint64_t Coordinator::aggregate(uint64_t round,
                                const std::vector<EndorsedUpdate>& updates,
                                Ledger& ledger) {
  // a worker that cannot present an endorsed update leaves the system
  for (const auto& name : ledger.active_workers()) {
    bool present = false;
    for (const auto& u : updates) present |= (u.worker == name);
    if (!present) ledger.slash(name, "no endorsed update for round");
  }
  require(!updates.empty(), ErrorCode::no_endorsed_updates,
          "no endorsed updates for round " + std::to_string(round));
  for (const auto& u : updates) {
    auto endorsement = ledger.endorsement(u.worker, round);
    require(endorsement.has_value(), ErrorCode::no_endorsed_updates,
            u.worker + " has no recorded endorsement");
    Digest d = u.update.digest();
    require(Bytes(d.bytes.begin(), d.bytes.end()) ==
                endorsement->updates_digest,
            ErrorCode::bad_signature,
            u.worker + " update does not match its endorsement");
  }

  double scale = 1.0 / double(updates.size());
  for (size_t l = 0; l < model_.layers.size(); l++) {
    Layer& layer = model_.layers[l];
    if (layer.kind == Layer::Kind::conv) {
      for (size_t t = 0; t < layer.filters.size(); t++) {
        for (size_t k = 0; k < layer.filters[t].values.size(); k++) {
          double mean = 0.0;
          for (const auto& u : updates) {
            mean += u.update.filter_deltas[l][t].values[k];
          }
          layer.filters[t].values[k] += scale * mean;
        }
      }
    } else {
      for (size_t k = 0; k < layer.theta.values.size(); k++) {
        double mean = 0.0;
        for (const auto& u : updates) {
          mean += u.update.theta_deltas[l].values[k];
        }
        layer.theta.values[k] += scale * mean;
      }
    }
  }
  model_.version += 1;
  return model_.version;
}

}  // namespace flaudit
