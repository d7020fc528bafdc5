#pragma once

#include <memory>

#include "flaudit/monitor.hpp"
#include "flaudit/session.hpp"

// Shared scaffolding: build a worker/monitor pair over a synthetic model and
// record store, ready to drive through a round.

namespace flaudit::testing {

inline GlobalModel conv_fc_model(uint64_t seed, size_t alpha_x, size_t alpha_f,
                                 size_t stride, size_t n_f, size_t l_y,
                                 ActivationKind act = ActivationKind::sigmoid) {
  Rng rng(seed);
  GlobalModel model;
  Layer conv;
  conv.kind = Layer::Kind::conv;
  conv.conv = ConvSpec{n_f, alpha_f, stride, alpha_x, 0.05};
  for (size_t t = 0; t < n_f; t++) {
    Tensor f = Tensor::zeros({alpha_f, alpha_f});
    for (auto& v : f.values) v = rng.uniform(-0.5, 0.5);
    conv.filters.push_back(std::move(f));
  }
  conv.activation = act;
  model.layers.push_back(std::move(conv));

  Layer fc;
  fc.kind = Layer::Kind::fc;
  size_t l_x = model.layers[0].output_size();
  fc.fc = FcSpec{l_x, l_y, 0.05};
  fc.theta = Tensor::zeros({l_x, l_y});
  for (auto& v : fc.theta.values) v = rng.uniform(-0.5, 0.5);
  fc.activation = act;
  model.layers.push_back(std::move(fc));
  model.validate();
  return model;
}

inline GlobalModel fc_model(uint64_t seed, size_t l_x, size_t l_y,
                            ActivationKind act = ActivationKind::relu) {
  Rng rng(seed);
  GlobalModel model;
  Layer fc;
  fc.kind = Layer::Kind::fc;
  fc.fc = FcSpec{l_x, l_y, 0.05};
  fc.theta = Tensor::zeros({l_x, l_y});
  for (auto& v : fc.theta.values) v = rng.uniform(-0.5, 0.5);
  fc.activation = act;
  model.layers.push_back(std::move(fc));
  model.validate();
  return model;
}

struct Rig {
  HmacSigner cs_key;
  HmacSigner authority;
  std::unique_ptr<Coordinator> coordinator;
  ModelPackage pkg;
  std::unique_ptr<RecordStore> store;
  std::unique_ptr<Worker> worker;
  std::unique_ptr<Monitor> monitor;

  Rig() : cs_key(Bytes{}), authority(Bytes{}) {}

  WorkerChannel channel() {
    return [this](const Challenge& c) { return worker->answer(c); };
  }
};

inline Rig make_rig(GlobalModel model, size_t n_r, CheatStrategy cheat,
                    uint64_t seed, size_t p = 2) {
  Rig rig;
  rig.cs_key = HmacSigner::from_seed(seed, "coordinator");
  rig.authority = HmacSigner::from_seed(seed, "authority");
  rig.coordinator = std::make_unique<Coordinator>(std::move(model), rig.cs_key);
  rig.pkg = rig.coordinator->publish();

  Rng rng = Rng(seed).derive(0xdada);
  size_t n_x = rig.pkg.model.input_size();
  size_t n_y = rig.pkg.model.output_size();
  std::vector<Record> records(n_r);
  for (auto& r : records) {
    r.x.resize(n_x);
    r.y.resize(n_y);
    for (auto& v : r.x) v = rng.uniform();
    for (auto& v : r.y) v = rng.uniform();
  }
  rig.store = std::make_unique<RecordStore>(RecordStore::build(
      sign_records(std::move(records), rig.authority), rig.authority));
  rig.worker = std::make_unique<Worker>("w", rig.store.get(), rig.pkg, cheat);
  rig.monitor = std::make_unique<Monitor>(
      rig.store->digest_info(), rig.pkg, rig.cs_key, rig.authority,
      HmacSigner::from_seed(seed, "monitor:w"), p, derive_seed(seed, 0xa0d17));
  return rig;
}

/// Run init and commit every stage through `upto` (default: all stages)
/// without auditing, so batteries can be run selectively afterwards.
/// Returns false if init fails.
inline bool drive_to(Rig& rig, uint64_t round,
                     const std::optional<StageId>& upto = std::nullopt) {
  uint64_t id = rig.monitor->begin_round(round);
  if (!rig.monitor->check_init(rig.worker->begin_round(round, id))) {
    return false;
  }
  for (const StageId& stage : stage_program(rig.pkg.model)) {
    rig.monitor->on_commit(rig.worker->run_stage(stage));
    if (upto && stage == *upto) return true;
  }
  return true;
}

}  // namespace flaudit::testing
