#include <benchmark/benchmark.h>

#include "flaudit/session.hpp"

using namespace flaudit;

namespace {

GlobalModel bench_model(size_t alpha_x) {
  Rng rng(alpha_x);
  GlobalModel model;
  Layer conv;
  conv.kind = Layer::Kind::conv;
  conv.conv = ConvSpec{4, 8, 2, alpha_x, 0.01};
  for (size_t t = 0; t < 4; t++) {
    Tensor f = Tensor::zeros({8, 8});
    for (auto& v : f.values) v = rng.uniform(-0.5, 0.5);
    conv.filters.push_back(std::move(f));
  }
  conv.activation = ActivationKind::relu;
  model.layers.push_back(std::move(conv));
  Layer fc;
  fc.kind = Layer::Kind::fc;
  size_t l_x = model.layers[0].output_size();
  fc.fc = FcSpec{l_x, 4, 0.01};
  fc.theta = Tensor::zeros({l_x, 4});
  for (auto& v : fc.theta.values) v = rng.uniform(-0.1, 0.1);
  fc.activation = ActivationKind::sigmoid;
  model.layers.push_back(std::move(fc));
  return model;
}

struct ProtocolFixture {
  HmacSigner cs_key;
  HmacSigner authority;
  Coordinator coordinator;
  ModelPackage pkg;
  RecordStore store;
  Worker worker;
  Monitor monitor;

  static RecordStore make_store(size_t n_x, size_t n_y,
                                const HmacSigner& authority) {
    Rng rng(5);
    std::vector<Record> records(4);
    for (auto& r : records) {
      r.x.resize(n_x);
      r.y.resize(n_y);
      for (auto& v : r.x) v = rng.uniform();
      for (auto& v : r.y) v = rng.uniform();
    }
    return RecordStore::build(sign_records(std::move(records), authority),
                              authority);
  }

  explicit ProtocolFixture(size_t alpha_x)
      : cs_key(HmacSigner::from_seed(1, "coordinator")),
        authority(HmacSigner::from_seed(1, "authority")),
        coordinator(bench_model(alpha_x), cs_key),
        pkg(coordinator.publish()),
        store(make_store(alpha_x * alpha_x, 4, authority)),
        worker("w", &store, pkg, CheatStrategy::none()),
        monitor(store.digest_info(), pkg, cs_key, authority,
                HmacSigner::from_seed(1, "monitor:w"), 2, 9) {}
};

}  // namespace

static void BM_FullAuditedRound(benchmark::State& state) {
  ProtocolFixture fx(size_t(state.range(0)));
  uint64_t round = 0;
  for (auto _ : state) {
    RoundResult result = run_round(fx.worker, fx.monitor, round++);
    benchmark::DoNotOptimize(result.endorsed);
  }
}
BENCHMARK(BM_FullAuditedRound)->Arg(16)->Arg(32)->Arg(64);

static void BM_MonitorConvBatteries(benchmark::State& state) {
  ProtocolFixture fx(size_t(state.range(0)));
  uint64_t id = fx.monitor.begin_round(0);
  fx.monitor.check_init(fx.worker.begin_round(0, id));
  for (const StageId& stage : stage_program(fx.pkg.model)) {
    fx.monitor.on_commit(fx.worker.run_stage(stage));
  }
  WorkerChannel channel = [&](const Challenge& c) { return fx.worker.answer(c); };
  for (auto _ : state) {
    fx.monitor.test_stage(StageId{0, StageKind::transform_fwd}, channel);
    fx.monitor.test_stage(StageId{0, StageKind::transform_bwd}, channel);
  }
}
BENCHMARK(BM_MonitorConvBatteries)->Arg(16)->Arg(32)->Arg(64)->Arg(128);
