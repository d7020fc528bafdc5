#include <benchmark/benchmark.h>

#include "flaudit/merkle.hpp"
#include "flaudit/rng.hpp"

using namespace flaudit;

namespace {

std::vector<Bytes> make_leaves(size_t n) {
  Rng rng(42);
  std::vector<Bytes> leaves;
  leaves.reserve(n);
  for (size_t i = 0; i < n; i++) leaves.push_back(encode_f64(rng.uniform()));
  return leaves;
}

}  // namespace

static void BM_ConstructCommit(benchmark::State& state) {
  auto leaves = make_leaves(size_t(state.range(0)));
  for (auto _ : state) {
    MerkleTree tree = MerkleTree::from_leaf_bytes(leaves);
    benchmark::DoNotOptimize(tree.root());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConstructCommit)->RangeMultiplier(4)->Range(64, 65536);

static void BM_EvidenceAndVerify(benchmark::State& state) {
  size_t n = size_t(state.range(0));
  auto leaves = make_leaves(n);
  MerkleTree tree = MerkleTree::from_leaf_bytes(leaves);
  Rng rng(7);
  for (auto _ : state) {
    size_t i = rng.below(n);
    Evidence evid = tree.evidence_for(i);
    benchmark::DoNotOptimize(
        verify_element(leaves[i], i, tree.root(), evid, n));
  }
}
BENCHMARK(BM_EvidenceAndVerify)->RangeMultiplier(4)->Range(64, 65536);

static void BM_GroupCommitRows(benchmark::State& state) {
  size_t rows = size_t(state.range(0));
  Rng rng(3);
  std::vector<std::vector<double>> groups(rows, std::vector<double>(64));
  for (auto& g : groups) {
    for (auto& v : g) v = rng.uniform();
  }
  for (auto _ : state) {
    MerkleTree tree = group_commit(groups);
    benchmark::DoNotOptimize(tree.root());
  }
  state.SetItemsProcessed(state.iterations() * rows * 64);
}
BENCHMARK(BM_GroupCommitRows)->RangeMultiplier(4)->Range(16, 4096);

BENCHMARK_MAIN();
