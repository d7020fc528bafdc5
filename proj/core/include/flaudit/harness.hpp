#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flaudit/game.hpp"
#include "flaudit/session.hpp"

// Batch experiment runner behind the CLI. Everything is driven by a JSON
// config plus a seed; identical (config, seed) produce byte-identical
// reports, timing columns aside. Every CSV row carries the config hash.

namespace flaudit {

struct LayerConfig {
  std::string kind;  // "conv" | "fc"
  size_t filters = 1;
  size_t filter_size = 1;
  size_t stride = 1;
  size_t input_side = 0;  // conv; 0 = derive from incoming size
  size_t outputs = 0;     // fc
  double eta = 0.01;
  std::string activation = "relu";
};

struct RecordsConfig {
  std::string path;  // when set, load from file
  size_t n_r = 4;
  size_t n_x = 16;
  size_t n_y = 2;
};

struct GameGridConfig {
  std::vector<uint64_t> n = {10, 100, 1000};
  std::vector<uint64_t> p = {2, 3, 4, 5, 6};
  std::vector<double> benefit = {0.0, 1.0, 10.0};
  double cost = 1.0;
  double deposit = -1.0;  // negative: use min_deposit(cost, p)
};

struct DetectGridEntry {
  uint64_t n = 100;
  uint64_t p = 2;
  std::vector<uint64_t> m = {1, 10, 50, 90};
  uint64_t trials = 100000;
};

struct BenchTableConfig {
  std::string name;
  std::string kind;       // "conv" | "fc"
  std::string direction;  // "fwd" | "bwd"
  std::string vary;       // conv: input_side|filters|filter_size|stride; fc: l_x|l_y
  std::vector<size_t> values;
  size_t input_side = 128;
  size_t filters = 16;
  size_t filter_size = 8;
  size_t stride = 2;
  size_t l_x = 1024;
  size_t l_y = 64;
};

struct ExperimentConfig {
  uint64_t seed = 1;
  size_t p = 2;
  uint64_t rounds = 1;
  RecordsConfig records;
  std::vector<LayerConfig> layers;
  std::vector<FederationWorker> workers;
  int64_t required_deposit = 1'000'000;
  int64_t deposit = 0;
  GameGridConfig game;
  std::vector<DetectGridEntry> detect_grid;
  std::vector<BenchTableConfig> bench_tables;  // empty: defaults
  uint64_t bench_repetitions = 5;

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string canonical_json() const;
  std::string config_hash() const;  // first 16 hex chars of sha256
};

/// Deterministic synthetic inputs derived from the config seed.
RecordFile make_records(const ExperimentConfig& config);
GlobalModel make_model(const ExperimentConfig& config);
std::vector<BenchTableConfig> default_bench_tables();

struct RunRoundsResult {
  std::vector<FederationRoundReport> rounds;
  std::string rounds_jsonl;
  std::string reports_jsonl;  // per-stage TestReport lines
  std::string ledger_jsonl;
  std::string ledger_snapshot_json;
  bool false_positive = false;  // an honest worker was flagged
};

RunRoundsResult run_rounds(const ExperimentConfig& config);

struct DetectSimResult {
  std::string csv;
  bool within_3sigma = true;
};

DetectSimResult detect_sim(const ExperimentConfig& config);

struct GameCheckResult {
  std::string report_json;
  bool all_passed = true;
};

GameCheckResult game_check(const ExperimentConfig& config);

struct BenchRow {
  std::string setting;
  double worker_compute_us = 0.0;
  double worker_commit_us = 0.0;
  double monitor_test_us = 0.0;
};

struct BenchTable {
  std::string name;
  std::vector<BenchRow> rows;
  std::string csv;
};

std::vector<BenchTable> bench(const ExperimentConfig& config);

/// Writes the outputs of a subcommand under `out_dir` (created on demand).
void write_file(const std::string& path, const std::string& content);

}  // namespace flaudit
