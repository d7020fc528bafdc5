// flaudit: batch runner for the selective-testing simulator.
//
// Subcommands:
//   run-rounds  end-to-end federation rounds with optional cheat injection
//   bench       per-layer cost tables (CSV, one file per table)
//   detect-sim  empirical vs analytic detection probabilities (CSV)
//   game-check  deposit-bound and best-response verification
//
// Exit codes: 0 success, 1 config error, 2 verdict/bound violation.

#include <iostream>

#include "CLI11.hpp"
#include "flaudit/harness.hpp"

using namespace flaudit;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = args.config_path.empty()
                             ? ExperimentConfig{}
                             : ExperimentConfig::from_file(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment config");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selective-testing simulator for federated learning workers"};
  app.require_subcommand(1);

  CommonArgs rounds_args, bench_args, detect_args, game_args;
  CLI::App* cmd_rounds =
      app.add_subcommand("run-rounds", "run federation rounds");
  add_common(cmd_rounds, rounds_args);
  CLI::App* cmd_bench = app.add_subcommand("bench", "emit cost tables");
  add_common(cmd_bench, bench_args);
  CLI::App* cmd_detect =
      app.add_subcommand("detect-sim", "detection-rate Monte Carlo");
  add_common(cmd_detect, detect_args);
  CLI::App* cmd_game =
      app.add_subcommand("game-check", "theorem and best-response checks");
  add_common(cmd_game, game_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_rounds->parsed()) {
      ExperimentConfig cfg = load_config(rounds_args);
      if (cfg.workers.empty()) cfg.workers.push_back({"w0", CheatStrategy::none()});
      if (cfg.layers.empty()) {
        std::cerr << "run-rounds needs a model in the config\n";
        return 1;
      }
      RunRoundsResult result = run_rounds(cfg);
      write_file(rounds_args.out_dir + "/rounds.jsonl", result.rounds_jsonl);
      write_file(rounds_args.out_dir + "/reports.jsonl", result.reports_jsonl);
      write_file(rounds_args.out_dir + "/ledger.jsonl", result.ledger_jsonl);
      write_file(rounds_args.out_dir + "/ledger_snapshot.json",
                 result.ledger_snapshot_json + "\n");
      std::cout << "rounds: " << result.rounds.size() << ", outputs in "
                << rounds_args.out_dir << "\n";
      if (result.false_positive) {
        std::cerr << "violation: an honest worker was flagged dishonest\n";
        return 2;
      }
      return 0;
    }
    if (cmd_bench->parsed()) {
      ExperimentConfig cfg = load_config(bench_args);
      auto tables = bench(cfg);
      for (const auto& table : tables) {
        write_file(bench_args.out_dir + "/" + table.name + ".csv", table.csv);
        std::cout << table.name << ": " << table.rows.size() << " rows\n";
      }
      return 0;
    }
    if (cmd_detect->parsed()) {
      ExperimentConfig cfg = load_config(detect_args);
      DetectSimResult result = detect_sim(cfg);
      write_file(detect_args.out_dir + "/detection.csv", result.csv);
      std::cout << result.csv;
      if (!result.within_3sigma) {
        std::cerr << "violation: empirical rate outside 3 sigma of exact\n";
        return 2;
      }
      return 0;
    }
    if (cmd_game->parsed()) {
      ExperimentConfig cfg = load_config(game_args);
      GameCheckResult result = game_check(cfg);
      write_file(game_args.out_dir + "/game_check.json",
                 result.report_json + "\n");
      std::cout << result.report_json << "\n";
      if (!result.all_passed) {
        std::cerr << "violation: a theorem bound or best-response check failed\n";
        return 2;
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::config_error ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
