#include "flaudit/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace flaudit {

using nlohmann::json;

namespace {

json layer_to_json(const LayerConfig& l) {
  json j{{"kind", l.kind}, {"eta", l.eta}, {"activation", l.activation}};
  if (l.kind == "conv") {
    j["filters"] = l.filters;
    j["filter_size"] = l.filter_size;
    j["stride"] = l.stride;
    if (l.input_side) j["input_side"] = l.input_side;
  } else {
    j["outputs"] = l.outputs;
  }
  return j;
}

LayerConfig layer_from_json(const json& j) {
  LayerConfig l;
  l.kind = j.at("kind").get<std::string>();
  require(l.kind == "conv" || l.kind == "fc", ErrorCode::config_error,
          "layer kind must be conv or fc");
  l.eta = j.value("eta", 0.01);
  l.activation = j.value("activation", std::string("relu"));
  if (l.kind == "conv") {
    l.filters = j.value("filters", size_t(1));
    l.filter_size = j.at("filter_size").get<size_t>();
    l.stride = j.value("stride", size_t(1));
    l.input_side = j.value("input_side", size_t(0));
  } else {
    l.outputs = j.at("outputs").get<size_t>();
  }
  return l;
}

CheatStrategy cheat_from_json(const json& j) {
  CheatStrategy c;
  std::string mode = j.value("cheat", std::string("none"));
  if (mode == "none") {
    c.mode = CheatStrategy::Mode::none;
  } else if (mode == "fake_outputs") {
    c.mode = CheatStrategy::Mode::fake_outputs;
  } else if (mode == "fake_evidence") {
    c.mode = CheatStrategy::Mode::fake_evidence;
  } else if (mode == "wrong_record") {
    c.mode = CheatStrategy::Mode::wrong_record;
  } else if (mode == "skip_computation") {
    c.mode = CheatStrategy::Mode::skip_computation;
  } else {
    fail(ErrorCode::config_error, "unknown cheat mode: " + mode);
  }
  c.target_stage = j.value("stage", std::string());
  c.m = j.value("m", uint64_t(0));
  c.seed = j.value("cheat_seed", uint64_t(0));
  return c;
}

std::string cheat_mode_name(CheatStrategy::Mode m) {
  switch (m) {
    case CheatStrategy::Mode::none: return "none";
    case CheatStrategy::Mode::fake_outputs: return "fake_outputs";
    case CheatStrategy::Mode::fake_evidence: return "fake_evidence";
    case CheatStrategy::Mode::wrong_record: return "wrong_record";
    case CheatStrategy::Mode::skip_computation: return "skip_computation";
  }
  return "none";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::config_error, std::string("config parse: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.seed = j.value("seed", uint64_t(1));
  cfg.p = j.value("p", size_t(2));
  cfg.rounds = j.value("rounds", uint64_t(1));
  if (j.contains("records")) {
    const auto& r = j.at("records");
    cfg.records.path = r.value("path", std::string());
    cfg.records.n_r = r.value("n_r", size_t(4));
    cfg.records.n_x = r.value("n_x", size_t(16));
    cfg.records.n_y = r.value("n_y", size_t(2));
  }
  if (j.contains("model")) {
    for (const auto& lj : j.at("model").at("layers")) {
      cfg.layers.push_back(layer_from_json(lj));
    }
  }
  if (j.contains("workers")) {
    for (const auto& wj : j.at("workers")) {
      FederationWorker w;
      w.name = wj.value("name", "w" + std::to_string(cfg.workers.size()));
      w.cheat = cheat_from_json(wj);
      cfg.workers.push_back(std::move(w));
    }
  }
  if (j.contains("deposit")) {
    if (j.at("deposit").contains("stage_cost")) {
      cfg.required_deposit = required_deposit_micros(
          j.at("deposit").at("stage_cost").get<double>(), cfg.p);
    } else {
      cfg.required_deposit =
          j.at("deposit").value("required", int64_t(1'000'000));
    }
    cfg.deposit = j.at("deposit").value("amount", int64_t(0));
  }
  if (j.contains("game")) {
    const auto& g = j.at("game");
    if (g.contains("n")) cfg.game.n = g.at("n").get<std::vector<uint64_t>>();
    if (g.contains("p")) cfg.game.p = g.at("p").get<std::vector<uint64_t>>();
    if (g.contains("benefit")) {
      cfg.game.benefit = g.at("benefit").get<std::vector<double>>();
    }
    cfg.game.cost = g.value("cost", 1.0);
    cfg.game.deposit = g.value("deposit", -1.0);
  }
  if (j.contains("detect_grid")) {
    cfg.detect_grid.clear();
    for (const auto& dj : j.at("detect_grid")) {
      DetectGridEntry e;
      e.n = dj.at("n").get<uint64_t>();
      e.p = dj.at("p").get<uint64_t>();
      e.m = dj.at("m").get<std::vector<uint64_t>>();
      e.trials = dj.value("trials", uint64_t(100000));
      cfg.detect_grid.push_back(std::move(e));
    }
  }
  if (j.contains("bench")) {
    cfg.bench_repetitions = j.at("bench").value("repetitions", uint64_t(5));
    if (j.at("bench").contains("tables")) {
      for (const auto& tj : j.at("bench").at("tables")) {
        BenchTableConfig t;
        t.name = tj.at("name").get<std::string>();
        t.kind = tj.at("kind").get<std::string>();
        t.direction = tj.at("direction").get<std::string>();
        t.vary = tj.at("vary").get<std::string>();
        t.values = tj.at("values").get<std::vector<size_t>>();
        t.input_side = tj.value("input_side", size_t(128));
        t.filters = tj.value("filters", size_t(16));
        t.filter_size = tj.value("filter_size", size_t(8));
        t.stride = tj.value("stride", size_t(2));
        t.l_x = tj.value("l_x", size_t(1024));
        t.l_y = tj.value("l_y", size_t(64));
        cfg.bench_tables.push_back(std::move(t));
      }
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::config_error, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string ExperimentConfig::canonical_json() const {
  json layers = json::array();
  for (const auto& l : this->layers) layers.push_back(layer_to_json(l));
  json workers = json::array();
  for (const auto& w : this->workers) {
    workers.push_back({{"name", w.name},
                       {"cheat", cheat_mode_name(w.cheat.mode)},
                       {"stage", w.cheat.target_stage},
                       {"m", w.cheat.m},
                       {"cheat_seed", w.cheat.seed}});
  }
  json detect = json::array();
  for (const auto& e : detect_grid) {
    detect.push_back({{"n", e.n}, {"p", e.p}, {"m", e.m}, {"trials", e.trials}});
  }
  json bench_tables_json = json::array();
  for (const auto& t : bench_tables) {
    bench_tables_json.push_back(
        {{"name", t.name}, {"kind", t.kind}, {"direction", t.direction},
         {"vary", t.vary}, {"values", t.values}, {"input_side", t.input_side},
         {"filters", t.filters}, {"filter_size", t.filter_size},
         {"stride", t.stride}, {"l_x", t.l_x}, {"l_y", t.l_y}});
  }
  return json{
      {"seed", seed},
      {"p", p},
      {"rounds", rounds},
      {"records",
       {{"path", records.path}, {"n_r", records.n_r}, {"n_x", records.n_x},
        {"n_y", records.n_y}}},
      {"model", {{"layers", layers}}},
      {"workers", workers},
      {"deposit", {{"required", required_deposit}, {"amount", deposit}}},
      {"game",
       {{"n", game.n}, {"p", game.p}, {"benefit", game.benefit},
        {"cost", game.cost}, {"deposit", game.deposit}}},
      {"detect_grid", detect},
      {"bench", {{"repetitions", bench_repetitions}, {"tables", bench_tables_json}}}}
      .dump();
}

std::string ExperimentConfig::config_hash() const {
  std::string canon = canonical_json();
  Digest d = sha256(ByteView(reinterpret_cast<const uint8_t*>(canon.data()),
                             canon.size()));
  return d.hex().substr(0, 16);
}

RecordFile make_records(const ExperimentConfig& config) {
  if (!config.records.path.empty()) {
    return load_records_json(config.records.path);
  }
  RecordFile file;
  file.n_x = config.records.n_x;
  file.n_y = config.records.n_y;
  Rng rng = Rng(config.seed).derive(0x5ec0d5);
  for (size_t r = 0; r < config.records.n_r; r++) {
    Record rec;
    rec.x.resize(file.n_x);
    rec.y.resize(file.n_y);
    for (auto& v : rec.x) v = rng.uniform();
    for (auto& v : rec.y) v = rng.uniform();
    file.records.push_back(std::move(rec));
  }
  return file;
}

GlobalModel make_model(const ExperimentConfig& config) {
  require(!config.layers.empty(), ErrorCode::config_error, "model has no layers");
  GlobalModel model;
  Rng rng = Rng(config.seed).derive(0x30de1);
  size_t incoming = config.records.n_x;
  for (const auto& lc : config.layers) {
    Layer layer;
    layer.activation = activation_from_name(lc.activation);
    if (lc.kind == "conv") {
      size_t side = lc.input_side;
      if (side == 0) {
        side = size_t(std::llround(std::sqrt(double(incoming))));
      }
      require(side * side == incoming, ErrorCode::config_error,
              "conv layer input is not square");
      layer.kind = Layer::Kind::conv;
      layer.conv = ConvSpec{lc.filters, lc.filter_size, lc.stride, side, lc.eta};
      conv_output_dim(layer.conv);
      for (size_t t = 0; t < lc.filters; t++) {
        Tensor f = Tensor::zeros({lc.filter_size, lc.filter_size});
        for (auto& v : f.values) v = rng.uniform(-0.5, 0.5);
        layer.filters.push_back(std::move(f));
      }
    } else {
      layer.kind = Layer::Kind::fc;
      require(lc.outputs >= 1, ErrorCode::config_error, "fc outputs");
      layer.fc = FcSpec{incoming, lc.outputs, lc.eta};
      layer.theta = Tensor::zeros({incoming, lc.outputs});
      double scale = 1.0 / std::sqrt(double(incoming));
      for (auto& v : layer.theta.values) v = rng.uniform(-scale, scale);
    }
    incoming = layer.output_size();
    model.layers.push_back(std::move(layer));
  }
  require(incoming == config.records.n_y, ErrorCode::config_error,
          "model output length must equal n_Y (got " + std::to_string(incoming) +
              ", want " + std::to_string(config.records.n_y) + ")");
  model.validate();
  return model;
}

RunRoundsResult run_rounds(const ExperimentConfig& config) {
  require(!config.workers.empty(), ErrorCode::config_error, "no workers");
  FederationConfig fed;
  fed.rounds = config.rounds;
  fed.p = config.p;
  fed.seed = config.seed;
  fed.deposit = config.deposit;
  fed.required_deposit = config.required_deposit;
  fed.workers = config.workers;

  Federation federation(make_model(config), make_records(config), fed);
  RunRoundsResult out;
  std::ostringstream report_lines;
  federation.set_report_sink(
      [&](uint64_t round, const std::string& worker, const TestReport& r) {
        nlohmann::json line = nlohmann::json::parse(r.to_json_line());
        line["round"] = round;
        line["worker"] = worker;
        report_lines << line.dump() << "\n";
      });
  out.rounds = federation.run_all();
  out.reports_jsonl = report_lines.str();

  std::string hash = config.config_hash();
  std::ostringstream lines;
  for (const auto& round : out.rounds) {
    json workers = json::array();
    for (const auto& w : round.workers) {
      workers.push_back({{"worker", w.worker},
                         {"participated", w.participated},
                         {"honest", w.honest},
                         {"endorsed", w.endorsed},
                         {"slashed", w.slashed_this_round},
                         {"first_failure", w.first_failure},
                         {"record_id", w.record_id}});
      if (w.participated && !w.honest) {
        for (const auto& cw : config.workers) {
          if (cw.name == w.worker &&
              cw.cheat.mode == CheatStrategy::Mode::none) {
            out.false_positive = true;
          }
        }
      }
    }
    lines << json{{"round", round.round},
                  {"workers", workers},
                  {"model_version_after", round.model_version_after},
                  {"aggregated", round.aggregated},
                  {"config_hash", hash}}
                 .dump()
          << "\n";
  }
  out.rounds_jsonl = lines.str();

  std::ostringstream ledger_lines;
  for (const auto& ev : federation.ledger().events()) {
    ledger_lines << ev.to_json_line() << "\n";
  }
  out.ledger_jsonl = ledger_lines.str();
  out.ledger_snapshot_json = federation.ledger().snapshot_json();
  return out;
}

DetectSimResult detect_sim(const ExperimentConfig& config) {
  DetectSimResult out;
  std::ostringstream csv;
  csv << "n,p,m,prob_paper,prob_exact,empirical,bound,config_hash\n";
  std::string hash = config.config_hash();
  uint64_t point = 0;
  char buf[64];
  for (const auto& entry : config.detect_grid) {
    for (uint64_t m : entry.m) {
      double paper = detection_prob_paper(entry.n, entry.p, m);
      double exact = detection_prob_exact(entry.n, entry.p, m);
      double empirical = simulate_detection(entry.n, entry.p, m, entry.trials,
                                            derive_seed(config.seed, point++));
      double bound = detection_lower_bound(entry.n, entry.p, m);
      double sigma = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) /
                               double(entry.trials));
      if (std::abs(empirical - exact) > 3.0 * sigma) out.within_3sigma = false;
      csv << entry.n << "," << entry.p << "," << m << ",";
      auto emit = [&](double v, bool last) {
        snprintf(buf, sizeof buf, "%.10g", v);
        csv << buf << (last ? "" : ",");
      };
      emit(paper, false);
      emit(exact, false);
      emit(empirical, false);
      emit(bound, false);
      csv << hash << "\n";
    }
  }
  out.csv = csv.str();
  return out;
}

GameCheckResult game_check(const ExperimentConfig& config) {
  GameCheckResult out;
  json checks = json::array();
  for (uint64_t p : config.game.p) {
    for (uint64_t n : config.game.n) {
      if (p < 2 || n < p) {
        checks.push_back({{"n", n}, {"p", p}, {"check", "theorem_bounds"},
                          {"result", "hypothesis_failed"}});
        continue;
      }
      bool ok = theorem_bounds_check(n, p);
      if (!ok) out.all_passed = false;
      checks.push_back({{"n", n}, {"p", p}, {"check", "theorem_bounds"},
                        {"result", ok ? "pass" : "FAIL"}});
      for (double benefit : config.game.benefit) {
        GameParams params;
        params.n = n;
        params.p = p;
        params.cost = config.game.cost;
        params.benefit = benefit;
        params.deposit = config.game.deposit < 0.0
                             ? min_deposit(config.game.cost, p)
                             : config.game.deposit;
        HonestyCheck hc = honesty_enforced(params);
        if (!hc.enforced_paper) out.all_passed = false;
        checks.push_back({{"n", n}, {"p", p}, {"benefit", benefit},
                          {"deposit", params.deposit},
                          {"check", "honesty_enforced"},
                          {"paper_model", hc.enforced_paper},
                          {"exact_model", hc.enforced_exact},
                          {"first_violation_m", hc.first_violation_m}});
      }
    }
  }
  // p = 1 in the grid is reported as a failed hypothesis, not an error
  out.report_json = json{{"config_hash", config.config_hash()},
                         {"all_passed", out.all_passed},
                         {"checks", checks}}
                        .dump(2);
  return out;
}

// ---- bench ----

namespace {

using Clock = std::chrono::steady_clock;

double median_us(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  size_t n = samples.size();
  return n % 2 == 1 ? samples[n / 2]
                    : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
}

template <typename F>
double time_us(F&& fn) {
  auto start = Clock::now();
  fn();
  auto stop = Clock::now();
  return std::chrono::duration<double, std::micro>(stop - start).count();
}

struct BenchSetup {
  ExperimentConfig cfg;
  StageId fwd_stage{0, StageKind::transform_fwd};
  StageId bwd_stage{0, StageKind::transform_bwd};
};

ExperimentConfig row_config(const BenchTableConfig& table, size_t value,
                            uint64_t seed, size_t p) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.p = p;
  LayerConfig bench_layer;
  if (table.kind == "conv") {
    bench_layer.kind = "conv";
    bench_layer.filters = table.filters;
    bench_layer.filter_size = table.filter_size;
    bench_layer.stride = table.stride;
    bench_layer.input_side = table.input_side;
    if (table.vary == "input_side") bench_layer.input_side = value;
    else if (table.vary == "filters") bench_layer.filters = value;
    else if (table.vary == "filter_size") bench_layer.filter_size = value;
    else if (table.vary == "stride") bench_layer.stride = value;
    else fail(ErrorCode::config_error, "unknown conv vary: " + table.vary);
    bench_layer.activation = "relu";
    cfg.records.n_x = bench_layer.input_side * bench_layer.input_side;
  } else if (table.kind == "fc") {
    bench_layer.kind = "fc";
    size_t l_x = table.l_x, l_y = table.l_y;
    if (table.vary == "l_x") l_x = value;
    else if (table.vary == "l_y") l_y = value;
    else fail(ErrorCode::config_error, "unknown fc vary: " + table.vary);
    bench_layer.outputs = l_y;
    bench_layer.activation = "relu";
    cfg.records.n_x = l_x;
  } else {
    fail(ErrorCode::config_error, "unknown bench kind: " + table.kind);
  }
  // a small head keeps the final-layer recompute out of the timings
  LayerConfig head;
  head.kind = "fc";
  head.outputs = 4;
  head.activation = "identity";
  cfg.layers = {bench_layer, head};
  cfg.records.n_y = 4;
  cfg.records.n_r = 2;
  return cfg;
}

}  // namespace

std::vector<BenchTableConfig> default_bench_tables() {
  std::vector<BenchTableConfig> tables;
  auto conv = [&](const std::string& name, const std::string& dir,
                  const std::string& vary, std::vector<size_t> values) {
    BenchTableConfig t;
    t.name = name;
    t.kind = "conv";
    t.direction = dir;
    t.vary = vary;
    t.values = std::move(values);
    tables.push_back(std::move(t));
  };
  conv("conv_fwd_input_size", "fwd", "input_side", {16, 32, 64, 128, 256});
  conv("conv_fwd_filter_count", "fwd", "filters", {4, 8, 16, 32});
  conv("conv_fwd_stride", "fwd", "stride", {1, 2, 4, 8});
  conv("conv_fwd_filter_size", "fwd", "filter_size", {8, 16, 32, 64});
  conv("conv_bwd_input_size", "bwd", "input_side", {16, 32, 64, 128, 256});
  conv("conv_bwd_filter_count", "bwd", "filters", {4, 8, 16, 32});
  BenchTableConfig fc_in;
  fc_in.name = "fc_fwd_input_size";
  fc_in.kind = "fc";
  fc_in.direction = "fwd";
  fc_in.vary = "l_x";
  fc_in.values = {32, 64, 128, 256, 512, 1024, 2048, 4096};
  fc_in.l_y = 64;
  tables.push_back(fc_in);
  BenchTableConfig fc_out;
  fc_out.name = "fc_fwd_output_size";
  fc_out.kind = "fc";
  fc_out.direction = "fwd";
  fc_out.vary = "l_y";
  fc_out.values = {16, 32, 64, 128, 256, 512, 1024};
  fc_out.l_x = 1024;
  tables.push_back(fc_out);
  return tables;
}

std::vector<BenchTable> bench(const ExperimentConfig& config) {
  std::vector<BenchTableConfig> tables =
      config.bench_tables.empty() ? default_bench_tables() : config.bench_tables;
  uint64_t reps = std::max<uint64_t>(config.bench_repetitions, 5);
  std::string hash = config.config_hash();
  std::vector<BenchTable> out;

  for (const auto& table : tables) {
    BenchTable result;
    result.name = table.name;
    std::ostringstream csv;
    csv << "setting,worker_compute_us,worker_commit_overhead_us,monitor_test_us,"
           "total_us,config_hash\n";

    for (size_t value : table.values) {
      ExperimentConfig cfg = row_config(table, value, config.seed, config.p);
      GlobalModel model = make_model(cfg);
      RecordFile records = make_records(cfg);
      const Layer& layer = model.layers[0];
      bool fwd = table.direction == "fwd";

      // worker-side math and tree construction, timed in isolation
      std::vector<double> compute_samples, commit_samples, monitor_samples;
      Rng data_rng = Rng(cfg.seed).derive(0xbe4c);
      std::vector<double> input(layer.input_size());
      for (auto& v : input) v = data_rng.uniform();

      for (uint64_t rep = 0; rep <= reps; rep++) {  // rep 0 is warmup
        double compute_us = 0.0, commit_us = 0.0;
        if (layer.kind == Layer::Kind::conv) {
          const ConvSpec& spec = layer.conv;
          Tensor x({spec.alpha_x, spec.alpha_x}, input);
          Tensor y;
          compute_us = time_us([&] { y = conv_forward(spec, x, layer.filters); });
          if (fwd) {
            commit_us = time_us([&] {
              group_commit(collect_landmark_leaves(spec, x));
              group_commit(collect_y_row_leaves(y));
            });
          } else {
            Tensor grad_y = y;  // arbitrary finite gradient of matching shape
            ConvBackward bwd_result;
            compute_us = time_us(
                [&] { bwd_result = conv_backward(spec, x, layer.filters, grad_y); });
            commit_us = time_us([&] {
              group_commit(collect_grad_x_leaves(spec, bwd_result.grad_x_per_filter));
              group_commit(collect_grad_f_leaves(spec, bwd_result));
              group_commit(collect_y_row_leaves(grad_y));
              group_commit(collect_x_group_leaves(spec, x));
            });
          }
        } else {
          const FcSpec& spec = layer.fc;
          FcSplit split = fc_layout(spec.l_x);
          Tensor partials;
          if (fwd) {
            compute_us = time_us([&] {
              partials = fc_partials(spec, layer.theta, input, split);
              for (size_t i = 0; i < spec.l_y; i++) fold_row(partials, i);
            });
            commit_us = time_us([&] {
              group_commit(collect_partial_row_leaves(partials));
              group_commit(collect_subvector_leaves(input, split));
              group_commit(collect_theta_group_leaves(layer.theta, split));
            });
          } else {
            FcSplit split_y = fc_layout(spec.l_y);
            std::vector<double> grad_y(spec.l_y);
            for (auto& v : grad_y) v = data_rng.uniform();
            Tensor bwd_partials;
            compute_us = time_us([&] {
              bwd_partials = fc_bwd_partials(spec, layer.theta, grad_y, split_y);
              for (size_t i = 0; i < spec.l_x; i++) fold_row(bwd_partials, i);
            });
            commit_us = time_us([&] {
              group_commit(collect_partial_row_leaves(bwd_partials));
              group_commit(collect_subvector_leaves(grad_y, split_y));
              group_commit(collect_theta_bwd_group_leaves(layer.theta, split_y));
            });
          }
        }
        if (rep > 0) {
          compute_samples.push_back(compute_us);
          commit_samples.push_back(commit_us);
        }
      }

      // monitor battery timing over a real committed round
      {
        HmacSigner cs_key = HmacSigner::from_seed(cfg.seed, "coordinator");
        HmacSigner authority = HmacSigner::from_seed(cfg.seed, "authority");
        Coordinator coordinator(model, cs_key);
        ModelPackage pkg = coordinator.publish();
        auto signed_records = sign_records(records.records, authority);
        RecordStore store = RecordStore::build(std::move(signed_records), authority);
        Worker worker("bench", &store, pkg, CheatStrategy::none());
        Monitor monitor(store.digest_info(), pkg, cs_key, authority,
                        HmacSigner::from_seed(cfg.seed, "monitor:bench"),
                        cfg.p, cfg.seed);
        WorkerChannel channel = [&](const Challenge& c) { return worker.answer(c); };
        uint64_t record_id = monitor.begin_round(0);
        monitor.check_init(worker.begin_round(0, record_id));
        for (const StageId& id : stage_program(model)) {
          monitor.on_commit(worker.run_stage(id));
        }
        StageId target{0, fwd ? StageKind::transform_fwd : StageKind::transform_bwd};
        for (uint64_t rep = 0; rep <= reps; rep++) {
          double us = time_us([&] { monitor.test_stage(target, channel); });
          if (rep > 0) monitor_samples.push_back(us);
        }
      }

      BenchRow row;
      row.setting = table.vary + "=" + std::to_string(value);
      row.worker_compute_us = median_us(compute_samples);
      row.worker_commit_us = median_us(commit_samples);
      row.monitor_test_us = median_us(monitor_samples);
      result.rows.push_back(row);
      char buf[64];
      csv << row.setting << ",";
      auto emit = [&](double v) {
        snprintf(buf, sizeof buf, "%.3f", v);
        csv << buf << ",";
      };
      emit(row.worker_compute_us);
      emit(row.worker_commit_us);
      emit(row.monitor_test_us);
      emit(row.worker_compute_us + row.worker_commit_us + row.monitor_test_us);
      csv << hash << "\n";
    }
    result.csv = csv.str();
    out.push_back(std::move(result));
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream outfh(path, std::ios::binary);
  require(outfh.good(), ErrorCode::config_error, "cannot write " + path);
  outfh << content;
}

}  // namespace flaudit
