// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria cover the commitment layer, the audit protocol, the
// deposit game, and the qualitative cost trends; every tolerance is pinned
// here in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "flaudit/harness.hpp"
#include "flaudit/monitor.hpp"
#include "helpers.hpp"

using namespace flaudit;
using namespace flaudit::testing;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
  std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : " - ", detail.c_str());
  if (!ok) failures++;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

// ---- criterion 1: Merkle round trip and tamper rejection ----

void merkle_suite() {
  auto start = std::chrono::steady_clock::now();
  Rng rng(0xACCE01);
  uint64_t honest_checks = 0, honest_passed = 0;
  uint64_t tamper_checks = 0, tamper_rejected = 0;

  for (size_t n = 1; n <= 1024; n++) {
    std::vector<Bytes> leaves;
    leaves.reserve(n);
    for (size_t i = 0; i < n; i++) leaves.push_back(encode_f64(rng.uniform()));
    MerkleTree tree = MerkleTree::from_leaf_bytes(leaves);
    size_t picks = std::min<size_t>(n, 4);
    for (size_t k = 0; k < picks; k++) {
      size_t i = rng.below(n);
      Evidence evid = tree.evidence_for(i);
      honest_checks++;
      if (verify_element(leaves[i], i, tree.root(), evid, n)) honest_passed++;

      // one bit of the leaf payload
      Bytes tampered = leaves[i];
      size_t bit = rng.below(tampered.size() * 8);
      tampered[bit / 8] ^= uint8_t(1) << (bit % 8);
      tamper_checks++;
      if (!verify_element(tampered, i, tree.root(), evid, n)) tamper_rejected++;

      // one bit of a path sibling
      if (!evid.path.empty()) {
        Evidence bad = evid;
        size_t step = rng.below(bad.path.size());
        size_t b = rng.below(256);
        bad.path[step].sibling.bytes[b / 8] ^= uint8_t(1) << (b % 8);
        tamper_checks++;
        if (!verify_element(leaves[i], i, tree.root(), bad, n)) tamper_rejected++;
      }
      // wrong index
      if (n > 1) {
        size_t other = (i + 1 + rng.below(n - 1)) % n;
        tamper_checks++;
        if (!verify_element(leaves[i], other, tree.root(), evid, n)) {
          tamper_rejected++;
        }
      }
    }
  }
  double elapsed = seconds_since(start);
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "honest %llu/%llu, tamper %llu/%llu rejected, %.1fs",
                (unsigned long long)honest_passed,
                (unsigned long long)honest_checks,
                (unsigned long long)tamper_rejected,
                (unsigned long long)tamper_checks, elapsed);
  report("merkle_suite",
         honest_passed == honest_checks && tamper_rejected == tamper_checks &&
             tamper_checks >= 10000 && elapsed < 10.0,
         detail);
}

// ---- criterion 2: Theorem 1 bounds over the sampled grid ----

void theorem_bounds() {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  std::vector<uint64_t> grid{4,  5,  6,  7,  8,  10, 13, 16,  25,  33,
                             50, 64, 100, 128, 200, 333, 500, 707, 1000};
  for (uint64_t n : grid) {
    for (uint64_t p = 2; p <= 6 && p <= n; p++) {
      ok = ok && theorem_bounds_check(n, p);
    }
  }
  double elapsed = seconds_since(start);
  report("theorem_bounds", ok && elapsed < 5.0,
         "grid n in {4..1000}, p in {2..6}");
}

// ---- criterion 3: deposit remark min_deposit(c,2) < 2c ----

void deposit_remark() {
  Rng rng(0xACCE03);
  bool ok = true;
  for (int k = 0; k < 10000; k++) {
    double c = std::exp(rng.uniform(-6.0, 6.0));  // spans tiny to huge costs
    double d = min_deposit(c, 2);
    ok = ok && d < 2.0 * c && d > c;
  }
  report("deposit_remark", ok, "c/(1-e^-1) < 2c over 10^4 random costs");
}

// ---- criterion 4: best response is honesty at the deposit bound ----

void best_response() {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  for (uint64_t p : {uint64_t(2), uint64_t(3)}) {
    for (double benefit : {0.0, 1.0, 10.0}) {
      for (uint64_t n : {uint64_t(10), uint64_t(100), uint64_t(1000)}) {
        GameParams params;
        params.n = n;
        params.p = p;
        params.cost = 1.0;
        params.benefit = benefit;
        params.deposit = min_deposit(params.cost, p);
        GameParams honest = params;
        honest.m = 0;
        double u0 = utilities(honest, false).u_uw;
        for (uint64_t m = 1; m <= n; m++) {
          double q = detection_prob_paper(n, p, m);
          GameParams play = params;
          play.m = m;
          double expected = q * utilities(play, true).u_uw +
                            (1.0 - q) * utilities(play, false).u_uw;
          ok = ok && expected <= u0;
        }
      }
    }
  }
  double elapsed = seconds_since(start);
  report("best_response", ok && elapsed < 5.0,
         "expected cheater utility <= honest for every m >= 1");
}

// ---- criterion 5: detection Monte Carlo vs hypergeometric ----

void detection_monte_carlo() {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  const uint64_t trials = 100000;
  uint64_t point = 0;
  std::vector<std::tuple<uint64_t, uint64_t, uint64_t>> grid;
  for (uint64_t m : {1, 10, 50, 90}) grid.push_back({100, 2, m});
  grid.push_back({50, 3, 5});
  grid.push_back({200, 5, 20});
  for (auto [n, p, m] : grid) {
    double exact = detection_prob_exact(n, p, m);
    double paper = detection_prob_paper(n, p, m);
    double empirical =
        simulate_detection(n, p, m, trials, derive_seed(0xACCE05, point++));
    double sigma =
        std::sqrt(std::max(exact * (1.0 - exact), 1e-12) / double(trials));
    ok = ok && std::abs(empirical - exact) <= 3.0 * sigma;
    ok = ok && empirical >= paper - 3.0 * sigma;
  }
  double elapsed = seconds_since(start);
  report("detection_monte_carlo", ok && elapsed < 60.0,
         "|empirical - exact| <= 3 sigma and empirical >= paper bound");
}

// ---- criterion 6: gradient checks vs central finite differences ----

void gradient_checks() {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  const double h = 1e-6, tol = 1e-5;
  Rng rng(0xACCE06);

  {  // conv with alpha_x = 16
    ConvSpec spec{3, 8, 2, 16, 1.0};
    size_t ay = conv_output_dim(spec);
    Tensor x = Tensor::zeros({16, 16});
    for (auto& v : x.values) v = rng.uniform(-1.0, 1.0);
    std::vector<Tensor> filters;
    for (size_t t = 0; t < spec.n_f; t++) {
      Tensor f = Tensor::zeros({8, 8});
      for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
      filters.push_back(std::move(f));
    }
    std::vector<double> target(spec.n_f * ay * ay);
    for (auto& v : target) v = rng.uniform(-1.0, 1.0);
    auto objective = [&](const Tensor& x_, const std::vector<Tensor>& f_) {
      return loss_eval(conv_forward(spec, x_, f_).values, target).loss;
    };
    Tensor y = conv_forward(spec, x, filters);
    LossResult loss = loss_eval(y.values, target);
    ConvBackward bwd =
        conv_backward(spec, x, filters, Tensor({spec.n_f, ay, ay}, loss.grad));
    for (size_t k = 0; k < x.values.size(); k += 7) {
      Tensor xp = x, xm = x;
      xp.values[k] += h;
      xm.values[k] -= h;
      double fd = (objective(xp, filters) - objective(xm, filters)) / (2 * h);
      ok = ok && std::abs(bwd.grad_x.values[k] - fd) <=
                     tol * std::max(1.0, std::abs(fd));
    }
    for (size_t t = 0; t < spec.n_f; t++) {
      for (size_t k = 0; k < 64; k += 5) {
        auto fp = filters, fm = filters;
        fp[t].values[k] += h;
        fm[t].values[k] -= h;
        double fd = (objective(x, fp) - objective(x, fm)) / (2 * h);
        ok = ok && std::abs(-bwd.grad_f[t].values[k] - fd) <=
                       tol * std::max(1.0, std::abs(fd));
      }
    }
  }

  {  // fc 64 -> 32
    FcSpec spec{64, 32, 1.0};
    Tensor theta = Tensor::zeros({64, 32});
    for (auto& v : theta.values) v = rng.uniform(-0.5, 0.5);
    std::vector<double> x(64), target(32);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : target) v = rng.uniform(-1.0, 1.0);
    auto objective = [&](const Tensor& th, const std::vector<double>& xv) {
      return loss_eval(fc_forward(spec, th, xv), target).loss;
    };
    LossResult loss = loss_eval(fc_forward(spec, theta, x), target);
    FcBackward bwd = fc_backward(spec, theta, x, loss.grad);
    for (size_t k = 0; k < 64; k += 3) {
      auto xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      double fd = (objective(theta, xp) - objective(theta, xm)) / (2 * h);
      ok = ok &&
           std::abs(bwd.grad_x[k] - fd) <= tol * std::max(1.0, std::abs(fd));
    }
    for (size_t k = 0; k < theta.values.size(); k += 37) {
      Tensor tp = theta, tm = theta;
      tp.values[k] += h;
      tm.values[k] -= h;
      double fd = (objective(tp, x) - objective(tm, x)) / (2 * h);
      ok = ok && std::abs(-bwd.grad_theta.values[k] - fd) <=
                     tol * std::max(1.0, std::abs(fd));
    }
  }

  double elapsed = seconds_since(start);
  report("gradient_checks", ok && elapsed < 30.0,
         "conv (16x16) and fc (64x32) vs central differences, rel err <= 1e-5");
}

// ---- criterion 7: enhanced representations reconstruct base math ----

void oracle_equivalence() {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  Rng rng(0xACCE07);

  {  // expanded filter-gradient fold vs the direct double sum
    ConvSpec spec{3, 4, 2, 12, 0.07};
    size_t ay = conv_output_dim(spec);
    Tensor x = Tensor::zeros({12, 12});
    for (auto& v : x.values) v = rng.uniform(0.25, 1.25);
    std::vector<Tensor> filters;
    for (size_t t = 0; t < spec.n_f; t++) {
      Tensor f = Tensor::zeros({4, 4});
      for (auto& v : f.values) v = rng.uniform(0.25, 1.25);
      filters.push_back(std::move(f));
    }
    Tensor grad_y = Tensor::zeros({spec.n_f, ay, ay});
    for (auto& v : grad_y.values) v = rng.uniform(0.25, 1.25);
    ConvBackward bwd = conv_backward(spec, x, filters, grad_y);
    for (size_t t = 0; t < spec.n_f && ok; t++) {
      for (size_t i = 0; i < spec.alpha_f && ok; i++) {
        for (size_t j = 0; j < spec.alpha_f && ok; j++) {
          double direct = 0.0;
          for (size_t u = 0; u < ay; u++) {
            for (size_t v = 0; v < ay; v++) {
              direct += grad_y.values[(t * ay + u) * ay + v] *
                        x.at2(u * spec.stride + i, v * spec.stride + j);
            }
          }
          double folded = 0.0;
          for (double e : bwd.expanded_vector(spec, t, i, j)) folded += e;
          ok = ok && std::abs(-spec.eta * folded - (-spec.eta * direct)) <=
                         1e-12 * std::abs(spec.eta * direct);
          ok = ok && bwd.grad_f[t].at2(i, j) == -spec.eta * folded;
        }
      }
    }

    // per-filter input gradients sum to the total, exactly
    for (size_t k = 0; k < bwd.grad_x.values.size() && ok; k++) {
      double total = 0.0;
      for (size_t t = 0; t < spec.n_f; t++) {
        total += bwd.grad_x_per_filter[t].values[k];
      }
      ok = ok && total == bwd.grad_x.values[k];
    }
  }

  {  // hierarchical fc partial sums vs theta^T x
    for (size_t l_x : {16, 36, 64, 100}) {
      FcSpec spec{l_x, 8, 0.01};
      Tensor theta = Tensor::zeros({l_x, 8});
      for (auto& v : theta.values) v = rng.uniform(0.25, 1.25);
      std::vector<double> x(l_x);
      for (auto& v : x) v = rng.uniform(0.25, 1.25);
      FcSplit split = fc_layout(l_x);
      Tensor partials = fc_partials(spec, theta, x, split);
      auto direct = fc_forward(spec, theta, x);
      for (size_t i = 0; i < 8; i++) {
        double folded = fold_row(partials, i);
        ok = ok && std::abs(folded - direct[i]) <= 1e-12 * std::abs(direct[i]);
      }
    }
  }

  double elapsed = seconds_since(start);
  report("oracle_equivalence", ok && elapsed < 10.0,
         "expanded dF fold, per-filter dX sum, and Y' row sums, tol 1e-12");
}

// ---- criterion 8: protocol soundness and completeness ----

void protocol_soundness() {
  auto start = std::chrono::steady_clock::now();
  bool ok = true;
  Rng rng(0xACCE08);

  // completeness: randomized honest rounds never get flagged
  uint64_t honest_rounds = 0;
  const uint64_t target_rounds = 10000;
  while (honest_rounds < target_rounds && ok) {
    size_t alpha_x = 4 + rng.below(5);
    size_t alpha_f = 1 + rng.below(std::min<uint64_t>(3, alpha_x - 1));
    size_t stride = 1 + rng.below(2);
    size_t n_f = 1 + rng.below(2);
    size_t l_y = 2 + rng.below(4);
    GlobalModel model =
        conv_fc_model(derive_seed(1, honest_rounds), alpha_x, alpha_f, stride,
                      n_f, l_y);
    Rig rig = make_rig(std::move(model), 1 + rng.below(4),
                       CheatStrategy::none(), derive_seed(2, honest_rounds));
    // several rounds per rig amortize the setup cost
    for (int r = 0; r < 25 && honest_rounds < target_rounds; r++) {
      RoundResult result = run_round(*rig.worker, *rig.monitor, r);
      ok = ok && result.honest && result.endorsed;
      honest_rounds++;
    }
  }

  // soundness: a probe landing on a faked index always yields dishonest
  uint64_t tamper_trials = 0, tamper_detected = 0;
  GlobalModel model = conv_fc_model(0xACCE, 8, 3, 2, 2, 4);
  size_t n_y = 4;
  std::vector<StageId> targets = {
      {0, StageKind::transform_fwd}, {0, StageKind::act_fwd},
      {1, StageKind::transform_fwd}, {1, StageKind::act_fwd},
      {1, StageKind::act_bwd},       {1, StageKind::transform_bwd},
      {0, StageKind::act_bwd},       {0, StageKind::transform_bwd},
  };
  uint64_t trial_seed = 0;
  while (tamper_trials < 10000) {
    const StageId& target = targets[tamper_trials % targets.size()];
    CheatStrategy cheat;
    cheat.mode = CheatStrategy::Mode::fake_outputs;
    cheat.target_stage = stage_name(model, target);
    cheat.m = 1 + (trial_seed % 3);
    cheat.seed = derive_seed(3, trial_seed);
    Rig rig = make_rig(model, 2, cheat, derive_seed(4, trial_seed));
    trial_seed++;
    if (!drive_to(rig, 0)) continue;
    auto faked = rig.worker->faked_slots(cheat.target_stage);
    auto channel = rig.channel();
    for (uint64_t slot : faked) {
      ProbeTarget probe = stage_slot_target(model, target, slot, n_y);
      TestReport r = rig.monitor->run_battery(
          target, probe.battery, channel,
          std::vector<std::vector<uint64_t>>{probe.tuple});
      tamper_trials++;
      if (!r.honest) tamper_detected++;
      if (tamper_trials >= 10000) break;
    }
  }

  // end-to-end: an m = n cheater is slashed in round 1 with certainty
  bool slash_ok = true;
  for (int rep = 0; rep < 20; rep++) {
    FederationConfig config;
    config.rounds = 1;
    config.p = 2;
    config.seed = derive_seed(5, rep);
    config.required_deposit = 100;
    CheatStrategy all;
    all.mode = CheatStrategy::Mode::fake_outputs;
    all.target_stage = "L0.act_fwd";
    all.m = 1u << 20;  // clamped to the whole stage
    config.workers = {{"cheater", all}};
    RecordFile records;
    records.n_x = 9;
    records.n_y = 2;
    Record rec;
    rec.x.assign(9, 0.5);
    rec.y.assign(2, 0.25);
    records.records = {rec};
    Federation federation(fc_model(derive_seed(6, rep), 9, 2), records, config);
    auto reports = federation.run_all();
    slash_ok = slash_ok && reports.size() == 1 &&
               reports[0].workers[0].slashed_this_round;
  }

  double elapsed = seconds_since(start);
  char detail[200];
  std::snprintf(detail, sizeof detail,
                "%llu honest rounds clean, %llu/%llu forced probes detected, "
                "m=n slashed round 1, %.1fs",
                (unsigned long long)honest_rounds,
                (unsigned long long)tamper_detected,
                (unsigned long long)tamper_trials, elapsed);
  report("protocol_soundness",
         ok && tamper_detected == tamper_trials && slash_ok && elapsed < 120.0,
         detail);
}

// ---- criterion 9: efficiency trend on the conv grid ----

void efficiency_trend() {
  ExperimentConfig cfg;
  cfg.seed = 0xACCE09;
  cfg.bench_repetitions = 7;
  BenchTableConfig fwd;
  fwd.name = "trend_fwd";
  fwd.kind = "conv";
  fwd.direction = "fwd";
  fwd.vary = "input_side";
  fwd.values = {16, 32, 64, 128};
  BenchTableConfig bwd = fwd;
  bwd.name = "trend_bwd";
  bwd.direction = "bwd";
  cfg.bench_tables = {fwd, bwd};
  auto tables = bench(cfg);

  bool ok = true;
  char detail[240];
  std::string msg;
  for (const auto& table : tables) {
    const BenchRow& lo = table.rows.front();
    const BenchRow& hi = table.rows.back();
    double compute_growth = hi.worker_compute_us / lo.worker_compute_us;
    double worker_growth = (hi.worker_compute_us + hi.worker_commit_us) /
                           (lo.worker_compute_us + lo.worker_commit_us);
    double monitor_growth = hi.monitor_test_us / lo.monitor_test_us;
    ok = ok && compute_growth >= 30.0 && worker_growth >= 30.0 &&
         monitor_growth < 4.0;
    std::snprintf(detail, sizeof detail,
                  "%s compute x%.0f worker x%.1f monitor x%.2f; ",
                  table.name.c_str(), compute_growth, worker_growth,
                  monitor_growth);
    msg += detail;
  }
  report("efficiency_trend", ok, msg);
}

// ---- criterion 10: monitor access budget by instrumented counters ----

void access_budget() {
  GlobalModel model = conv_fc_model(0xACCE10, 32, 8, 2, 4, 4);
  Rig rig = make_rig(std::move(model), 2, CheatStrategy::none(), 0xACCE10);
  if (!drive_to(rig, 0)) {
    report("access_budget", false, "setup failed");
    return;
  }
  const ConvSpec& cs = rig.pkg.model.layers[0].conv;
  size_t ay = conv_output_dim(cs);
  size_t side = landmark_side(cs);
  size_t rows_bound = (cs.alpha_f + cs.stride - 1) / cs.stride;
  size_t log_leaves = 1;
  for (size_t w = cs.alpha_x * cs.alpha_x; w > 1; w = (w + 1) / 2) log_leaves++;

  auto channel = rig.channel();
  bool ok = true;
  uint64_t max_scalars = 0, max_digests = 0;
  Rng rng(0xACCE10);
  StageId bwd{0, StageKind::transform_bwd};
  StageId fwd{0, StageKind::transform_fwd};
  for (int k = 0; k < 200; k++) {
    // conv-backward probes: dF then dX
    std::vector<uint64_t> df_tuple{rng.below(cs.n_f), rng.below(cs.alpha_f),
                                   rng.below(cs.alpha_f), rng.below(ay)};
    TestReport df = rig.monitor->run_battery(
        bwd, ProbeTarget::Battery::conv_df, channel,
        std::vector<std::vector<uint64_t>>{df_tuple});
    ok = ok && df.honest && df.reads_scalars == 3 * ay;

    std::vector<uint64_t> dx_tuple{rng.below(cs.n_f), rng.below(cs.alpha_x),
                                   rng.below(cs.alpha_x)};
    TestReport dx = rig.monitor->run_battery(
        bwd, ProbeTarget::Battery::conv_dx, channel,
        std::vector<std::vector<uint64_t>>{dx_tuple});
    ok = ok && dx.honest && dx.reads_scalars <= cs.n_f + rows_bound * ay;

    std::vector<uint64_t> fwd_tuple{rng.below(cs.n_f), rng.below(ay),
                                    rng.below(ay)};
    TestReport cf = rig.monitor->run_battery(
        fwd, ProbeTarget::Battery::conv_fwd, channel,
        std::vector<std::vector<uint64_t>>{fwd_tuple});
    ok = ok && cf.honest && cf.reads_scalars <= 4 * side * side + ay;

    uint64_t probe_scalars =
        df.reads_scalars + dx.reads_scalars + cf.reads_scalars;
    uint64_t probe_digests =
        df.reads_digests + dx.reads_digests + cf.reads_digests;
    max_scalars = std::max(max_scalars, probe_scalars);
    max_digests = std::max(max_digests, probe_digests);
    // combined budget for the probe set: the 4 landmark blocks, the
    // expanded/row/group vectors (3 ay), up to ceil(af/stride) grad_y rows,
    // one output row, the n_f tuple, and O(log leaves) digests
    uint64_t budget = 4 * side * side + (4 + rows_bound) * ay + cs.n_f;
    ok = ok && probe_scalars <= budget;
    ok = ok && probe_digests <= 13 * log_leaves;
  }

  char detail[160];
  std::snprintf(detail, sizeof detail,
                "max %llu scalars, %llu digests per probe set (ay=%zu)",
                (unsigned long long)max_scalars,
                (unsigned long long)max_digests, ay);
  report("access_budget", ok, detail);
}

}  // namespace

int main() {
  merkle_suite();
  theorem_bounds();
  deposit_remark();
  best_response();
  detection_monte_carlo();
  gradient_checks();
  oracle_equivalence();
  protocol_soundness();
  efficiency_trend();
  access_budget();
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
