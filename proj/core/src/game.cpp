#include "flaudit/game.hpp"

#include <cmath>

#include "flaudit/rng.hpp"

namespace flaudit {

double GameParams::exec_cost_at(uint64_t x) const {
  if (exec_cost) return exec_cost(x);
  if (n == 0) return 0.0;
  return cost * double(x) / double(n);
}

double GameParams::test_cost_at(uint64_t x) const {
  if (test_cost) return test_cost(x);
  if (n == 0) return 0.0;
  return cost * double(x) / double(n);
}

double detection_prob_paper(uint64_t n, uint64_t p, uint64_t m) {
  require(n >= 1 && p <= n && m <= n, ErrorCode::domain_error,
          "detection_prob_paper domain");
  if (m == 0) return 0.0;
  double base = 1.0 - double(p) / double(n);
  return 1.0 - std::pow(base, double(m));
}

double detection_prob_exact(uint64_t n, uint64_t p, uint64_t m) {
  require(n >= 1 && p <= n && m <= n, ErrorCode::domain_error,
          "detection_prob_exact domain");
  if (m == 0 || p == 0) return 0.0;
  if (p > n - m) return 1.0;
  // C(n-m,p)/C(n,p) via log-gamma
  double log_miss = std::lgamma(double(n - m + 1)) -
                    std::lgamma(double(n - m - p + 1)) +
                    std::lgamma(double(n - p + 1)) - std::lgamma(double(n + 1));
  return 1.0 - std::exp(log_miss);
}

double min_deposit(double cost, uint64_t p) {
  require(p >= 2, ErrorCode::domain_error,
          "deposit bound needs more than one test");
  require(cost >= 0.0, ErrorCode::domain_error, "negative cost");
  return cost / (1.0 - std::exp(-double(p - 1)));
}

int64_t required_deposit_micros(double stage_cost, uint64_t p) {
  double required = std::max(2.0 * stage_cost, min_deposit(stage_cost, p));
  return int64_t(std::ceil(required * 1e6));
}

UtilityOutcome utilities(const GameParams& params, bool detected) {
  UtilityOutcome out;
  out.detected = detected;
  double saved = params.exec_cost_at(params.n) - params.exec_cost_at(params.m);
  out.u_uw = detected ? -params.deposit - saved : params.benefit - saved;
  if (params.m == 0) {
    out.u_cstlm = params.coalition_benefit - params.test_cost_at(params.p);
  } else if (detected) {
    out.u_cstlm = -params.test_cost_at(params.p) + params.deposit;
  } else {
    out.u_cstlm = -params.penalty - params.test_cost_at(params.p);
  }
  return out;
}

namespace {

double expected_uw_utility(const GameParams& params, uint64_t m, double q) {
  GameParams play = params;
  play.m = m;
  double u_hit = utilities(play, true).u_uw;
  double u_miss = utilities(play, false).u_uw;
  return q * u_hit + (1.0 - q) * u_miss;
}

}  // namespace

HonestyCheck honesty_enforced(const GameParams& params) {
  HonestyCheck out;
  if (params.p < 2) return out;  // theorem hypothesis fails
  if (params.deposit + 1e-12 < min_deposit(params.cost, params.p)) return out;

  GameParams honest = params;
  honest.m = 0;
  double u_honest = utilities(honest, false).u_uw;

  out.enforced_paper = true;
  out.enforced_exact = true;
  for (uint64_t m = 1; m <= params.n; m++) {
    double e_paper =
        expected_uw_utility(params, m, detection_prob_paper(params.n, params.p, m));
    double e_exact =
        expected_uw_utility(params, m, detection_prob_exact(params.n, params.p, m));
    if (e_paper > u_honest && out.enforced_paper) {
      out.enforced_paper = false;
      out.first_violation_m = m;
    }
    if (e_exact > u_honest) out.enforced_exact = false;
  }
  return out;
}

bool theorem_bounds_check(uint64_t n, uint64_t p) {
  require(p >= 2 && n >= p, ErrorCode::domain_error,
          "theorem_bounds_check needs p >= 2 and n >= p");
  // Case split at floor((1 - 1/p) n) = n - n/p in integers
  uint64_t case_boundary = n - (n + p - 1) / p;  // floor(n (1 - 1/p))
  double tail = 1.0 - std::exp(-double(p - 1));
  for (uint64_t m = 1; m <= n; m++) {
    double q = detection_prob_paper(n, p, m);
    if (m <= case_boundary) {
      if (!(q > double(m) / double(n))) return false;
    } else {
      if (!(q > tail)) return false;
    }
  }
  return true;
}

double detection_lower_bound(uint64_t n, uint64_t p, uint64_t m) {
  if (m == 0) return 0.0;
  uint64_t case_boundary = n - (n + p - 1) / p;
  if (m <= case_boundary) return double(m) / double(n);
  return 1.0 - std::exp(-double(p - 1));
}

double simulate_detection(uint64_t n, uint64_t p, uint64_t m, uint64_t trials,
                          uint64_t seed) {
  require(trials >= 1, ErrorCode::domain_error, "trials must be >= 1");
  require(n >= 1 && p <= n && m <= n, ErrorCode::domain_error,
          "simulate_detection domain");
  if (m == 0 || p == 0) return 0.0;
  Rng base(seed);
  uint64_t hits = 0;
  // fakes occupy indices [0, m) WLOG: probes are uniform
  for (uint64_t trial = 0; trial < trials; trial++) {
    Rng rng = base.derive(trial);
    auto probes = rng.sample_distinct(p, n);
    bool detected = false;
    for (uint64_t idx : probes) detected |= (idx < m);
    hits += detected ? 1 : 0;
  }
  return double(hits) / double(trials);
}

}  // namespace flaudit
