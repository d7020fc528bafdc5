#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "flaudit/errors.hpp"

// The one-round audit game between an untrusted worker and the
// coordinator/monitor coalition. The worker picks how many of the n
// computations of a stage to fake; the monitor tests p of them. With p >= 2
// and a deposit of at least c / (1 - e^-(p-1)), where c is the cost of
// executing the stage honestly, faking any number of computations has lower
// expected utility than honesty.

namespace flaudit {

struct GameParams {
  uint64_t n = 100;       // computations per stage
  uint64_t p = 2;         // computations tested
  uint64_t m = 0;         // computations faked
  double benefit = 10.0;          // B, worker's benefit from staying in
  double coalition_benefit = 5.0; // B'
  double deposit = 0.0;           // d
  double penalty = 50.0;          // coalition's penalty for a missed fake
  double cost = 1.0;              // c = c_c(n), cost of honest execution
  // cost of honestly executing x of the n computations; default linear c*x/n
  std::function<double(uint64_t)> exec_cost;
  // cost of testing x computations; default linear in x
  std::function<double(uint64_t)> test_cost;

  double exec_cost_at(uint64_t x) const;
  double test_cost_at(uint64_t x) const;
};

/// Detection probability used by the theorem: 1 - (1 - p/n)^m.
double detection_prob_paper(uint64_t n, uint64_t p, uint64_t m);

/// Ground truth for sampling p probes without replacement:
/// 1 - C(n-m, p) / C(n, p), and 1 when p > n - m.
double detection_prob_exact(uint64_t n, uint64_t p, uint64_t m);

/// Theorem deposit bound c / (1 - e^-(p-1)); requires p >= 2.
double min_deposit(double cost, uint64_t p);

/// Contract-required deposit in integer micro-units: the larger of twice
/// the maximal stage cost and the theorem bound (which is always below 2c
/// for p >= 2, so this resolves to 2c).
int64_t required_deposit_micros(double stage_cost, uint64_t p);

struct UtilityOutcome {
  double u_uw = 0.0;
  double u_cstlm = 0.0;
  bool detected = false;
};

/// Utilities for one play of the game with the given outcome.
UtilityOutcome utilities(const GameParams& params, bool detected);

struct HonestyCheck {
  bool enforced_paper = false;  // with the theorem's detection model
  bool enforced_exact = false;  // with the hypergeometric model
  uint64_t first_violation_m = 0;  // 0 when none (paper model)
};

/// True iff p >= 2, d >= min_deposit, and for every m in [1, n] the expected
/// cheater utility does not exceed the honest utility.
HonestyCheck honesty_enforced(const GameParams& params);

/// Theorem 1 proof obligations, checked exactly for every m:
///   m <= (1-1/p)n : 1-(1-p/n)^m >  m/n
///   m >  (1-1/p)n : 1-(1-p/n)^m >  1-e^-(p-1)
bool theorem_bounds_check(uint64_t n, uint64_t p);

/// Empirical detection rate of p without-replacement probes against m faked
/// computations; deterministic for a given seed (per-trial derived streams).
double simulate_detection(uint64_t n, uint64_t p, uint64_t m, uint64_t trials,
                          uint64_t seed);

/// The proof's case-wise lower bound on detection, min over the active case.
double detection_lower_bound(uint64_t n, uint64_t p, uint64_t m);

}  // namespace flaudit
