#pragma once

#include <span>
#include <string>
#include <vector>

#include "rrl/agents.hpp"
#include "rrl/rng.hpp"

namespace rrl::attacks {

enum class AttackKind { naive, gradient, sgd, hfsgm };

const char* attack_kind_name(AttackKind k);
AttackKind attack_kind_from_name(const std::string& name);

struct AttackConfig {
  double epsilon = 0.0;  // l2 budget in normalized-state units
  int n_samples = 1;     // candidate count, or iteration count for sgd
  double alpha_b = 1.0;
  double beta_b = 1.0;
  AttackKind kind = AttackKind::naive;
  double sgd_step = 0.01;
};

struct AttackOutcome {
  std::vector<double> s_adv;
  std::vector<double> fooled_action;  // oracle action at s_adv
  double predicted_value = 0.0;       // target value of that action at the true state
  bool improved = false;              // some candidate beat the unattacked value
  bool zero_gradient = false;
};

// Best-of-n random perturbations: per-dimension epsilon*(Beta(a,b)-0.5) noise,
// rescaled into the l2 ball, accepted only when the candidate's induced action
// is worth less at the true state than the unattacked optimum.
AttackOutcome attack_naive(const agents::AgentOracle& oracle, std::span<const double> s,
                           const AttackConfig& cfg, RngHandle& rng);

// Candidates at epsilon*Beta(a,b) distances along the normalized descent
// direction of the adversarial loss (discrete: cross entropy against the
// worst action's point mass; continuous: the target critic value through the
// actor). Selection as in attack_naive.
AttackOutcome attack_gradient(const agents::AgentOracle& oracle, std::span<const double> s,
                              const AttackConfig& cfg, RngHandle& rng);

// Projected gradient descent on the same loss for n_samples iterations; the
// final iterate is returned without best-of selection.
AttackOutcome attack_sgd(const agents::AgentOracle& oracle, std::span<const double> s,
                         const AttackConfig& cfg, RngHandle& rng);

// Baseline that decreases the probability of the *best* action: one signed
// step along the cross entropy gradient of the online policy, rescaled into
// the l2 ball. Discrete-action oracles only; no value-based selection.
AttackOutcome attack_hfsgm(const agents::AgentOracle& oracle, std::span<const double> s,
                           const AttackConfig& cfg, RngHandle& rng);

// Dispatch on cfg.kind.
AttackOutcome run_attack(const agents::AgentOracle& oracle, std::span<const double> s,
                         const AttackConfig& cfg, RngHandle& rng);

}  // namespace rrl::attacks
