#pragma once

#include <vector>

#include "rrl/agents.hpp"
#include "rrl/attacks.hpp"
#include "rrl/env.hpp"
#include "rrl/rng.hpp"

namespace rrl::train {

struct TrainLog {
  std::vector<double> episode_returns;  // completed episodes only
  long env_steps = 0;
};

// Options for the shared interaction loop. With no attack configured this is
// the vanilla loop; with one, the acting observation on attack steps is the
// adversarial state while the environment evolves from the true state. The
// attack consumes attack_rng only, so a zero-magnitude attack leaves the
// training stream untouched.
struct LoopOptions {
  long steps = 0;
  const attacks::AttackConfig* attack = nullptr;
  long attack_period = 1;
  bool store_true_state = false;  // ablation: buffer stores the true obs instead of s_adv
  RngHandle* attack_rng = nullptr;
  const agents::AgentOracle* oracle = nullptr;  // required when attack is set
};

TrainLog run_ddqn_loop(agents::DdqnAgent& agent, env::EnvInstance& e, const LoopOptions& opt,
                       RngHandle& rng);
TrainLog run_ddpg_loop(agents::DdpgAgent& agent, env::EnvInstance& e, const LoopOptions& opt,
                       RngHandle& rng);
TrainLog run_rbf_loop(agents::RbfAgent& agent, env::EnvInstance& e, const LoopOptions& opt,
                      RngHandle& rng);

// Standard interaction loop for the configured step budget.
TrainLog train_vanilla(agents::DdqnAgent& agent, env::EnvInstance& e, long steps, RngHandle& rng);
TrainLog train_vanilla(agents::DdpgAgent& agent, env::EnvInstance& e, long steps, RngHandle& rng);
TrainLog train_vanilla(agents::RbfAgent& agent, env::EnvInstance& e, long steps, RngHandle& rng);

}  // namespace rrl::train
