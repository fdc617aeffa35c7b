#pragma once

#include "rrl/agents.hpp"
#include "rrl/attacks.hpp"
#include "rrl/env.hpp"
#include "rrl/train.hpp"

namespace rrl::robust {

struct AdvTrainConfig {
  attacks::AttackConfig attack;   // must be the gradient kind
  long retrain_steps = 0;
  long attack_period = 1;         // apply the attack every k-th step
  bool store_true_state = false;  // ablation: buffer stores the true obs
};

// Continues training a pre-trained agent while the acting observation on
// attack steps is replaced by the gradient-attack state; the environment
// itself evolves from the true state, and the step budget is exactly
// retrain_steps. attack_rng is a dedicated stream so that a zero-magnitude
// attack reproduces the vanilla loop bit for bit.
train::TrainLog adv_train(agents::DdqnAgent& agent, env::EnvInstance& e,
                          const AdvTrainConfig& cfg, RngHandle& rng, RngHandle& attack_rng);
train::TrainLog adv_train(agents::DdpgAgent& agent, env::EnvInstance& e,
                          const AdvTrainConfig& cfg, RngHandle& rng, RngHandle& attack_rng);

}  // namespace rrl::robust
