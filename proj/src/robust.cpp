#include "rrl/robust.hpp"

#include "rrl/errors.hpp"

namespace rrl::robust {

namespace {

void validate(const AdvTrainConfig& cfg) {
  if (cfg.attack.kind != attacks::AttackKind::gradient) {
    throw ContractError("adv_train: attack kind must be gradient");
  }
  if (cfg.retrain_steps < 0) throw ContractError("adv_train: retrain_steps must be >= 0");
  if (cfg.attack_period < 1) throw ContractError("adv_train: attack_period must be >= 1");
}

train::LoopOptions loop_options(const AdvTrainConfig& cfg, const agents::AgentOracle& oracle,
                                RngHandle& attack_rng) {
  train::LoopOptions opt;
  opt.steps = cfg.retrain_steps;
  opt.attack = &cfg.attack;
  opt.attack_period = cfg.attack_period;
  opt.store_true_state = cfg.store_true_state;
  opt.attack_rng = &attack_rng;
  opt.oracle = &oracle;
  return opt;
}

}  // namespace

train::TrainLog adv_train(agents::DdqnAgent& agent, env::EnvInstance& e,
                          const AdvTrainConfig& cfg, RngHandle& rng, RngHandle& attack_rng) {
  validate(cfg);
  agents::DdqnOracle oracle(agent);
  return run_ddqn_loop(agent, e, loop_options(cfg, oracle, attack_rng), rng);
}

train::TrainLog adv_train(agents::DdpgAgent& agent, env::EnvInstance& e,
                          const AdvTrainConfig& cfg, RngHandle& rng, RngHandle& attack_rng) {
  validate(cfg);
  agents::DdpgOracle oracle(agent);
  return run_ddpg_loop(agent, e, loop_options(cfg, oracle, attack_rng), rng);
}

}  // namespace rrl::robust
