#include "rrl/train.hpp"

#include <cmath>

#include "rrl/errors.hpp"

namespace rrl::train {

namespace {

// Adapters giving the three agent kinds one loop. Warm-up actions are drawn
// uniformly and held for warmup_hold steps; persistent random actions reach
// goal states that per-step dithering cannot.
struct DdqnAdapter {
  agents::DdqnAgent& agent;
  agents::ReplayBuffer buffer;

  explicit DdqnAdapter(agents::DdqnAgent& a) : agent(a), buffer(a.config().buffer_capacity) {}

  using ActionT = int;
  long warmup_steps() const { return agent.config().warmup_steps; }
  int warmup_hold() const { return agent.config().warmup_hold; }
  ActionT random_action(const env::EnvInstance& e, RngHandle& rng) const {
    return rng.uniform_int(e.num_actions());
  }
  ActionT act(std::span<const double> obs, RngHandle& rng) const {
    return agent.act(obs, rng, true);
  }
  static std::vector<double> box(ActionT a) { return {static_cast<double>(a)}; }
  void observe(agents::Transition t) { buffer.push(std::move(t)); }
  bool can_learn() const {
    return buffer.size() >= static_cast<std::size_t>(agent.config().batch_size);
  }
  void learn(RngHandle& rng) { agent.learn_step(buffer, rng); }
};

struct DdpgAdapter {
  agents::DdpgAgent& agent;
  agents::ReplayBuffer buffer;

  explicit DdpgAdapter(agents::DdpgAgent& a) : agent(a), buffer(a.config().buffer_capacity) {}

  using ActionT = double;
  long warmup_steps() const { return agent.config().warmup_steps; }
  int warmup_hold() const { return agent.config().warmup_hold; }
  ActionT random_action(const env::EnvInstance& e, RngHandle& rng) const {
    return rng.uniform(-e.action_bound(), e.action_bound());
  }
  ActionT act(std::span<const double> obs, RngHandle& rng) const {
    return agent.act(obs, rng, true)[0];
  }
  static std::vector<double> box(ActionT a) { return {a}; }
  void observe(agents::Transition t) { buffer.push(std::move(t)); }
  bool can_learn() const {
    return buffer.size() >= static_cast<std::size_t>(agent.config().batch_size);
  }
  void learn(RngHandle& rng) { agent.learn_step(buffer, rng); }
};

// Plain TD without replay: learns from the current transition every step.
struct RbfAdapter {
  agents::RbfAgent& agent;
  agents::Transition last;
  bool has_last = false;

  explicit RbfAdapter(agents::RbfAgent& a) : agent(a) {}

  using ActionT = int;
  long warmup_steps() const { return 0; }
  int warmup_hold() const { return 1; }
  ActionT random_action(const env::EnvInstance& e, RngHandle& rng) const {
    return rng.uniform_int(e.num_actions());
  }
  ActionT act(std::span<const double> obs, RngHandle& rng) const {
    return agent.act(obs, rng, true);
  }
  static std::vector<double> box(ActionT a) { return {static_cast<double>(a)}; }
  void observe(agents::Transition t) {
    last = std::move(t);
    has_last = true;
  }
  bool can_learn() const { return has_last; }
  void learn(RngHandle&) { agent.td_update(last); }
};

template <typename Adapter>
TrainLog run_loop(Adapter& ad, env::EnvInstance& e, const LoopOptions& opt, RngHandle& rng) {
  if (opt.steps < 0) throw ContractError("training loop: negative step budget");
  if (opt.attack && (!opt.oracle || !opt.attack_rng)) {
    throw ContractError("training loop: attack requires an oracle and an attack rng");
  }
  if (opt.attack_period < 1) throw ContractError("training loop: attack_period must be >= 1");

  TrainLog log;
  if (opt.steps == 0) return log;

  std::vector<double> obs = e.reset(rng);
  double episode_return = 0.0;
  typename Adapter::ActionT held_action{};
  int hold_left = 0;

  for (long step = 0; step < opt.steps; ++step) {
    std::vector<double> acting_obs = obs;
    if (opt.attack && step % opt.attack_period == 0) {
      acting_obs = attacks::run_attack(*opt.oracle, obs, *opt.attack, *opt.attack_rng).s_adv;
    }

    typename Adapter::ActionT action;
    if (step < ad.warmup_steps()) {
      if (hold_left == 0) {
        held_action = ad.random_action(e, rng);
        hold_left = ad.warmup_hold();
      }
      action = held_action;
      --hold_left;
    } else {
      action = ad.act(acting_obs, rng);
    }

    const env::StepOutcome out = e.step(action);
    if (!std::isfinite(out.reward)) throw NumericError("training loop: non-finite reward");
    episode_return += out.reward;

    agents::Transition t;
    t.s = opt.store_true_state ? obs : acting_obs;
    t.a = Adapter::box(action);
    t.r = out.reward;
    t.s_next = out.obs;
    t.done = out.done;  // truncation still bootstraps
    ad.observe(std::move(t));

    if (step >= ad.warmup_steps() && ad.can_learn()) ad.learn(rng);

    ad.agent.schedule_step += 1;

    if (out.done || out.truncated) {
      log.episode_returns.push_back(episode_return);
      episode_return = 0.0;
      obs = e.reset(rng);
      hold_left = 0;
    } else {
      obs = out.obs;
    }
  }
  log.env_steps = opt.steps;
  return log;
}

}  // namespace

TrainLog run_ddqn_loop(agents::DdqnAgent& agent, env::EnvInstance& e, const LoopOptions& opt,
                       RngHandle& rng) {
  DdqnAdapter ad(agent);
  return run_loop(ad, e, opt, rng);
}

TrainLog run_ddpg_loop(agents::DdpgAgent& agent, env::EnvInstance& e, const LoopOptions& opt,
                       RngHandle& rng) {
  DdpgAdapter ad(agent);
  return run_loop(ad, e, opt, rng);
}

TrainLog run_rbf_loop(agents::RbfAgent& agent, env::EnvInstance& e, const LoopOptions& opt,
                      RngHandle& rng) {
  RbfAdapter ad(agent);
  return run_loop(ad, e, opt, rng);
}

TrainLog train_vanilla(agents::DdqnAgent& agent, env::EnvInstance& e, long steps, RngHandle& rng) {
  LoopOptions opt;
  opt.steps = steps;
  return run_ddqn_loop(agent, e, opt, rng);
}

TrainLog train_vanilla(agents::DdpgAgent& agent, env::EnvInstance& e, long steps, RngHandle& rng) {
  LoopOptions opt;
  opt.steps = steps;
  return run_ddpg_loop(agent, e, opt, rng);
}

TrainLog train_vanilla(agents::RbfAgent& agent, env::EnvInstance& e, long steps, RngHandle& rng) {
  LoopOptions opt;
  opt.steps = steps;
  return run_rbf_loop(agent, e, opt, rng);
}

}  // namespace rrl::train
