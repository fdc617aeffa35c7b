#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "rrl/errors.hpp"
#include "rrl/robust.hpp"

using namespace rrl;

namespace {

agents::DdqnAgent pretrained_cartpole(std::uint64_t seed, long steps = 3000) {
  agents::DdqnConfig cfg;
  cfg.hidden = {8, 8};
  cfg.warmup_steps = 500;
  cfg.eps.anneal_steps = 300;
  RngHandle rng(seed);
  agents::DdqnAgent agent(4, 2, cfg, rng);
  env::EnvInstance e(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle trng(seed + 1);
  train::train_vanilla(agent, e, steps, trng);
  return agent;
}

bool nets_identical(const nn::DenseNet& a, const nn::DenseNet& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weights != b.layers[i].weights) return false;
    if (a.layers[i].bias != b.layers[i].bias) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("adv_train: zero retrain steps returns the agent unchanged") {
  auto agent = pretrained_cartpole(31);
  auto before = agent.online();
  robust::AdvTrainConfig cfg;
  cfg.attack.kind = attacks::AttackKind::gradient;
  cfg.attack.epsilon = 0.03;
  cfg.attack.n_samples = 10;
  cfg.retrain_steps = 0;
  env::EnvInstance e(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle rng(1), arng(2);
  auto log = robust::adv_train(agent, e, cfg, rng, arng);
  CHECK(log.env_steps == 0);
  CHECK(log.episode_returns.empty());
  CHECK(nets_identical(agent.online(), before));
}

TEST_CASE("adv_train: non-gradient attack kinds are rejected") {
  auto agent = pretrained_cartpole(32);
  robust::AdvTrainConfig cfg;
  cfg.attack.kind = attacks::AttackKind::naive;
  cfg.retrain_steps = 10;
  env::EnvInstance e(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle rng(1), arng(2);
  CHECK_THROWS_AS(robust::adv_train(agent, e, cfg, rng, arng), ContractError);
}

TEST_CASE("adv_train: epsilon zero is bit-identical to the vanilla loop") {
  auto base = pretrained_cartpole(33);

  agents::DdqnAgent vanilla = base;
  env::EnvInstance e1(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle r1(71);
  auto vlog = train::train_vanilla(vanilla, e1, 2500, r1);

  agents::DdqnAgent adv = base;
  robust::AdvTrainConfig cfg;
  cfg.attack.kind = attacks::AttackKind::gradient;
  cfg.attack.epsilon = 0.0;
  cfg.attack.n_samples = 200;
  cfg.retrain_steps = 2500;
  env::EnvInstance e2(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle r2(71), arng(999);
  auto alog = robust::adv_train(adv, e2, cfg, r2, arng);

  CHECK(vlog.episode_returns == alog.episode_returns);
  CHECK(nets_identical(vanilla.online(), adv.online()));
  CHECK(nets_identical(vanilla.target(), adv.target()));
}

TEST_CASE("adv_train: runs exactly retrain_steps environment steps") {
  auto agent = pretrained_cartpole(34);
  robust::AdvTrainConfig cfg;
  cfg.attack.kind = attacks::AttackKind::gradient;
  cfg.attack.epsilon = 0.02;
  cfg.attack.n_samples = 5;
  cfg.retrain_steps = 1234;
  env::EnvInstance e(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle rng(3), arng(4);
  auto log = robust::adv_train(agent, e, cfg, rng, arng);
  CHECK(log.env_steps == 1234);
}

TEST_CASE("adv_train: on attack steps the executed action comes from the fooled state") {
  // with exploration disabled, replaying the attack against the stored buffer
  // state must reproduce the stored action
  agents::DdqnConfig acfg;
  acfg.hidden = {8, 8};
  acfg.warmup_steps = 0;
  acfg.eps.start = acfg.eps.end = 0.0;  // pure greedy behavior
  acfg.batch_size = 8;
  // single-layer Q whose decision boundary sits at normalized pole angle 0.5,
  // right where cartpole trajectories live
  nn::DenseNet qnet;
  {
    nn::DenseLayer l;
    l.in_dim = 4;
    l.out_dim = 2;
    l.act = nn::Activation::identity;
    l.weights = {0, 0, 2, 0, 0, 0, -2, 0};
    l.bias = {-1.0, 1.0};
    qnet.layers.push_back(l);
  }
  agents::DdqnAgent agent(qnet, qnet, acfg);

  // run a short adversarial loop manually via the public pieces
  robust::AdvTrainConfig cfg;
  cfg.attack.kind = attacks::AttackKind::gradient;
  cfg.attack.epsilon = 0.25;
  cfg.attack.n_samples = 40;
  cfg.retrain_steps = 200;
  env::EnvInstance e(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle rng(5), arng(6);

  // mirror of the loop's attack stream: replay it to predict the actions
  RngHandle arng_mirror(6);
  agents::DdqnOracle oracle(agent);
  env::EnvInstance e_mirror(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle rng_mirror(5);
  std::vector<double> obs = e_mirror.reset(rng_mirror);
  int fooled_differs = 0;
  for (int step = 0; step < 200; ++step) {
    auto atk = attacks::run_attack(oracle, obs, cfg.attack, arng_mirror);
    const int expected = static_cast<int>(oracle.policy_action(atk.s_adv)[0]);
    const int from_true = static_cast<int>(oracle.policy_action(obs)[0]);
    RngHandle dummy(0);
    const int executed = agent.act(atk.s_adv, dummy, true);
    CHECK(executed == expected);
    if (expected != from_true) ++fooled_differs;
    auto out = e_mirror.step(executed);
    if (out.done || out.truncated) {
      obs = e_mirror.reset(rng_mirror);
    } else {
      obs = out.obs;
    }
  }
  CHECK(fooled_differs > 0);  // the attack really redirects some actions
}

TEST_CASE("adv_train: ddpg variant obeys the same budget contract") {
  agents::DdpgConfig dcfg;
  dcfg.hidden = {8};
  dcfg.warmup_steps = 100;
  dcfg.batch_size = 16;
  RngHandle mk(36);
  agents::DdpgAgent agent(3, 1, 2.0, dcfg, mk);
  robust::AdvTrainConfig cfg;
  cfg.attack.kind = attacks::AttackKind::gradient;
  cfg.attack.epsilon = 0.03;
  cfg.attack.n_samples = 5;
  cfg.retrain_steps = 300;
  env::EnvInstance e(env::EnvKind::pendulum, env::default_params(env::EnvKind::pendulum));
  RngHandle rng(7), arng(8);
  auto log = robust::adv_train(agent, e, cfg, rng, arng);
  CHECK(log.env_steps == 300);
  CHECK(log.episode_returns.size() == 1);  // 300 steps = one full 200-step episode
}
