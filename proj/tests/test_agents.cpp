#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rrl/agents.hpp"
#include "rrl/env.hpp"
#include "rrl/errors.hpp"
#include "rrl/train.hpp"
#include "support/fd.hpp"

using namespace rrl;

namespace {

nn::DenseNet const_net(int in, std::vector<double> outputs) {
  // zero weights, biases = outputs: the net returns `outputs` for any input
  nn::DenseNet net;
  nn::DenseLayer l;
  l.in_dim = in;
  l.out_dim = static_cast<int>(outputs.size());
  l.act = nn::Activation::identity;
  l.weights.assign(static_cast<std::size_t>(l.in_dim) * l.out_dim, 0.0);
  l.bias = std::move(outputs);
  net.layers.push_back(std::move(l));
  return net;
}

agents::Transition make_t(std::vector<double> s, double a, double r, std::vector<double> sn,
                          bool done) {
  return {std::move(s), {a}, r, std::move(sn), done};
}

}  // namespace

TEST_CASE("replay: FIFO eviction at capacity") {
  agents::ReplayBuffer buf(2);
  buf.push(make_t({1}, 0, 0, {1}, false));
  buf.push(make_t({2}, 0, 0, {2}, false));
  buf.push(make_t({3}, 0, 0, {3}, false));
  CHECK(buf.size() == 2);
  CHECK(buf.at(0).s[0] == 2.0);
  CHECK(buf.at(1).s[0] == 3.0);
}

TEST_CASE("replay: sampling with replacement from a single element") {
  agents::ReplayBuffer buf(4);
  buf.push(make_t({7}, 1, 0.5, {8}, false));
  RngHandle rng(1);
  auto batch = buf.sample(3, rng);
  CHECK(batch.size() == 3);
  for (auto* t : batch) CHECK(t->s[0] == 7.0);
}

TEST_CASE("replay: empty buffer sampling is a contract error") {
  agents::ReplayBuffer buf(4);
  RngHandle rng(1);
  CHECK_THROWS_AS(buf.sample(1, rng), ContractError);
}

TEST_CASE("replay: uniform sampling within binomial bounds") {
  agents::ReplayBuffer buf(10);
  for (int i = 0; i < 10; ++i) buf.push(make_t({double(i)}, 0, 0, {0}, false));
  RngHandle rng(2);
  std::vector<int> counts(10, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) counts[static_cast<int>(buf.sample_one(rng).s[0])]++;
  // 3 sigma binomial bound around n/10
  const double sigma = std::sqrt(n * 0.1 * 0.9);
  for (int c : counts) CHECK(std::abs(c - 1000.0) <= 3 * sigma);
}

TEST_CASE("ddqn act: argmax with lowest-index tie break") {
  agents::DdqnConfig cfg;
  RngHandle rng(3);
  agents::DdqnAgent agent(const_net(2, {1.0, 3.0}), const_net(2, {0.0, 0.0}), cfg);
  RngHandle arng(4);
  CHECK(agent.act(std::vector<double>{0.1, 0.2}, arng, false) == 1);

  agents::DdqnAgent tie(const_net(2, {2.0, 2.0}), const_net(2, {0.0, 0.0}), cfg);
  CHECK(tie.act(std::vector<double>{0.5, 0.5}, arng, false) == 0);
}

TEST_CASE("ddqn act: epsilon 1 explores uniformly (chi-squared)") {
  agents::DdqnConfig cfg;
  cfg.eps.start = 1.0;
  cfg.eps.end = 1.0;
  agents::DdqnAgent agent(const_net(1, {5.0, 1.0, 1.0}), const_net(1, {0, 0, 0}), cfg);
  RngHandle rng(5);
  std::vector<int> counts(3, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) counts[agent.act(std::vector<double>{0.0}, rng, true)]++;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 3.0) * (c - n / 3.0) / (n / 3.0);
  CHECK(chi2 < 13.8);  // chi2(2 dof) at p=0.001
}

TEST_CASE("ddqn target: terminal transitions do not bootstrap") {
  agents::DdqnConfig cfg;
  agents::DdqnAgent agent(const_net(1, {0.0, 0.0}), const_net(1, {100.0, 100.0}), cfg);
  CHECK(agent.td_target(make_t({0}, 0, 1.0, {0}, true)) == 1.0);
}

TEST_CASE("ddqn target: action from online net, value from target net") {
  agents::DdqnConfig cfg;
  cfg.gamma = 0.9;
  // online prefers action 1; target values differ per action
  agents::DdqnAgent agent(const_net(1, {1.0, 2.0}), const_net(1, {10.0, -5.0}), cfg);
  const double y = agent.td_target(make_t({0}, 0, 0.5, {0}, false));
  CHECK(y == doctest::Approx(0.5 + 0.9 * (-5.0)).epsilon(1e-12));
}

TEST_CASE("soft update: tau 1 copies, tau 0 freezes, k-step blend is exact") {
  RngHandle rng(6);
  auto online = nn::make_mlp(2, {3}, 2, nn::Activation::identity, rng);
  auto target = nn::make_mlp(2, {3}, 2, nn::Activation::identity, rng);

  auto t1 = target;
  agents::soft_update(t1, online, 1.0);
  CHECK(t1.layers[0].weights == online.layers[0].weights);

  auto t0 = target;
  agents::soft_update(t0, online, 0.0);
  CHECK(t0.layers[0].weights == target.layers[0].weights);

  const double tau = 0.07;
  const int k = 9;
  auto tk = target;
  for (int i = 0; i < k; ++i) agents::soft_update(tk, online, tau);
  const double keep = std::pow(1.0 - tau, k);
  for (std::size_t li = 0; li < tk.layers.size(); ++li) {
    for (std::size_t wi = 0; wi < tk.layers[li].weights.size(); ++wi) {
      const double want =
          (1.0 - keep) * online.layers[li].weights[wi] + keep * target.layers[li].weights[wi];
      CHECK(std::abs(tk.layers[li].weights[wi] - want) < 1e-9);
    }
  }
}

TEST_CASE("ddqn learn: underfull buffer is a contract error") {
  agents::DdqnConfig cfg;
  RngHandle rng(7);
  agents::DdqnAgent agent(2, 2, cfg, rng);
  agents::ReplayBuffer buf(100);
  buf.push(make_t({0, 0}, 0, 1, {0, 0}, false));
  CHECK_THROWS_AS(agent.learn_step(buf, rng), ContractError);
}

TEST_CASE("ddpg act: zero-weight tanh actor returns the zero action") {
  agents::DdpgConfig cfg;
  cfg.hidden = {4};
  RngHandle rng(8);
  agents::DdpgAgent agent(2, 1, 2.0, cfg, rng);
  // zero the actor output layer
  for (auto& w : agent.actor_mut().layers.back().weights) w = 0;
  for (auto& b : agent.actor_mut().layers.back().bias) b = 0;
  RngHandle arng(9);
  auto a = agent.act(std::vector<double>{0.3, 0.4}, arng, false);
  CHECK(a[0] == 0.0);
}

TEST_CASE("ddpg act: zero noise scale equals greedy; clipping holds at the bound") {
  agents::DdpgConfig cfg;
  cfg.hidden = {4};
  cfg.noise_scale_frac = 0.0;
  RngHandle rng(10);
  agents::DdpgAgent agent(2, 1, 1.5, cfg, rng);
  RngHandle r1(11), r2(11);
  auto g = agent.act(std::vector<double>{0.2, 0.9}, r1, false);
  auto e = agent.act(std::vector<double>{0.2, 0.9}, r2, true);
  CHECK(g == e);

  agents::DdpgConfig noisy = cfg;
  noisy.noise_scale_frac = 100.0;  // enormous noise, must clip to the bound
  RngHandle rng2(12);
  agents::DdpgAgent loud(2, 1, 1.5, noisy, rng2);
  RngHandle r3(13);
  for (int i = 0; i < 50; ++i) {
    auto a = loud.act(std::vector<double>{0.2, 0.9}, r3, true);
    CHECK(std::abs(a[0]) <= 1.5);
  }
}

TEST_CASE("ddpg critic target: done masks the bootstrap") {
  agents::DdpgConfig cfg;
  cfg.hidden = {4};
  RngHandle rng(14);
  agents::DdpgAgent agent(2, 1, 1.0, cfg, rng);
  CHECK(agent.critic_td_target({{0.1, 0.2}, {0.5}, 2.5, {0.3, 0.4}, true}) == 2.5);
}

TEST_CASE("ddpg: actor gradient matches finite differences on a batch of one") {
  agents::DdpgConfig cfg;
  cfg.hidden = {5};
  cfg.actor_lr = 1e-3;
  cfg.tau = 0.0;  // frozen targets keep the comparison clean
  RngHandle rng(15);
  agents::DdpgAgent agent(2, 1, 1.5, cfg, rng);
  const std::vector<double> s = {0.4, 0.7};

  // analytic batch-of-one actor gradient, via the same path learn_step uses
  nn::ForwardCache actor_cache;
  auto a = agent.actor_action(agent.actor(), s, &actor_cache);
  nn::ForwardCache critic_cache;
  agent.critic_value(agent.critic(), s, a, &critic_cache);
  const double one = 1.0;
  auto in_grad = nn::input_gradient(agent.critic(), critic_cache, std::span(&one, 1));
  std::vector<double> up = {in_grad[2] * 1.5};
  auto grads = nn::zero_gradients(agent.actor());
  nn::backward_accumulate(agent.actor(), actor_cache, up, 1.0, grads);

  auto q_of_params = [&](const std::vector<double>& w, std::size_t li) {
    agents::DdpgAgent copy = agent;
    copy.actor_mut().layers[li].weights = w;
    auto act = copy.actor_action(copy.actor(), s);
    return copy.critic_value(copy.critic(), s, act);
  };
  for (std::size_t li = 0; li < agent.actor().layers.size(); ++li) {
    const auto& w = agent.actor().layers[li].weights;
    for (std::size_t wi = 0; wi < w.size(); wi += 3) {
      const double fd = testsupport::central_diff([&](const std::vector<double>& wv) {
        return q_of_params(wv, li);
      }, w, wi);
      CHECK(testsupport::close_rel_abs(grads.weight_grads[li][wi], fd, 1e-5, 1e-7));
    }
  }
}

TEST_CASE("ddpg: ascending a quadratic critic moves the action toward the optimum") {
  // critic Q(s,a) = -(a - 0.5)^2 up to affine pieces is not exactly
  // representable; instead check the update direction with a hand-made critic
  // whose action gradient is constant: Q = 3 * a. One actor step must
  // increase the action.
  agents::DdpgConfig cfg;
  cfg.hidden = {4};
  cfg.actor_lr = 1e-2;
  cfg.batch_size = 1;
  cfg.tau = 0.0;
  RngHandle rng(16);
  agents::DdpgAgent seed_agent(1, 1, 1.0, cfg, rng);
  // critic: input (s, a) -> 3a via a single identity layer
  nn::DenseNet critic;
  nn::DenseLayer cl;
  cl.in_dim = 2;
  cl.out_dim = 1;
  cl.act = nn::Activation::identity;
  cl.weights = {0.0, 3.0};
  cl.bias = {0.0};
  critic.layers.push_back(cl);
  agents::DdpgAgent agent(seed_agent.actor(), critic, seed_agent.target_actor(), critic, 1.0, cfg);

  agents::ReplayBuffer buf(8);
  buf.push(make_t({0.5}, 0.0, 0.0, {0.5}, true));
  const double before = agent.actor_action(agent.actor(), std::vector<double>{0.5})[0];
  RngHandle lrng(17);
  agent.learn_step(buf, lrng);
  const double after = agent.actor_action(agent.actor(), std::vector<double>{0.5})[0];
  CHECK(after > before);
}

TEST_CASE("train_vanilla: zero budget returns the agent unchanged") {
  agents::DdqnConfig cfg;
  RngHandle rng(18);
  agents::DdqnAgent agent(4, 2, cfg, rng);
  auto before = agent.online();
  env::EnvInstance e(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle trng(19);
  auto log = train::train_vanilla(agent, e, 0, trng);
  CHECK(log.episode_returns.empty());
  CHECK(log.env_steps == 0);
  CHECK(agent.online().layers[0].weights == before.layers[0].weights);
}

TEST_CASE("train_vanilla: return log counts completed episodes") {
  agents::DdqnConfig cfg;
  cfg.warmup_steps = 5000;  // stay in the random phase; no learning noise
  RngHandle rng(20);
  agents::DdqnAgent agent(4, 2, cfg, rng);
  env::EnvInstance e(env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole));
  RngHandle trng(21);
  auto log = train::train_vanilla(agent, e, 2000, trng);
  CHECK(log.env_steps == 2000);
  CHECK(log.episode_returns.size() > 10);  // random cartpole episodes are short
  for (double r : log.episode_returns) CHECK(r >= 1.0);
}

TEST_CASE("oracle consistency: ddqn greedy action and best value") {
  RngHandle rng(22);
  agents::DdqnConfig cfg;
  agents::DdqnAgent agent(3, 4, cfg, rng);
  agents::DdqnOracle oracle(agent);
  RngHandle srng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s = {srng.uniform01(), srng.uniform01(), srng.uniform01()};
    auto q_on = nn::forward(agent.online(), s);
    auto q_tg = nn::forward(agent.target(), s);
    CHECK(static_cast<int>(oracle.policy_action(s)[0]) == agents::argmax_lowest(q_on));
    CHECK(oracle.best_value(s) == *std::max_element(q_tg.begin(), q_tg.end()));
    CHECK(oracle.greedy_action(s) == oracle.policy_action(s));
  }
}

TEST_CASE("oracle: ddpg value gradient matches finite differences") {
  agents::DdpgConfig cfg;
  cfg.hidden = {6};
  RngHandle rng(24);
  agents::DdpgAgent agent(3, 1, 2.0, cfg, rng);
  agents::DdpgOracle oracle(agent);
  RngHandle srng(25);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> s = {srng.uniform01(), srng.uniform01(), srng.uniform01()};
    auto grad = oracle.value_gradient(s);
    auto f = [&](const std::vector<double>& sv) {
      auto a = agent.actor_action(agent.actor(), sv);
      return agent.critic_value(agent.target_critic(), sv, a);
    };
    for (int d = 0; d < 3; ++d) {
      const double fd = testsupport::central_diff(f, s, d);
      CHECK(testsupport::close_rel_abs(grad[d], fd, 1e-5, 1e-7));
    }
  }
}
