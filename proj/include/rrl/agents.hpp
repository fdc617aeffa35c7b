#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "rrl/nn.hpp"
#include "rrl/rbf.hpp"
#include "rrl/rng.hpp"

namespace rrl::agents {

struct Transition {
  std::vector<double> s;
  std::vector<double> a;  // discrete actions boxed as {double(index)}
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;  // terminal only; cap truncation still bootstraps
};

// Fixed-capacity ring with FIFO eviction and uniform sampling w/ replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  const Transition& sample_one(RngHandle& rng) const;
  std::vector<const Transition*> sample(std::size_t batch_size, RngHandle& rng) const;

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Logical index 0 = oldest element currently stored.
  const Transition& at(std::size_t logical_index) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

struct EpsSchedule {
  double start = 1.0;
  double end = 0.05;
  long anneal_steps = 1;

  double at(long step) const {
    if (step >= anneal_steps || anneal_steps <= 0) return end;
    return start + (end - start) * static_cast<double>(step) / static_cast<double>(anneal_steps);
  }
};

// Uniform interface a trained agent exposes to evaluation and attacks:
// the behavior policy plus the target-network value of a state-action pair.
class AgentOracle {
 public:
  virtual ~AgentOracle() = default;

  virtual int state_dim() const = 0;
  virtual bool is_discrete() const = 0;
  virtual int num_actions() const;

  virtual std::vector<double> policy_action(std::span<const double> s) const = 0;
  std::vector<double> greedy_action(std::span<const double> s) const { return policy_action(s); }
  virtual double action_value(std::span<const double> s, std::span<const double> a) const = 0;
  virtual double best_value(std::span<const double> s) const = 0;

  // Discrete-action surfaces (Q vectors and the cross-entropy input gradient
  // of -log softmax(q(s))[action]).
  virtual std::vector<double> q_target(std::span<const double> s) const;
  virtual std::vector<double> q_online(std::span<const double> s) const;
  virtual std::vector<double> ce_gradient_target(std::span<const double> s, int action) const;
  virtual std::vector<double> ce_gradient_online(std::span<const double> s, int action) const;

  // Continuous-action surface: d/ds of Q_target(s, U(s)) with the chain rule
  // through the actor.
  virtual std::vector<double> value_gradient(std::span<const double> s) const;
};

int argmax_lowest(std::span<const double> v);

struct DdqnConfig {
  std::vector<int> hidden = {16, 16, 16};
  double gamma = 0.99;
  double lr = 1e-3;
  double tau = 0.01;       // soft target update rate, applied every learn step
  bool hard_sync = false;  // alternative: copy target every sync_period learn steps
  long sync_period = 100;
  std::size_t buffer_capacity = 50000;
  int batch_size = 64;
  long warmup_steps = 1000;
  int warmup_hold = 40;  // warm-up actions are held this many steps
  EpsSchedule eps;
};

class DdqnAgent {
 public:
  DdqnAgent(int state_dim, int num_actions, const DdqnConfig& cfg, RngHandle& rng);
  // Reconstruction from checkpointed nets; optimizer moments start fresh.
  DdqnAgent(nn::DenseNet online, nn::DenseNet target, const DdqnConfig& cfg);

  // Epsilon-greedy when explore is set, pure argmax otherwise. Ties break to
  // the lowest index.
  int act(std::span<const double> obs, RngHandle& rng, bool explore) const;

  // One minibatch Adam step on the online net plus target sync.
  void learn_step(const ReplayBuffer& buffer, RngHandle& rng);

  // y = r + (done ? 0 : gamma * Q_target(s', argmax_a Q_online(s', a)))
  double td_target(const Transition& t) const;

  const nn::DenseNet& online() const { return online_; }
  const nn::DenseNet& target() const { return target_; }
  nn::DenseNet& online_mut() { return online_; }
  nn::DenseNet& target_mut() { return target_; }
  const DdqnConfig& config() const { return cfg_; }
  int state_dim() const { return online_.input_dim(); }
  int num_actions() const { return online_.output_dim(); }

  long schedule_step = 0;  // env-step counter driving the epsilon schedule
  double current_epsilon() const { return cfg_.eps.at(schedule_step); }

 private:
  void sync_target();

  DdqnConfig cfg_;
  nn::DenseNet online_;
  nn::DenseNet target_;
  nn::AdamState opt_;
  long learn_steps_ = 0;
};

struct DdpgConfig {
  std::vector<int> hidden = {64, 64};
  double gamma = 0.99;
  double critic_lr = 1e-3;
  double actor_lr = 1e-4;
  double tau = 0.01;
  std::size_t buffer_capacity = 50000;
  int batch_size = 64;
  long warmup_steps = 1000;
  int warmup_hold = 40;
  double noise_scale_frac = 0.1;  // stddev of action noise as fraction of the bound
};

class DdpgAgent {
 public:
  DdpgAgent(int state_dim, int action_dim, double action_bound, const DdpgConfig& cfg,
            RngHandle& rng);
  DdpgAgent(nn::DenseNet actor, nn::DenseNet critic, nn::DenseNet target_actor,
            nn::DenseNet target_critic, double action_bound, const DdpgConfig& cfg);

  // a = bound * tanh-net(obs) (+ Gaussian noise when exploring), clipped.
  std::vector<double> act(std::span<const double> obs, RngHandle& rng, bool explore) const;

  void learn_step(const ReplayBuffer& buffer, RngHandle& rng);

  double critic_td_target(const Transition& t) const;

  std::vector<double> actor_action(const nn::DenseNet& actor, std::span<const double> s,
                                   nn::ForwardCache* cache = nullptr) const;
  double critic_value(const nn::DenseNet& critic, std::span<const double> s,
                      std::span<const double> a, nn::ForwardCache* cache = nullptr) const;

  const nn::DenseNet& actor() const { return actor_; }
  const nn::DenseNet& critic() const { return critic_; }
  const nn::DenseNet& target_actor() const { return target_actor_; }
  const nn::DenseNet& target_critic() const { return target_critic_; }
  nn::DenseNet& actor_mut() { return actor_; }
  nn::DenseNet& critic_mut() { return critic_; }
  nn::DenseNet& target_actor_mut() { return target_actor_; }
  nn::DenseNet& target_critic_mut() { return target_critic_; }
  const DdpgConfig& config() const { return cfg_; }
  int state_dim() const { return actor_.input_dim(); }
  int action_dim() const { return actor_.output_dim(); }
  double action_bound() const { return action_bound_; }

  long schedule_step = 0;

 private:
  DdpgConfig cfg_;
  double action_bound_;
  nn::DenseNet actor_, critic_, target_actor_, target_critic_;
  nn::AdamState actor_opt_, critic_opt_;
};

// theta_target <- tau * theta + (1 - tau) * theta_target, per weight.
void soft_update(nn::DenseNet& target, const nn::DenseNet& online, double tau);

struct RbfAgentConfig {
  int bins = 3;
  double gamma = 0.99;
  double lr = 1e-3;
  EpsSchedule eps;
};

// Thin trainer around an RbfNet: epsilon-greedy acting and per-step TD(0).
class RbfAgent {
 public:
  RbfAgent(int state_dim, int num_actions, const RbfAgentConfig& cfg);
  RbfAgent(rbf::RbfNet net, const RbfAgentConfig& cfg) : cfg_(cfg), net_(std::move(net)) {}

  int act(std::span<const double> obs, RngHandle& rng, bool explore) const;
  void td_update(const Transition& t);

  const rbf::RbfNet& net() const { return net_; }
  rbf::RbfNet& net_mut() { return net_; }
  const RbfAgentConfig& config() const { return cfg_; }

  long schedule_step = 0;
  double current_epsilon() const { return cfg_.eps.at(schedule_step); }

 private:
  RbfAgentConfig cfg_;
  rbf::RbfNet net_;
};

// Oracle views. Each holds references; the referenced agent must outlive it.
class DdqnOracle : public AgentOracle {
 public:
  DdqnOracle(const nn::DenseNet& online, const nn::DenseNet& target);
  explicit DdqnOracle(const DdqnAgent& a) : DdqnOracle(a.online(), a.target()) {}

  int state_dim() const override;
  bool is_discrete() const override { return true; }
  int num_actions() const override;
  std::vector<double> policy_action(std::span<const double> s) const override;
  double action_value(std::span<const double> s, std::span<const double> a) const override;
  double best_value(std::span<const double> s) const override;
  std::vector<double> q_target(std::span<const double> s) const override;
  std::vector<double> q_online(std::span<const double> s) const override;
  std::vector<double> ce_gradient_target(std::span<const double> s, int action) const override;
  std::vector<double> ce_gradient_online(std::span<const double> s, int action) const override;

 private:
  const nn::DenseNet& online_;
  const nn::DenseNet& target_;
};

// The single RBF net serves as both online and target Q.
class RbfOracle : public AgentOracle {
 public:
  explicit RbfOracle(const rbf::RbfNet& net) : net_(net) {}

  int state_dim() const override { return net_.state_dim; }
  bool is_discrete() const override { return true; }
  int num_actions() const override { return net_.num_actions; }
  std::vector<double> policy_action(std::span<const double> s) const override;
  double action_value(std::span<const double> s, std::span<const double> a) const override;
  double best_value(std::span<const double> s) const override;
  std::vector<double> q_target(std::span<const double> s) const override;
  std::vector<double> q_online(std::span<const double> s) const override;
  std::vector<double> ce_gradient_target(std::span<const double> s, int action) const override;
  std::vector<double> ce_gradient_online(std::span<const double> s, int action) const override;

 private:
  const rbf::RbfNet& net_;
};

class DdpgOracle : public AgentOracle {
 public:
  explicit DdpgOracle(const DdpgAgent& a) : agent_(a) {}

  int state_dim() const override { return agent_.state_dim(); }
  bool is_discrete() const override { return false; }
  std::vector<double> policy_action(std::span<const double> s) const override;
  double action_value(std::span<const double> s, std::span<const double> a) const override;
  double best_value(std::span<const double> s) const override;
  std::vector<double> value_gradient(std::span<const double> s) const override;

 private:
  const DdpgAgent& agent_;
};

}  // namespace rrl::agents
