#include "rrl/agents.hpp"

#include <algorithm>
#include <cmath>

#include "rrl/errors.hpp"

namespace rrl::agents {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractError("ReplayBuffer: capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

const Transition& ReplayBuffer::sample_one(RngHandle& rng) const {
  if (data_.empty()) throw ContractError("ReplayBuffer: sample from empty buffer");
  return data_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.size())))];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch_size, RngHandle& rng) const {
  if (data_.empty()) throw ContractError("ReplayBuffer: sample from empty buffer");
  std::vector<const Transition*> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) out.push_back(&sample_one(rng));
  return out;
}

const Transition& ReplayBuffer::at(std::size_t logical_index) const {
  if (logical_index >= data_.size()) throw ContractError("ReplayBuffer: index out of range");
  if (data_.size() < capacity_) return data_[logical_index];
  return data_[(next_ + logical_index) % capacity_];
}

int argmax_lowest(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

int AgentOracle::num_actions() const {
  throw ContractError("num_actions: continuous-action oracle");
}
std::vector<double> AgentOracle::q_target(std::span<const double>) const {
  throw ContractError("q_target: not a discrete-action oracle");
}
std::vector<double> AgentOracle::q_online(std::span<const double>) const {
  throw ContractError("q_online: not a discrete-action oracle");
}
std::vector<double> AgentOracle::ce_gradient_target(std::span<const double>, int) const {
  throw ContractError("ce_gradient_target: not a discrete-action oracle");
}
std::vector<double> AgentOracle::ce_gradient_online(std::span<const double>, int) const {
  throw ContractError("ce_gradient_online: not a discrete-action oracle");
}
std::vector<double> AgentOracle::value_gradient(std::span<const double>) const {
  throw ContractError("value_gradient: not a continuous-action oracle");
}

void soft_update(nn::DenseNet& target, const nn::DenseNet& online, double tau) {
  if (target.layers.size() != online.layers.size()) {
    throw ContractError("soft_update: architecture mismatch");
  }
  for (std::size_t li = 0; li < target.layers.size(); ++li) {
    auto& tl = target.layers[li];
    const auto& ol = online.layers[li];
    if (tl.weights.size() != ol.weights.size()) {
      throw ContractError("soft_update: architecture mismatch");
    }
    for (std::size_t i = 0; i < tl.weights.size(); ++i) {
      tl.weights[i] = tau * ol.weights[i] + (1.0 - tau) * tl.weights[i];
    }
    for (std::size_t i = 0; i < tl.bias.size(); ++i) {
      tl.bias[i] = tau * ol.bias[i] + (1.0 - tau) * tl.bias[i];
    }
  }
}

DdqnAgent::DdqnAgent(int state_dim, int num_actions, const DdqnConfig& cfg, RngHandle& rng)
    : cfg_(cfg),
      online_(nn::make_mlp(state_dim, cfg.hidden, num_actions, nn::Activation::identity, rng)),
      target_(online_),
      opt_(nn::make_adam(online_, cfg.lr)) {}

DdqnAgent::DdqnAgent(nn::DenseNet online, nn::DenseNet target, const DdqnConfig& cfg)
    : cfg_(cfg), online_(std::move(online)), target_(std::move(target)),
      opt_(nn::make_adam(online_, cfg.lr)) {
  if (online_.input_dim() != target_.input_dim() ||
      online_.output_dim() != target_.output_dim() ||
      online_.layers.size() != target_.layers.size()) {
    throw ShapeError("DdqnAgent: online/target architecture mismatch");
  }
}

int DdqnAgent::act(std::span<const double> obs, RngHandle& rng, bool explore) const {
  if (explore && rng.uniform01() < current_epsilon()) {
    return rng.uniform_int(num_actions());
  }
  const std::vector<double> q = nn::forward(online_, obs);
  return argmax_lowest(q);
}

double DdqnAgent::td_target(const Transition& t) const {
  if (t.done) return t.r;
  const std::vector<double> q_next_online = nn::forward(online_, t.s_next);
  const int a_star = argmax_lowest(q_next_online);
  const std::vector<double> q_next_target = nn::forward(target_, t.s_next);
  return t.r + cfg_.gamma * q_next_target[a_star];
}

void DdqnAgent::learn_step(const ReplayBuffer& buffer, RngHandle& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg_.batch_size)) {
    throw ContractError("ddqn_learn_step: buffer smaller than batch size");
  }
  const auto batch = buffer.sample(static_cast<std::size_t>(cfg_.batch_size), rng);
  nn::NetGradients grads = nn::zero_gradients(online_);
  const double inv_b = 1.0 / cfg_.batch_size;
  std::vector<double> upstream(static_cast<std::size_t>(num_actions()));
  nn::ForwardCache cache;
  for (const Transition* t : batch) {
    const double y = td_target(*t);
    const std::vector<double> q = nn::forward(online_, t->s, &cache);
    const int a = static_cast<int>(t->a[0]);
    std::fill(upstream.begin(), upstream.end(), 0.0);
    upstream[a] = 2.0 * (q[a] - y) * inv_b;  // d/dq of mean squared TD error
    nn::backward_accumulate(online_, cache, upstream, 1.0, grads);
  }
  nn::adam_step(online_, grads, opt_);
  learn_steps_ += 1;
  sync_target();
}

void DdqnAgent::sync_target() {
  if (cfg_.hard_sync) {
    if (learn_steps_ % cfg_.sync_period == 0) target_ = online_;
  } else {
    soft_update(target_, online_, cfg_.tau);
  }
}

DdpgAgent::DdpgAgent(int state_dim, int action_dim, double action_bound, const DdpgConfig& cfg,
                     RngHandle& rng)
    : cfg_(cfg),
      action_bound_(action_bound),
      actor_(nn::make_mlp(state_dim, cfg.hidden, action_dim, nn::Activation::tanh, rng)),
      critic_(nn::make_mlp(state_dim + action_dim, cfg.hidden, 1, nn::Activation::identity, rng)),
      target_actor_(actor_),
      target_critic_(critic_),
      actor_opt_(nn::make_adam(actor_, cfg.actor_lr)),
      critic_opt_(nn::make_adam(critic_, cfg.critic_lr)) {
  if (!(action_bound > 0.0)) throw ContractError("DdpgAgent: action bound must be positive");
}

DdpgAgent::DdpgAgent(nn::DenseNet actor, nn::DenseNet critic, nn::DenseNet target_actor,
                     nn::DenseNet target_critic, double action_bound, const DdpgConfig& cfg)
    : cfg_(cfg),
      action_bound_(action_bound),
      actor_(std::move(actor)),
      critic_(std::move(critic)),
      target_actor_(std::move(target_actor)),
      target_critic_(std::move(target_critic)),
      actor_opt_(nn::make_adam(actor_, cfg.actor_lr)),
      critic_opt_(nn::make_adam(critic_, cfg.critic_lr)) {
  if (!(action_bound > 0.0)) throw ContractError("DdpgAgent: action bound must be positive");
  if (critic_.input_dim() != actor_.input_dim() + actor_.output_dim() ||
      actor_.input_dim() != target_actor_.input_dim() ||
      critic_.input_dim() != target_critic_.input_dim()) {
    throw ShapeError("DdpgAgent: actor/critic architecture mismatch");
  }
}

std::vector<double> DdpgAgent::actor_action(const nn::DenseNet& actor, std::span<const double> s,
                                            nn::ForwardCache* cache) const {
  std::vector<double> a = nn::forward(actor, s, cache);
  for (double& v : a) v *= action_bound_;
  return a;
}

double DdpgAgent::critic_value(const nn::DenseNet& critic, std::span<const double> s,
                               std::span<const double> a, nn::ForwardCache* cache) const {
  std::vector<double> in(s.begin(), s.end());
  in.insert(in.end(), a.begin(), a.end());
  return nn::forward(critic, in, cache)[0];
}

std::vector<double> DdpgAgent::act(std::span<const double> obs, RngHandle& rng,
                                   bool explore) const {
  std::vector<double> a = actor_action(actor_, obs);
  if (explore) {
    const double sigma = cfg_.noise_scale_frac * action_bound_;
    for (double& v : a) {
      v += sigma * rng.gaussian();
      v = std::min(std::max(v, -action_bound_), action_bound_);
    }
  }
  return a;
}

double DdpgAgent::critic_td_target(const Transition& t) const {
  if (t.done) return t.r;
  const std::vector<double> a_next = actor_action(target_actor_, t.s_next);
  return t.r + cfg_.gamma * critic_value(target_critic_, t.s_next, a_next);
}

void DdpgAgent::learn_step(const ReplayBuffer& buffer, RngHandle& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg_.batch_size)) {
    throw ContractError("ddpg_learn_step: buffer smaller than batch size");
  }
  const auto batch = buffer.sample(static_cast<std::size_t>(cfg_.batch_size), rng);
  const double inv_b = 1.0 / cfg_.batch_size;
  const int sd = state_dim();
  const int ad = action_dim();

  // Critic: one Adam step on the mean squared TD error.
  nn::NetGradients critic_grads = nn::zero_gradients(critic_);
  nn::ForwardCache cache;
  for (const Transition* t : batch) {
    const double y = critic_td_target(*t);
    const double q = critic_value(critic_, t->s, t->a, &cache);
    const double upstream = 2.0 * (q - y) * inv_b;
    nn::backward_accumulate(critic_, cache, std::span<const double>(&upstream, 1), 1.0,
                            critic_grads);
  }
  nn::adam_step(critic_, critic_grads, critic_opt_);

  // Actor: ascend mean_b Q(s_b, U(s_b)); the critic's action gradient is
  // chained through the actor, so Adam receives the negated gradient.
  nn::NetGradients actor_grads = nn::zero_gradients(actor_);
  nn::ForwardCache actor_cache;
  constexpr double kOne = 1.0;
  for (const Transition* t : batch) {
    const std::vector<double> a = actor_action(actor_, t->s, &actor_cache);
    nn::ForwardCache critic_cache;
    critic_value(critic_, t->s, a, &critic_cache);
    const std::vector<double> in_grad =
        nn::input_gradient(critic_, critic_cache, std::span<const double>(&kOne, 1));
    std::vector<double> upstream(static_cast<std::size_t>(ad));
    for (int j = 0; j < ad; ++j) upstream[j] = in_grad[sd + j] * action_bound_;
    nn::backward_accumulate(actor_, actor_cache, upstream, -inv_b, actor_grads);
  }
  nn::adam_step(actor_, actor_grads, actor_opt_);

  soft_update(target_actor_, actor_, cfg_.tau);
  soft_update(target_critic_, critic_, cfg_.tau);
}

RbfAgent::RbfAgent(int state_dim, int num_actions, const RbfAgentConfig& cfg)
    : cfg_(cfg), net_(rbf::make_rbf(cfg.bins, state_dim, num_actions)) {}

int RbfAgent::act(std::span<const double> obs, RngHandle& rng, bool explore) const {
  if (explore && rng.uniform01() < current_epsilon()) {
    return rng.uniform_int(net_.num_actions);
  }
  const std::vector<double> q = rbf::rbf_q_values(net_, obs);
  return argmax_lowest(q);
}

void RbfAgent::td_update(const Transition& t) {
  rbf::rbf_td_update(net_, t.s, static_cast<int>(t.a[0]), t.r, t.s_next, t.done, cfg_.gamma,
                     cfg_.lr);
}

DdqnOracle::DdqnOracle(const nn::DenseNet& online, const nn::DenseNet& target)
    : online_(online), target_(target) {}

int DdqnOracle::state_dim() const { return online_.input_dim(); }
int DdqnOracle::num_actions() const { return online_.output_dim(); }

std::vector<double> DdqnOracle::policy_action(std::span<const double> s) const {
  const std::vector<double> q = nn::forward(online_, s);
  return {static_cast<double>(argmax_lowest(q))};
}

double DdqnOracle::action_value(std::span<const double> s, std::span<const double> a) const {
  return nn::forward(target_, s)[static_cast<int>(a[0])];
}

double DdqnOracle::best_value(std::span<const double> s) const {
  const std::vector<double> q = nn::forward(target_, s);
  return *std::max_element(q.begin(), q.end());
}

std::vector<double> DdqnOracle::q_target(std::span<const double> s) const {
  return nn::forward(target_, s);
}
std::vector<double> DdqnOracle::q_online(std::span<const double> s) const {
  return nn::forward(online_, s);
}

namespace {

std::vector<double> net_ce_gradient(const nn::DenseNet& net, std::span<const double> s,
                                    int action) {
  nn::ForwardCache cache;
  const std::vector<double> q = nn::forward(net, s, &cache);
  const nn::WorstActionLoss wal = nn::worst_action_loss(nn::softmax(q), action);
  return nn::input_gradient(net, cache, wal.logit_grad);
}

}  // namespace

std::vector<double> DdqnOracle::ce_gradient_target(std::span<const double> s, int action) const {
  return net_ce_gradient(target_, s, action);
}
std::vector<double> DdqnOracle::ce_gradient_online(std::span<const double> s, int action) const {
  return net_ce_gradient(online_, s, action);
}

std::vector<double> RbfOracle::policy_action(std::span<const double> s) const {
  const std::vector<double> q = rbf::rbf_q_values(net_, s);
  return {static_cast<double>(argmax_lowest(q))};
}

double RbfOracle::action_value(std::span<const double> s, std::span<const double> a) const {
  return rbf::rbf_q_values(net_, s)[static_cast<int>(a[0])];
}

double RbfOracle::best_value(std::span<const double> s) const {
  const std::vector<double> q = rbf::rbf_q_values(net_, s);
  return *std::max_element(q.begin(), q.end());
}

std::vector<double> RbfOracle::q_target(std::span<const double> s) const {
  return rbf::rbf_q_values(net_, s);
}
std::vector<double> RbfOracle::q_online(std::span<const double> s) const {
  return rbf::rbf_q_values(net_, s);
}

std::vector<double> RbfOracle::ce_gradient_target(std::span<const double> s, int action) const {
  const nn::WorstActionLoss wal = nn::worst_action_loss(nn::softmax(rbf::rbf_q_values(net_, s)), action);
  return rbf::rbf_input_gradient(net_, s, wal.logit_grad);
}
std::vector<double> RbfOracle::ce_gradient_online(std::span<const double> s, int action) const {
  return ce_gradient_target(s, action);
}

std::vector<double> DdpgOracle::policy_action(std::span<const double> s) const {
  return agent_.actor_action(agent_.actor(), s);
}

double DdpgOracle::action_value(std::span<const double> s, std::span<const double> a) const {
  return agent_.critic_value(agent_.target_critic(), s, a);
}

double DdpgOracle::best_value(std::span<const double> s) const {
  const std::vector<double> a = policy_action(s);
  return agent_.critic_value(agent_.target_critic(), s, a);
}

std::vector<double> DdpgOracle::value_gradient(std::span<const double> s) const {
  // dQ/ds + dQ/da * da/ds, through the target critic and online actor
  nn::ForwardCache actor_cache;
  const std::vector<double> a = agent_.actor_action(agent_.actor(), s, &actor_cache);
  nn::ForwardCache critic_cache;
  agent_.critic_value(agent_.target_critic(), s, a, &critic_cache);
  constexpr double kOne = 1.0;
  const std::vector<double> in_grad =
      nn::input_gradient(agent_.target_critic(), critic_cache, std::span<const double>(&kOne, 1));
  const int sd = agent_.state_dim();
  const int ad = agent_.action_dim();
  std::vector<double> upstream(static_cast<std::size_t>(ad));
  for (int j = 0; j < ad; ++j) upstream[j] = in_grad[sd + j] * agent_.action_bound();
  const std::vector<double> through_actor =
      nn::input_gradient(agent_.actor(), actor_cache, upstream);
  std::vector<double> grad(static_cast<std::size_t>(sd));
  for (int i = 0; i < sd; ++i) grad[i] = in_grad[i] + through_actor[i];
  return grad;
}

}  // namespace rrl::agents
