#include "rrl/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "rrl/errors.hpp"

namespace rrl::attacks {

namespace {

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void validate(const AttackConfig& cfg, bool allow_zero_samples = false) {
  if (!(cfg.epsilon >= 0.0)) throw ContractError("attack: epsilon must be >= 0");
  if (cfg.n_samples < (allow_zero_samples ? 0 : 1)) {
    throw ContractError("attack: n_samples out of range");
  }
  if (!(cfg.alpha_b > 0.0) || !(cfg.beta_b > 0.0)) {
    throw ContractError("attack: beta shape parameters must be positive");
  }
}

AttackOutcome identity_outcome(const agents::AgentOracle& oracle, std::span<const double> s) {
  AttackOutcome out;
  out.s_adv.assign(s.begin(), s.end());
  out.fooled_action = oracle.policy_action(s);
  out.predicted_value = oracle.action_value(s, out.fooled_action);
  out.improved = false;
  return out;
}

// Selection shared by the sampling attacks: accept a candidate only if the
// action it induces is valued below the unattacked optimum at the true state.
struct Selector {
  const agents::AgentOracle& oracle;
  std::span<const double> s;
  double q_star;  // running best (lowest) accepted value
  AttackOutcome out;

  Selector(const agents::AgentOracle& o, std::span<const double> state)
      : oracle(o), s(state), q_star(o.best_value(state)) {
    out.s_adv.assign(state.begin(), state.end());
    out.fooled_action = o.policy_action(state);
    out.predicted_value = o.action_value(state, out.fooled_action);
  }

  void consider(const std::vector<double>& candidate) {
    const std::vector<double> a_adv = oracle.policy_action(candidate);
    const double v = oracle.action_value(s, a_adv);
    if (v < q_star) {
      q_star = v;
      out.s_adv = candidate;
      out.fooled_action = a_adv;
      out.predicted_value = v;
      out.improved = true;
    }
  }
};

int worst_action(const agents::AgentOracle& oracle, std::span<const double> s) {
  const std::vector<double> q = oracle.q_target(s);
  return static_cast<int>(std::min_element(q.begin(), q.end()) - q.begin());
}

// Gradient of the adversarial loss at state x. For discrete actions the loss
// is the Theorem-style cross entropy against the worst action w (fixed by the
// caller at the true state); for continuous actions it is the target critic
// value through the actor.
std::vector<double> adversarial_loss_gradient(const agents::AgentOracle& oracle,
                                              std::span<const double> x, int w) {
  if (oracle.is_discrete()) return oracle.ce_gradient_target(x, w);
  return oracle.value_gradient(x);
}

}  // namespace

const char* attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::naive: return "naive";
    case AttackKind::gradient: return "gradient";
    case AttackKind::sgd: return "sgd";
    case AttackKind::hfsgm: return "hfsgm";
  }
  return "naive";
}

AttackKind attack_kind_from_name(const std::string& name) {
  if (name == "naive") return AttackKind::naive;
  if (name == "gradient") return AttackKind::gradient;
  if (name == "sgd") return AttackKind::sgd;
  if (name == "hfsgm") return AttackKind::hfsgm;
  throw ConfigError("unknown attack kind: " + name);
}

AttackOutcome attack_naive(const agents::AgentOracle& oracle, std::span<const double> s,
                           const AttackConfig& cfg, RngHandle& rng) {
  validate(cfg);
  if (cfg.epsilon == 0.0) return identity_outcome(oracle, s);

  Selector sel(oracle, s);
  std::vector<double> cand(s.size());
  std::vector<double> delta(s.size());
  for (int i = 0; i < cfg.n_samples; ++i) {
    for (std::size_t d = 0; d < s.size(); ++d) {
      delta[d] = cfg.epsilon * (rng.beta(cfg.alpha_b, cfg.beta_b) - 0.5);
    }
    const double norm = l2_norm(delta);
    const double scale = norm > cfg.epsilon ? cfg.epsilon / norm : 1.0;
    for (std::size_t d = 0; d < s.size(); ++d) cand[d] = s[d] + scale * delta[d];
    sel.consider(cand);
  }
  return std::move(sel.out);
}

AttackOutcome attack_gradient(const agents::AgentOracle& oracle, std::span<const double> s,
                              const AttackConfig& cfg, RngHandle& rng) {
  validate(cfg);
  if (cfg.epsilon == 0.0) return identity_outcome(oracle, s);

  const int w = oracle.is_discrete() ? worst_action(oracle, s) : -1;
  const std::vector<double> grad = adversarial_loss_gradient(oracle, s, w);
  const double norm = l2_norm(grad);
  if (norm < 1e-12) {
    AttackOutcome out = identity_outcome(oracle, s);
    out.zero_gradient = true;
    return out;
  }

  Selector sel(oracle, s);
  std::vector<double> cand(s.size());
  for (int i = 0; i < cfg.n_samples; ++i) {
    const double m = cfg.epsilon * rng.beta(cfg.alpha_b, cfg.beta_b);
    for (std::size_t d = 0; d < s.size(); ++d) cand[d] = s[d] - m * grad[d] / norm;
    sel.consider(cand);
  }
  return std::move(sel.out);
}

AttackOutcome attack_sgd(const agents::AgentOracle& oracle, std::span<const double> s,
                         const AttackConfig& cfg, RngHandle&) {
  validate(cfg, /*allow_zero_samples=*/true);
  if (cfg.epsilon == 0.0 || cfg.n_samples == 0) return identity_outcome(oracle, s);

  const int w = oracle.is_discrete() ? worst_action(oracle, s) : -1;
  std::vector<double> cur(s.begin(), s.end());
  bool hit_zero_gradient = false;
  for (int i = 0; i < cfg.n_samples; ++i) {
    const std::vector<double> grad = adversarial_loss_gradient(oracle, cur, w);
    const double norm = l2_norm(grad);
    if (norm < 1e-12) {
      hit_zero_gradient = true;
      break;
    }
    for (std::size_t d = 0; d < s.size(); ++d) cur[d] -= cfg.sgd_step * grad[d] / norm;
    // project back into the epsilon ball around the original state
    std::vector<double> delta(s.size());
    for (std::size_t d = 0; d < s.size(); ++d) delta[d] = cur[d] - s[d];
    const double dn = l2_norm(delta);
    if (dn > cfg.epsilon) {
      for (std::size_t d = 0; d < s.size(); ++d) cur[d] = s[d] + cfg.epsilon * delta[d] / dn;
    }
  }

  AttackOutcome out;
  out.s_adv = cur;
  out.fooled_action = oracle.policy_action(cur);
  out.predicted_value = oracle.action_value(s, out.fooled_action);
  out.improved = out.predicted_value < oracle.best_value(s);
  out.zero_gradient = hit_zero_gradient;
  return out;
}

AttackOutcome attack_hfsgm(const agents::AgentOracle& oracle, std::span<const double> s,
                           const AttackConfig& cfg, RngHandle&) {
  validate(cfg);
  if (!oracle.is_discrete()) throw ContractError("attack_hfsgm: discrete-action oracles only");
  if (cfg.epsilon == 0.0) return identity_outcome(oracle, s);

  const std::vector<double> q = oracle.q_online(s);
  const int a_star = agents::argmax_lowest(q);
  // Ascend -log pi_online(a*|s): decreases the best action's probability.
  const std::vector<double> grad = oracle.ce_gradient_online(s, a_star);
  std::vector<double> dir(s.size(), 0.0);
  for (std::size_t d = 0; d < s.size(); ++d) {
    dir[d] = grad[d] > 0.0 ? 1.0 : (grad[d] < 0.0 ? -1.0 : 0.0);
  }
  const double dn = l2_norm(dir);
  if (dn < 1e-12) {
    AttackOutcome out = identity_outcome(oracle, s);
    out.zero_gradient = true;
    return out;
  }
  AttackOutcome out;
  out.s_adv.assign(s.begin(), s.end());
  // sign direction rescaled into the l2 ball so every kind honors the budget
  for (std::size_t d = 0; d < s.size(); ++d) out.s_adv[d] += cfg.epsilon * dir[d] / dn;
  out.fooled_action = oracle.policy_action(out.s_adv);
  out.predicted_value = oracle.action_value(s, out.fooled_action);
  out.improved = out.predicted_value < oracle.best_value(s);
  return out;
}

AttackOutcome run_attack(const agents::AgentOracle& oracle, std::span<const double> s,
                         const AttackConfig& cfg, RngHandle& rng) {
  switch (cfg.kind) {
    case AttackKind::naive: return attack_naive(oracle, s, cfg, rng);
    case AttackKind::gradient: return attack_gradient(oracle, s, cfg, rng);
    case AttackKind::sgd: return attack_sgd(oracle, s, cfg, rng);
    case AttackKind::hfsgm: return attack_hfsgm(oracle, s, cfg, rng);
  }
  throw ContractError("run_attack: unknown attack kind");
}

}  // namespace rrl::attacks
