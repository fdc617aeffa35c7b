#include "rrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rrl/errors.hpp"
#include "rrl/rng.hpp"

namespace rrl::harness {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_dims(const agents::AgentOracle& oracle, env::EnvKind kind) {
  if (oracle.state_dim() != env::obs_dim(kind)) {
    throw ShapeError("evaluate: oracle expects state dim " + std::to_string(oracle.state_dim()) +
                     " but environment provides " + std::to_string(env::obs_dim(kind)));
  }
  if (oracle.is_discrete() != env::discrete_actions(kind)) {
    throw ShapeError("evaluate: oracle and environment disagree on action type");
  }
}

EvalResult aggregate(const EvalSpec& spec, std::vector<double> returns) {
  EvalResult res;
  res.per_episode_returns = std::move(returns);
  const std::size_t n = res.per_episode_returns.size();
  double sum = 0.0;
  for (double r : res.per_episode_returns) sum += r;
  res.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double r : res.per_episode_returns) ss += (r - res.mean) * (r - res.mean);
  res.stddev = std::sqrt(ss / static_cast<double>(n));
  res.per_seed_means.resize(spec.seeds.size());
  for (std::size_t si = 0; si < spec.seeds.size(); ++si) {
    double s = 0.0;
    for (int ei = 0; ei < spec.episodes; ++ei) {
      s += res.per_episode_returns[si * static_cast<std::size_t>(spec.episodes) + ei];
    }
    res.per_seed_means[si] = s / spec.episodes;
  }
  return res;
}

void check_spec(const EvalSpec& spec) {
  if (spec.episodes < 1) throw ContractError("evaluate: episodes must be >= 1");
  if (spec.seeds.empty()) throw ContractError("evaluate: seed list must be non-empty");
  if (!spec.greedy) throw ConfigError("evaluate: only greedy evaluation is supported");
}

}  // namespace

double rollout_episode(const agents::AgentOracle& oracle, env::EnvKind kind,
                       const env::EnvParams& params, const attacks::AttackConfig* attack,
                       std::uint64_t stream_seed) {
  env::EnvInstance e(kind, params);
  RngHandle rng(stream_seed);
  std::vector<double> obs = e.reset(rng);
  double ret = 0.0;
  for (;;) {
    std::vector<double> acting = obs;
    if (attack) acting = attacks::run_attack(oracle, obs, *attack, rng).s_adv;
    const std::vector<double> action = oracle.policy_action(acting);
    const env::StepOutcome out = e.discrete_actions()
                                     ? e.step(static_cast<int>(action[0]))
                                     : e.step(action[0]);
    ret += out.reward;
    if (out.done || out.truncated) return ret;
    obs = out.obs;
  }
}

EvalResult evaluate(const agents::AgentOracle& oracle, env::EnvKind kind,
                    const env::EnvParams& params, const EvalSpec& spec,
                    std::uint64_t stream_salt) {
  check_spec(spec);
  check_dims(oracle, kind);
  const attacks::AttackConfig* attack = spec.attack ? &*spec.attack : nullptr;
  const long total = static_cast<long>(spec.seeds.size()) * spec.episodes;
  std::vector<double> returns(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(dynamic) if (spec.parallel)
  for (long i = 0; i < total; ++i) {
    const std::size_t si = static_cast<std::size_t>(i) / spec.episodes;
    const std::uint64_t ei = static_cast<std::uint64_t>(i) % spec.episodes;
    const std::uint64_t stream = derive_seed(spec.seeds[si], {stream_salt, ei});
    returns[static_cast<std::size_t>(i)] = rollout_episode(oracle, kind, params, attack, stream);
  }
  return aggregate(spec, std::move(returns));
}

EvalResult evaluate_serial(const agents::AgentOracle& oracle, env::EnvKind kind,
                           const env::EnvParams& params, const EvalSpec& spec,
                           std::uint64_t stream_salt) {
  check_spec(spec);
  check_dims(oracle, kind);
  const attacks::AttackConfig* attack = spec.attack ? &*spec.attack : nullptr;
  std::vector<double> returns;
  returns.reserve(spec.seeds.size() * static_cast<std::size_t>(spec.episodes));
  for (std::size_t si = 0; si < spec.seeds.size(); ++si) {
    for (int ei = 0; ei < spec.episodes; ++ei) {
      const std::uint64_t stream =
          derive_seed(spec.seeds[si], {stream_salt, static_cast<std::uint64_t>(ei)});
      returns.push_back(rollout_episode(oracle, kind, params, attack, stream));
    }
  }
  return aggregate(spec, std::move(returns));
}

double SweepResult::normalized(std::size_t idx) const {
  if (baseline_return == 0.0) throw NumericError("normalized return undefined: zero baseline");
  return cells[idx].mean_return / baseline_return;
}

SweepResult sweep_attack_magnitude(const agents::AgentOracle& oracle, env::EnvKind kind,
                                   const env::EnvParams& params,
                                   const std::vector<attacks::AttackKind>& kinds,
                                   const std::vector<double>& epsilons,
                                   const attacks::AttackConfig& base_attack,
                                   const EvalSpec& spec) {
  if (kinds.empty()) throw ContractError("sweep_attack_magnitude: no attack kinds");
  if (epsilons.empty() || epsilons.front() != 0.0 ||
      !std::is_sorted(epsilons.begin(), epsilons.end())) {
    throw ContractError("sweep_attack_magnitude: epsilons must be ascending and start at 0");
  }

  SweepResult result;
  result.axes.push_back({"kind", {}});
  for (attacks::AttackKind k : kinds) result.axes[0].labels.push_back(attack_kind_name(k));
  result.axes.push_back({"epsilon", {}});
  for (double e : epsilons) result.axes[1].labels.push_back(fmt17(e));

  const std::size_t n_eps = epsilons.size();
  result.cells.resize(kinds.size() * n_eps);

  // epsilon = 0 is the unattacked evaluation, identical for every kind; run it
  // once so all kinds share the exact normalization anchor. Every cell uses
  // the same episode streams, making cross-cell comparisons paired.
  EvalSpec cell_spec = spec;
  cell_spec.attack.reset();
  const EvalResult baseline = evaluate(oracle, kind, params, cell_spec);
  result.baseline_return = baseline.mean;

  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    for (std::size_t ei = 0; ei < n_eps; ++ei) {
      const std::size_t idx = ki * n_eps + ei;
      EvalResult r;
      if (ei == 0) {
        r = baseline;
      } else {
        attacks::AttackConfig atk = base_attack;
        atk.kind = kinds[ki];
        atk.epsilon = epsilons[ei];
        EvalSpec s = spec;
        s.attack = atk;
        r = evaluate(oracle, kind, params, s);
      }
      result.cells[idx] = {r.mean, r.stddev, r.per_seed_means,
                           static_cast<long>(r.per_episode_returns.size())};
    }
  }
  return result;
}

double* env_param_ptr(env::EnvParams& p, const std::string& path) {
  if (path == "cartpole.cart_mass") return &p.cartpole.cart_mass;
  if (path == "cartpole.pole_mass") return &p.cartpole.pole_mass;
  if (path == "cartpole.pole_length") return &p.cartpole.pole_length;
  if (path == "cartpole.gravity") return &p.cartpole.gravity;
  if (path == "cartpole.force_mag") return &p.cartpole.force_mag;
  if (path == "cartpole.dt") return &p.cartpole.dt;
  if (path == "mountain_car.power") return &p.mountain_car.power;
  if (path == "mountain_car.gravity_scale") return &p.mountain_car.gravity_scale;
  if (path == "pendulum.mass") return &p.pendulum.mass;
  if (path == "pendulum.length") return &p.pendulum.length;
  if (path == "pendulum.max_torque") return &p.pendulum.max_torque;
  if (path == "pendulum.dt") return &p.pendulum.dt;
  throw ConfigError("unknown environment parameter: " + path);
}

std::vector<std::string> env_param_paths() {
  return {"cartpole.cart_mass",  "cartpole.pole_mass",        "cartpole.pole_length",
          "cartpole.gravity",    "cartpole.force_mag",        "cartpole.dt",
          "mountain_car.power",  "mountain_car.gravity_scale", "pendulum.mass",
          "pendulum.length",     "pendulum.max_torque",       "pendulum.dt"};
}

namespace {

GridAxis axis_around_default(const std::string& param, double default_value, int points = 9,
                             double span = 0.5) {
  GridAxis axis;
  axis.param = param;
  for (int i = 0; i < points; ++i) {
    const double f = 1.0 - span + 2.0 * span * i / (points - 1);
    axis.values.push_back(default_value * f);
  }
  return axis;
}

}  // namespace

GridSpec default_grid(env::EnvKind kind) {
  env::EnvParams d = env::default_params(kind);
  GridSpec grid;
  switch (kind) {
    case env::EnvKind::cartpole:
      grid.axes.push_back(axis_around_default("cartpole.cart_mass", d.cartpole.cart_mass));
      grid.axes.push_back(axis_around_default("cartpole.pole_length", d.cartpole.pole_length));
      break;
    case env::EnvKind::mountain_car:
    case env::EnvKind::mountain_car_continuous:
      grid.axes.push_back(axis_around_default("mountain_car.power", d.mountain_car.power));
      grid.axes.push_back(
          axis_around_default("mountain_car.gravity_scale", d.mountain_car.gravity_scale));
      break;
    case env::EnvKind::pendulum:
      grid.axes.push_back(axis_around_default("pendulum.mass", d.pendulum.mass));
      grid.axes.push_back(axis_around_default("pendulum.length", d.pendulum.length));
      break;
  }
  return grid;
}

SweepResult sweep_params_grid(const agents::AgentOracle& oracle, env::EnvKind kind,
                              const env::EnvParams& base_params, const GridSpec& grid,
                              const EvalSpec& spec) {
  if (grid.axes.empty()) throw ContractError("sweep_params_grid: no axes");
  for (const GridAxis& axis : grid.axes) {
    if (axis.values.empty()) throw ContractError("sweep_params_grid: empty axis");
    for (double v : axis.values) {
      if (!(v > 0.0)) throw ContractError("sweep_params_grid: parameter values must be positive");
    }
  }

  SweepResult result;
  std::size_t n_cells = 1;
  for (const GridAxis& axis : grid.axes) {
    SweepAxis sa;
    sa.name = axis.param;
    for (double v : axis.values) sa.labels.push_back(fmt17(v));
    result.axes.push_back(std::move(sa));
    n_cells *= axis.values.size();
  }
  result.cells.resize(n_cells);

  EvalSpec cell_spec = spec;
  cell_spec.attack.reset();  // grid sweeps are unattacked

  // Baseline: the default-parameter evaluation, on the same episode streams
  // as the grid cells.
  const EvalResult baseline = evaluate(oracle, kind, base_params, cell_spec);
  result.baseline_return = baseline.mean;

  std::vector<std::size_t> idx(grid.axes.size(), 0);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    env::EnvParams params = base_params;
    for (std::size_t ax = 0; ax < grid.axes.size(); ++ax) {
      *env_param_ptr(params, grid.axes[ax].param) = grid.axes[ax].values[idx[ax]];
    }
    const EvalResult r = evaluate(oracle, kind, params, cell_spec);
    result.cells[cell] = {r.mean, r.stddev, r.per_seed_means,
                          static_cast<long>(r.per_episode_returns.size())};
    for (int ax = static_cast<int>(grid.axes.size()) - 1; ax >= 0; --ax) {
      if (++idx[ax] < grid.axes[ax].values.size()) break;
      idx[ax] = 0;
    }
  }
  return result;
}

CvarResult cvar_statistic(std::span<const double> returns, double alpha) {
  if (returns.empty()) throw ContractError("cvar_statistic: empty return list");
  if (!(alpha > 0.0) || alpha > 1.0) throw ContractError("cvar_statistic: alpha must be in (0,1]");
  std::vector<double> sorted(returns.begin(), returns.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::size_t k = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
  k = std::min(std::max<std::size_t>(k, 1), n);
  CvarResult out;
  out.threshold_beta = sorted[k - 1];
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : sorted) {
    if (v <= out.threshold_beta) {
      sum += v;
      ++count;
    } else {
      break;
    }
  }
  out.cvar = sum / static_cast<double>(count);
  return out;
}

void write_results_csv(const SweepResult& result, const std::string& path) {
  if (result.axes.empty()) throw ContractError("write_results_csv: result has no axes");
  std::size_t expected = 1;
  for (const SweepAxis& a : result.axes) {
    if (a.labels.empty()) throw ContractError("write_results_csv: axis with no values");
    expected *= a.labels.size();
  }
  if (expected != result.cells.size()) {
    throw ContractError("write_results_csv: cell count does not match axes");
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const SweepAxis& a : result.axes) out << a.name << ',';
  out << "mean,std,n\n";

  std::vector<std::size_t> idx(result.axes.size(), 0);
  for (std::size_t cell = 0; cell < result.cells.size(); ++cell) {
    for (std::size_t ax = 0; ax < result.axes.size(); ++ax) {
      out << result.axes[ax].labels[idx[ax]] << ',';
    }
    const SweepCell& c = result.cells[cell];
    out << fmt17(c.mean_return) << ',' << fmt17(c.std_return) << ',' << c.n << '\n';
    for (int ax = static_cast<int>(result.axes.size()) - 1; ax >= 0; --ax) {
      if (++idx[ax] < result.axes[ax].labels.size()) break;
      idx[ax] = 0;
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

// --- checkpoints -------------------------------------------------------------

namespace {

using nlohmann::json;

json env_params_json(const env::EnvParams& p) {
  return json{{"cartpole",
               {{"cart_mass", p.cartpole.cart_mass},
                {"pole_mass", p.cartpole.pole_mass},
                {"pole_length", p.cartpole.pole_length},
                {"gravity", p.cartpole.gravity},
                {"force_mag", p.cartpole.force_mag},
                {"dt", p.cartpole.dt}}},
              {"mountain_car",
               {{"power", p.mountain_car.power},
                {"gravity_scale", p.mountain_car.gravity_scale}}},
              {"pendulum",
               {{"mass", p.pendulum.mass},
                {"length", p.pendulum.length},
                {"max_torque", p.pendulum.max_torque},
                {"dt", p.pendulum.dt}}}};
}

env::EnvParams env_params_from_json(const json& j) {
  env::EnvParams p;
  p.cartpole.cart_mass = j.at("cartpole").at("cart_mass").get<double>();
  p.cartpole.pole_mass = j.at("cartpole").at("pole_mass").get<double>();
  p.cartpole.pole_length = j.at("cartpole").at("pole_length").get<double>();
  p.cartpole.gravity = j.at("cartpole").at("gravity").get<double>();
  p.cartpole.force_mag = j.at("cartpole").at("force_mag").get<double>();
  p.cartpole.dt = j.at("cartpole").at("dt").get<double>();
  p.mountain_car.power = j.at("mountain_car").at("power").get<double>();
  p.mountain_car.gravity_scale = j.at("mountain_car").at("gravity_scale").get<double>();
  p.pendulum.mass = j.at("pendulum").at("mass").get<double>();
  p.pendulum.length = j.at("pendulum").at("length").get<double>();
  p.pendulum.max_torque = j.at("pendulum").at("max_torque").get<double>();
  p.pendulum.dt = j.at("pendulum").at("dt").get<double>();
  return p;
}

void write_sidecar(const json& j, const std::string& prefix) {
  std::ofstream out(prefix + ".json");
  if (!out) throw IoError("cannot open for writing: " + prefix + ".json");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + prefix + ".json");
}

json read_sidecar(const std::string& prefix) {
  std::ifstream in(prefix + ".json");
  if (!in) throw IoError("cannot open for reading: " + prefix + ".json");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw IoError("checkpoint sidecar parse error in " + prefix + ".json: " + e.what());
  }
}

}  // namespace

void save_agent(const agents::DdqnAgent& agent, env::EnvKind env_kind,
                const env::EnvParams& env_params, const std::string& prefix) {
  nn::save_net(agent.online(), prefix + ".online.net");
  nn::save_net(agent.target(), prefix + ".target.net");
  const agents::DdqnConfig& c = agent.config();
  json j{{"agent", "ddqn"},
         {"env", env::env_kind_name(env_kind)},
         {"env_params", env_params_json(env_params)},
         {"hidden", c.hidden},
         {"gamma", c.gamma},
         {"lr", c.lr},
         {"tau", c.tau},
         {"hard_sync", c.hard_sync},
         {"sync_period", c.sync_period},
         {"buffer_capacity", c.buffer_capacity},
         {"batch_size", c.batch_size},
         {"warmup_steps", c.warmup_steps},
         {"warmup_hold", c.warmup_hold},
         {"eps_start", c.eps.start},
         {"eps_end", c.eps.end},
         {"eps_anneal_steps", c.eps.anneal_steps},
         {"schedule_step", agent.schedule_step}};
  write_sidecar(j, prefix);
}

void save_agent(const agents::DdpgAgent& agent, env::EnvKind env_kind,
                const env::EnvParams& env_params, const std::string& prefix) {
  nn::save_net(agent.actor(), prefix + ".actor.net");
  nn::save_net(agent.critic(), prefix + ".critic.net");
  nn::save_net(agent.target_actor(), prefix + ".actor_t.net");
  nn::save_net(agent.target_critic(), prefix + ".critic_t.net");
  const agents::DdpgConfig& c = agent.config();
  json j{{"agent", "ddpg"},
         {"env", env::env_kind_name(env_kind)},
         {"env_params", env_params_json(env_params)},
         {"hidden", c.hidden},
         {"gamma", c.gamma},
         {"critic_lr", c.critic_lr},
         {"actor_lr", c.actor_lr},
         {"tau", c.tau},
         {"buffer_capacity", c.buffer_capacity},
         {"batch_size", c.batch_size},
         {"warmup_steps", c.warmup_steps},
         {"warmup_hold", c.warmup_hold},
         {"noise_scale_frac", c.noise_scale_frac},
         {"action_bound", agent.action_bound()},
         {"schedule_step", agent.schedule_step}};
  write_sidecar(j, prefix);
}

void save_agent(const agents::RbfAgent& agent, env::EnvKind env_kind,
                const env::EnvParams& env_params, const std::string& prefix) {
  rbf::save_rbf(agent.net(), prefix + ".rbf");
  const agents::RbfAgentConfig& c = agent.config();
  json j{{"agent", "rbf"},
         {"env", env::env_kind_name(env_kind)},
         {"env_params", env_params_json(env_params)},
         {"bins", c.bins},
         {"gamma", c.gamma},
         {"lr", c.lr},
         {"eps_start", c.eps.start},
         {"eps_end", c.eps.end},
         {"eps_anneal_steps", c.eps.anneal_steps},
         {"schedule_step", agent.schedule_step}};
  write_sidecar(j, prefix);
}

std::unique_ptr<agents::AgentOracle> LoadedAgent::make_oracle() const {
  if (kind == "ddqn") return std::make_unique<agents::DdqnOracle>(*ddqn);
  if (kind == "ddpg") return std::make_unique<agents::DdpgOracle>(*ddpg);
  if (kind == "rbf") return std::make_unique<agents::RbfOracle>(rbf->net());
  throw IoError("checkpoint sidecar names unknown agent kind: " + kind);
}

LoadedAgent load_agent(const std::string& prefix) {
  const json j = read_sidecar(prefix);
  LoadedAgent out;
  try {
    out.kind = j.at("agent").get<std::string>();
    out.env_kind = env::env_kind_from_name(j.at("env").get<std::string>());
    out.env_params = env_params_from_json(j.at("env_params"));
    if (out.kind == "ddqn") {
      agents::DdqnConfig c;
      c.hidden = j.at("hidden").get<std::vector<int>>();
      c.gamma = j.at("gamma").get<double>();
      c.lr = j.at("lr").get<double>();
      c.tau = j.at("tau").get<double>();
      c.hard_sync = j.at("hard_sync").get<bool>();
      c.sync_period = j.at("sync_period").get<long>();
      c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
      c.batch_size = j.at("batch_size").get<int>();
      c.warmup_steps = j.at("warmup_steps").get<long>();
      c.warmup_hold = j.at("warmup_hold").get<int>();
      c.eps.start = j.at("eps_start").get<double>();
      c.eps.end = j.at("eps_end").get<double>();
      c.eps.anneal_steps = j.at("eps_anneal_steps").get<long>();
      out.ddqn = std::make_unique<agents::DdqnAgent>(nn::load_net(prefix + ".online.net"),
                                                     nn::load_net(prefix + ".target.net"), c);
      out.ddqn->schedule_step = j.at("schedule_step").get<long>();
    } else if (out.kind == "ddpg") {
      agents::DdpgConfig c;
      c.hidden = j.at("hidden").get<std::vector<int>>();
      c.gamma = j.at("gamma").get<double>();
      c.critic_lr = j.at("critic_lr").get<double>();
      c.actor_lr = j.at("actor_lr").get<double>();
      c.tau = j.at("tau").get<double>();
      c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
      c.batch_size = j.at("batch_size").get<int>();
      c.warmup_steps = j.at("warmup_steps").get<long>();
      c.warmup_hold = j.at("warmup_hold").get<int>();
      c.noise_scale_frac = j.at("noise_scale_frac").get<double>();
      out.ddpg = std::make_unique<agents::DdpgAgent>(
          nn::load_net(prefix + ".actor.net"), nn::load_net(prefix + ".critic.net"),
          nn::load_net(prefix + ".actor_t.net"), nn::load_net(prefix + ".critic_t.net"),
          j.at("action_bound").get<double>(), c);
      out.ddpg->schedule_step = j.at("schedule_step").get<long>();
    } else if (out.kind == "rbf") {
      agents::RbfAgentConfig c;
      c.bins = j.at("bins").get<int>();
      c.gamma = j.at("gamma").get<double>();
      c.lr = j.at("lr").get<double>();
      c.eps.start = j.at("eps_start").get<double>();
      c.eps.end = j.at("eps_end").get<double>();
      c.eps.anneal_steps = j.at("eps_anneal_steps").get<long>();
      out.rbf = std::make_unique<agents::RbfAgent>(rbf::load_rbf(prefix + ".rbf"), c);
      out.rbf->schedule_step = j.at("schedule_step").get<long>();
    } else {
      throw IoError("checkpoint sidecar names unknown agent kind: " + out.kind);
    }
  } catch (const json::exception& e) {
    throw IoError("checkpoint sidecar " + prefix + ".json is missing fields: " + e.what());
  }
  return out;
}

}  // namespace rrl::harness
