// Command-line front end: train agents, retrain them adversarially, evaluate
// under attack, and run the attack-magnitude and parameter-grid sweeps.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "rrl/config.hpp"
#include "rrl/env.hpp"
#include "rrl/errors.hpp"
#include "rrl/harness.hpp"
#include "rrl/robust.hpp"
#include "rrl/train.hpp"

namespace {

using namespace rrl;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = {
        "env.kind",
        "agent.kind",        "agent.hidden",         "agent.gamma",
        "agent.lr",          "agent.critic_lr",      "agent.actor_lr",
        "agent.tau",         "agent.hard_sync",      "agent.sync_period",
        "agent.batch_size",  "agent.buffer_capacity","agent.warmup_steps",
        "agent.warmup_hold", "agent.noise_scale_frac",
        "agent.eps_start",   "agent.eps_end",        "agent.eps_anneal_steps",
        "rbf.bins",          "rbf.lr",
        "train.steps",
        "attack.kind",       "attack.epsilon",       "attack.n_samples",
        "attack.alpha",      "attack.beta",          "attack.sgd_step",
        "adv.retrain_steps", "adv.attack_period",    "adv.store_true_state",
        "eval.episodes",     "eval.seeds",           "eval.parallel",
        "sweep.kinds",       "sweep.epsilons",
        "sweep.axis1.param", "sweep.axis1.values",
        "sweep.axis2.param", "sweep.axis2.values",
    };
    for (const auto& p : harness::env_param_paths()) k.insert("env." + p);
    return k;
  }();
  return keys;
}

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string ckpt;
  std::vector<std::string> overrides;
};

config::Config load_config(const CommonArgs& args) {
  config::Config cfg;
  if (!args.config_path.empty()) cfg = config::Config::parse_file(args.config_path);
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate_known(known_keys());
  return cfg;
}

env::EnvKind env_kind_of(const config::Config& cfg, const std::string& fallback) {
  return env::env_kind_from_name(cfg.get_string("env.kind", fallback));
}

env::EnvParams env_params_of(const config::Config& cfg, env::EnvKind kind,
                             const env::EnvParams* base = nullptr) {
  env::EnvParams params = base ? *base : env::default_params(kind);
  for (const auto& path : harness::env_param_paths()) {
    const std::string key = "env." + path;
    if (cfg.has(key)) *harness::env_param_ptr(params, path) = cfg.get_double(key, 0.0);
  }
  return params;
}

// Per-environment training defaults; config keys override any of them.
struct TrainDefaults {
  std::vector<int> hidden;
  long steps = 0;
  double lr = 1e-3;
  int rbf_bins = 3;
  double rbf_lr = 1e-3;
  long warmup = 1000;
};

TrainDefaults train_defaults(env::EnvKind kind) {
  switch (kind) {
    case env::EnvKind::cartpole: return {{16, 16, 16}, 50000, 1e-3, 3, 1e-3, 1000};
    case env::EnvKind::mountain_car: return {{100, 100}, 40000, 1e-3, 4, 1e-2, 1000};
    case env::EnvKind::pendulum: return {{64, 64}, 30000, 1e-3, 3, 1e-3, 1000};
    case env::EnvKind::mountain_car_continuous: return {{64, 64}, 30000, 1e-3, 3, 1e-3, 5000};
  }
  return {};
}

long rbf_default_steps(env::EnvKind kind) {
  return kind == env::EnvKind::mountain_car ? 60000 : 40000;
}

agents::EpsSchedule eps_schedule(const config::Config& cfg, long steps) {
  agents::EpsSchedule eps;
  eps.start = cfg.get_double("agent.eps_start", 1.0);
  eps.end = cfg.get_double("agent.eps_end", 0.05);
  eps.anneal_steps = cfg.get_long("agent.eps_anneal_steps", steps / 10);
  return eps;
}

agents::DdqnConfig ddqn_config(const config::Config& cfg, const TrainDefaults& d, long steps) {
  agents::DdqnConfig c;
  c.hidden = cfg.get_int_list("agent.hidden", d.hidden);
  c.gamma = cfg.get_double("agent.gamma", 0.99);
  c.lr = cfg.get_double("agent.lr", d.lr);
  c.tau = cfg.get_double("agent.tau", 0.01);
  c.hard_sync = cfg.get_bool("agent.hard_sync", false);
  c.sync_period = cfg.get_long("agent.sync_period", 100);
  c.buffer_capacity = static_cast<std::size_t>(cfg.get_long("agent.buffer_capacity", 50000));
  c.batch_size = static_cast<int>(cfg.get_long("agent.batch_size", 64));
  c.warmup_steps = cfg.get_long("agent.warmup_steps", d.warmup);
  c.warmup_hold = static_cast<int>(cfg.get_long("agent.warmup_hold", 40));
  c.eps = eps_schedule(cfg, steps);
  return c;
}

agents::DdpgConfig ddpg_config(const config::Config& cfg, const TrainDefaults& d) {
  agents::DdpgConfig c;
  c.hidden = cfg.get_int_list("agent.hidden", d.hidden);
  c.gamma = cfg.get_double("agent.gamma", 0.99);
  c.critic_lr = cfg.get_double("agent.critic_lr", 1e-3);
  c.actor_lr = cfg.get_double("agent.actor_lr", 1e-4);
  c.tau = cfg.get_double("agent.tau", 0.01);
  c.buffer_capacity = static_cast<std::size_t>(cfg.get_long("agent.buffer_capacity", 50000));
  c.batch_size = static_cast<int>(cfg.get_long("agent.batch_size", 64));
  c.warmup_steps = cfg.get_long("agent.warmup_steps", d.warmup);
  c.warmup_hold = static_cast<int>(cfg.get_long("agent.warmup_hold", 40));
  c.noise_scale_frac = cfg.get_double("agent.noise_scale_frac", 0.1);
  return c;
}

attacks::AttackConfig attack_config(const config::Config& cfg) {
  attacks::AttackConfig a;
  a.kind = attacks::attack_kind_from_name(cfg.get_string("attack.kind", "gradient"));
  a.epsilon = cfg.get_double("attack.epsilon", 0.0);
  a.n_samples = static_cast<int>(cfg.get_long("attack.n_samples", 200));
  a.alpha_b = cfg.get_double("attack.alpha", 1.0);
  a.beta_b = cfg.get_double("attack.beta", 1.0);
  a.sgd_step = cfg.get_double("attack.sgd_step", 0.01);
  return a;
}

std::vector<std::uint64_t> eval_seeds(const config::Config& cfg, std::uint64_t master) {
  if (cfg.has("eval.seeds")) {
    std::vector<std::uint64_t> out;
    for (double v : cfg.get_double_list("eval.seeds", {})) {
      out.push_back(static_cast<std::uint64_t>(v));
    }
    return out;
  }
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 0; i < 4; ++i) out.push_back(derive_seed(master, {100, i}));
  return out;
}

harness::EvalSpec eval_spec(const config::Config& cfg, std::uint64_t master) {
  harness::EvalSpec spec;
  spec.episodes = static_cast<int>(cfg.get_long("eval.episodes", 100));
  spec.seeds = eval_seeds(cfg, master);
  spec.parallel = cfg.get_bool("eval.parallel", true);
  return spec;
}

void write_returns_csv(const std::vector<double>& returns, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "episode,return\n";
  char buf[64];
  for (std::size_t i = 0; i < returns.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", returns[i]);
    out << i << ',' << buf << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out_dir);
  return (std::filesystem::path(args.out_dir) / name).string();
}

double tail_mean(const std::vector<double>& v, std::size_t k) {
  if (v.empty()) return 0.0;
  const std::size_t n = std::min(k, v.size());
  double s = 0;
  for (std::size_t i = v.size() - n; i < v.size(); ++i) s += v[i];
  return s / static_cast<double>(n);
}

int cmd_train(const CommonArgs& args) {
  const auto cfg = load_config(args);
  const env::EnvKind kind = env_kind_of(cfg, "cartpole");
  const env::EnvParams params = env_params_of(cfg, kind);
  const std::string agent_kind =
      cfg.get_string("agent.kind", env::discrete_actions(kind) ? "ddqn" : "ddpg");
  const TrainDefaults d = train_defaults(kind);

  env::EnvInstance e(kind, params);
  RngHandle init_rng(derive_seed(args.seed, {0}));
  RngHandle train_rng(derive_seed(args.seed, {1}));
  train::TrainLog log;

  if (agent_kind == "ddqn") {
    if (!e.discrete_actions()) throw ConfigError("agent.kind=ddqn needs a discrete environment");
    const long steps = cfg.get_long("train.steps", d.steps);
    agents::DdqnAgent agent(e.obs_dim(), e.num_actions(), ddqn_config(cfg, d, steps), init_rng);
    log = train::train_vanilla(agent, e, steps, train_rng);
    harness::save_agent(agent, kind, params, out_path(args, "agent"));
  } else if (agent_kind == "ddpg") {
    if (e.discrete_actions()) throw ConfigError("agent.kind=ddpg needs a continuous environment");
    const long steps = cfg.get_long("train.steps", d.steps);
    agents::DdpgAgent agent(e.obs_dim(), 1, e.action_bound(), ddpg_config(cfg, d), init_rng);
    log = train::train_vanilla(agent, e, steps, train_rng);
    harness::save_agent(agent, kind, params, out_path(args, "agent"));
  } else if (agent_kind == "rbf") {
    if (!e.discrete_actions()) throw ConfigError("agent.kind=rbf needs a discrete environment");
    const long steps = cfg.get_long("train.steps", rbf_default_steps(kind));
    agents::RbfAgentConfig rc;
    rc.bins = static_cast<int>(cfg.get_long("rbf.bins", d.rbf_bins));
    rc.gamma = cfg.get_double("agent.gamma", 0.99);
    rc.lr = cfg.get_double("rbf.lr", d.rbf_lr);
    rc.eps = eps_schedule(cfg, steps);
    agents::RbfAgent agent(e.obs_dim(), e.num_actions(), rc);
    log = train::train_vanilla(agent, e, steps, train_rng);
    harness::save_agent(agent, kind, params, out_path(args, "agent"));
  } else {
    throw ConfigError("unknown agent.kind: " + agent_kind);
  }

  write_returns_csv(log.episode_returns, out_path(args, "train_returns.csv"));
  std::printf("trained %s on %s: %zu episodes over %ld steps, last-50 mean return %.2f\n",
              agent_kind.c_str(), env::env_kind_name(kind), log.episode_returns.size(),
              log.env_steps, tail_mean(log.episode_returns, 50));
  std::printf("checkpoint: %s\n", out_path(args, "agent").c_str());
  return 0;
}

int cmd_adv_train(const CommonArgs& args) {
  const auto cfg = load_config(args);
  auto loaded = harness::load_agent(args.ckpt);
  const env::EnvKind kind = loaded.env_kind;
  const env::EnvParams params = env_params_of(cfg, kind, &loaded.env_params);

  robust::AdvTrainConfig acfg;
  acfg.attack = attack_config(cfg);
  if (!cfg.has("attack.epsilon")) {
    acfg.attack.epsilon = kind == env::EnvKind::mountain_car_continuous ? 0.05 : 0.03;
  }
  acfg.attack.kind = attacks::AttackKind::gradient;
  acfg.retrain_steps = cfg.get_long("adv.retrain_steps", train_defaults(kind).steps);
  acfg.attack_period = cfg.get_long("adv.attack_period", 1);
  acfg.store_true_state = cfg.get_bool("adv.store_true_state", false);

  env::EnvInstance e(kind, params);
  RngHandle train_rng(derive_seed(args.seed, {2}));
  RngHandle attack_rng(derive_seed(args.seed, {3}));
  train::TrainLog log;
  if (loaded.kind == "ddqn") {
    log = robust::adv_train(*loaded.ddqn, e, acfg, train_rng, attack_rng);
    harness::save_agent(*loaded.ddqn, kind, params, out_path(args, "agent"));
  } else if (loaded.kind == "ddpg") {
    log = robust::adv_train(*loaded.ddpg, e, acfg, train_rng, attack_rng);
    harness::save_agent(*loaded.ddpg, kind, params, out_path(args, "agent"));
  } else {
    throw ConfigError("adv-train supports ddqn and ddpg checkpoints, got " + loaded.kind);
  }

  write_returns_csv(log.episode_returns, out_path(args, "retrain_returns.csv"));
  std::printf("adversarially retrained %s on %s: eps=%g n=%d period=%ld, %zu episodes, "
              "last-50 mean return %.2f\n",
              loaded.kind.c_str(), env::env_kind_name(kind), acfg.attack.epsilon,
              acfg.attack.n_samples, acfg.attack_period, log.episode_returns.size(),
              tail_mean(log.episode_returns, 50));
  std::printf("checkpoint: %s\n", out_path(args, "agent").c_str());
  return 0;
}

int cmd_attack_eval(const CommonArgs& args) {
  const auto cfg = load_config(args);
  auto loaded = harness::load_agent(args.ckpt);
  const env::EnvKind kind = loaded.env_kind;
  const env::EnvParams params = env_params_of(cfg, kind, &loaded.env_params);
  auto oracle = loaded.make_oracle();

  harness::EvalSpec spec = eval_spec(cfg, args.seed);
  const attacks::AttackConfig atk = attack_config(cfg);
  if (atk.epsilon > 0.0) spec.attack = atk;

  const auto res = harness::evaluate(*oracle, kind, params, spec);
  write_returns_csv(res.per_episode_returns, out_path(args, "eval_returns.csv"));
  const auto cvar10 = harness::cvar_statistic(res.per_episode_returns, 0.1);
  const auto cvar25 = harness::cvar_statistic(res.per_episode_returns, 0.25);
  if (spec.attack) {
    std::printf("attacked evaluation (%s, eps=%g, n=%d):\n",
                attacks::attack_kind_name(atk.kind), atk.epsilon, atk.n_samples);
  } else {
    std::printf("unattacked evaluation:\n");
  }
  std::printf("  mean %.3f  std %.3f  episodes %zu\n", res.mean, res.stddev,
              res.per_episode_returns.size());
  std::printf("  cvar(0.10) %.3f  cvar(0.25) %.3f\n", cvar10.cvar, cvar25.cvar);
  return 0;
}

int cmd_sweep_attack(const CommonArgs& args) {
  const auto cfg = load_config(args);
  auto loaded = harness::load_agent(args.ckpt);
  const env::EnvKind kind = loaded.env_kind;
  const env::EnvParams params = env_params_of(cfg, kind, &loaded.env_params);
  auto oracle = loaded.make_oracle();

  const std::vector<std::string> kind_names = cfg.get_string_list(
      "sweep.kinds", oracle->is_discrete()
                         ? std::vector<std::string>{"naive", "gradient", "sgd", "hfsgm"}
                         : std::vector<std::string>{"naive", "gradient", "sgd"});
  std::vector<attacks::AttackKind> kinds;
  for (const auto& n : kind_names) kinds.push_back(attacks::attack_kind_from_name(n));
  const std::vector<double> epsilons =
      cfg.get_double_list("sweep.epsilons", {0.0, 0.02, 0.05, 0.1});

  const auto res = harness::sweep_attack_magnitude(*oracle, kind, params, kinds, epsilons,
                                                   attack_config(cfg), eval_spec(cfg, args.seed));
  harness::write_results_csv(res, out_path(args, "sweep_attack.csv"));

  std::printf("normalized return (baseline %.3f):\n%10s", res.baseline_return, "");
  for (double e : epsilons) std::printf(" eps=%-7.3g", e);
  std::printf("\n");
  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    std::printf("%10s", attacks::attack_kind_name(kinds[ki]));
    for (std::size_t ei = 0; ei < epsilons.size(); ++ei) {
      std::printf(" %-11.3f", res.normalized(ki * epsilons.size() + ei));
    }
    std::printf("\n");
  }
  std::printf("csv: %s\n", out_path(args, "sweep_attack.csv").c_str());
  return 0;
}

int cmd_sweep_grid(const CommonArgs& args) {
  const auto cfg = load_config(args);
  auto loaded = harness::load_agent(args.ckpt);
  const env::EnvKind kind = loaded.env_kind;
  const env::EnvParams params = env_params_of(cfg, kind, &loaded.env_params);
  auto oracle = loaded.make_oracle();

  harness::GridSpec grid;
  for (const char* axis : {"sweep.axis1", "sweep.axis2"}) {
    const std::string pkey = std::string(axis) + ".param";
    if (!cfg.has(pkey)) continue;
    harness::GridAxis ga;
    ga.param = cfg.get_string(pkey, "");
    ga.values = cfg.get_double_list(std::string(axis) + ".values", {});
    grid.axes.push_back(std::move(ga));
  }
  if (grid.axes.empty()) grid = harness::default_grid(kind);

  const auto res =
      harness::sweep_params_grid(*oracle, kind, params, grid, eval_spec(cfg, args.seed));
  harness::write_results_csv(res, out_path(args, "sweep_grid.csv"));

  double grid_mean = 0;
  for (const auto& c : res.cells) grid_mean += c.mean_return;
  grid_mean /= static_cast<double>(res.cells.size());
  std::printf("grid sweep over");
  for (const auto& a : res.axes) std::printf(" %s[%zu]", a.name.c_str(), a.labels.size());
  std::printf(": default-point mean %.3f, grid mean %.3f\n", res.baseline_return, grid_mean);
  std::printf("csv: %s\n", out_path(args, "sweep_grid.csv").c_str());
  return 0;
}

int cmd_report(const std::string& csv_path, double alpha) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open for reading: " + csv_path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty csv: " + csv_path);
  std::printf("%s\n", header.c_str());
  std::vector<double> means;
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::printf("%s\n", line.c_str());
    ++rows;
    std::vector<std::size_t> commas;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == ',') commas.push_back(i);
    }
    if (commas.size() >= 3) {
      // mean sits between the third- and second-last commas
      const std::size_t a = commas[commas.size() - 3] + 1;
      const std::size_t b = commas[commas.size() - 2];
      means.push_back(std::stod(line.substr(a, b - a)));
    }
  }
  if (!means.empty()) {
    double sum = 0;
    for (double m : means) sum += m;
    const auto cv = harness::cvar_statistic(means, alpha);
    std::printf("rows %d, mean-of-means %.3f, cvar(%.2f) over cells %.3f\n", rows,
                sum / static_cast<double>(means.size()), alpha, cv.cvar);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial-robustness laboratory for value-based RL agents"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string report_csv;
  double report_alpha = 0.2;

  auto add_common = [&](CLI::App* cmd, bool needs_ckpt) {
    cmd->add_option("--config", args.config_path, "key = value config file");
    cmd->add_option("--seed", args.seed, "master seed")->required();
    cmd->add_option("--out-dir", args.out_dir, "output directory")->required();
    cmd->add_option("--set", args.overrides, "override: section.key=value")->take_all();
    if (needs_ckpt) {
      cmd->add_option("--ckpt", args.ckpt, "checkpoint prefix to load")->required();
    }
  };

  auto* train = app.add_subcommand("train", "train a vanilla agent");
  add_common(train, false);
  auto* adv = app.add_subcommand("adv-train", "adversarially retrain a checkpoint");
  add_common(adv, true);
  auto* aeval = app.add_subcommand("attack-eval", "evaluate a checkpoint, optionally under attack");
  add_common(aeval, true);
  auto* satk = app.add_subcommand("sweep-attack", "attack-magnitude sweep");
  add_common(satk, true);
  auto* sgrid = app.add_subcommand("sweep-grid", "physics-parameter grid sweep");
  add_common(sgrid, true);
  auto* report = app.add_subcommand("report", "pretty-print a results csv");
  report->add_option("--csv", report_csv, "results csv path")->required();
  report->add_option("--alpha", report_alpha, "cvar percentile");

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(args);
    if (adv->parsed()) return cmd_adv_train(args);
    if (aeval->parsed()) return cmd_attack_eval(args);
    if (satk->parsed()) return cmd_sweep_attack(args);
    if (sgrid->parsed()) return cmd_sweep_grid(args);
    if (report->parsed()) return cmd_report(report_csv, report_alpha);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const rrl::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const rrl::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const rrl::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
