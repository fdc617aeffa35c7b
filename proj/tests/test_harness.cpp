#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rrl/config.hpp"
#include "rrl/errors.hpp"
#include "rrl/harness.hpp"
#include "support/toy_oracles.hpp"

using namespace rrl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

agents::DdqnAgent small_cartpole_agent(std::uint64_t seed) {
  agents::DdqnConfig cfg;
  cfg.hidden = {8, 8};
  RngHandle rng(seed);
  return agents::DdqnAgent(4, 2, cfg, rng);
}

}  // namespace

TEST_CASE("cvar: worked examples") {
  std::vector<double> returns = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  auto r = harness::cvar_statistic(returns, 0.2);
  CHECK(r.threshold_beta == 2.0);
  CHECK(r.cvar == doctest::Approx(1.5));

  auto full = harness::cvar_statistic(returns, 1.0);
  CHECK(full.cvar == doctest::Approx(5.5));

  std::vector<double> flat(7, 3.25);
  for (double a : {0.1, 0.5, 1.0}) CHECK(harness::cvar_statistic(flat, a).cvar == 3.25);
}

TEST_CASE("cvar: equals a brute-force sort oracle and never exceeds the mean") {
  RngHandle rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + rng.uniform_int(40);
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.uniform(-100, 100);
    const double alpha = 0.05 + 0.95 * rng.uniform01();

    // oracle: full sort, lower-interpolation quantile, ascending prefix mean
    std::vector<double> sorted = xs;
    std::stable_sort(sorted.begin(), sorted.end());
    std::size_t k = static_cast<std::size_t>(std::ceil(alpha * n));
    if (k < 1) k = 1;
    if (k > sorted.size()) k = sorted.size();
    const double thr = sorted[k - 1];
    double sum = 0;
    std::size_t cnt = 0;
    for (double v : sorted) {
      if (v <= thr) {
        sum += v;
        ++cnt;
      }
    }
    const double want = sum / cnt;

    auto got = harness::cvar_statistic(xs, alpha);
    CHECK(got.threshold_beta == thr);
    CHECK(got.cvar == want);

    double mean = 0;
    for (double v : xs) mean += v;
    mean /= n;
    CHECK(got.cvar <= mean + 1e-12);
  }
}

TEST_CASE("cvar: rejects empty input and bad alpha") {
  CHECK_THROWS_AS(harness::cvar_statistic(std::vector<double>{}, 0.5), ContractError);
  std::vector<double> xs = {1.0};
  CHECK_THROWS_AS(harness::cvar_statistic(xs, 0.0), ContractError);
  CHECK_THROWS_AS(harness::cvar_statistic(xs, 1.5), ContractError);
}

TEST_CASE("csv: row count, round trip, empty axes error") {
  harness::SweepResult res;
  res.axes.push_back({"a", {"0.5", "1.5"}});
  res.axes.push_back({"b", {"1", "2"}});
  res.cells.resize(4);
  for (int i = 0; i < 4; ++i) {
    res.cells[i].mean_return = 1.0 / 3.0 + i;
    res.cells[i].std_return = 0.1 * i;
    res.cells[i].n = 20;
  }
  harness::write_results_csv(res, "test_sweep.csv");
  const std::string text = slurp("test_sweep.csv");
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "a,b,mean,std,n");
  int rows = 0;
  std::vector<double> parsed;
  while (std::getline(in, line)) {
    ++rows;
    const auto p1 = line.find(',', line.find(',') + 1);
    const auto p2 = line.find(',', p1 + 1);
    parsed.push_back(std::stod(line.substr(p1 + 1, p2 - p1 - 1)));
  }
  CHECK(rows == 4);
  for (int i = 0; i < 4; ++i) CHECK(parsed[i] == res.cells[i].mean_return);  // bit-exact
  std::remove("test_sweep.csv");

  harness::SweepResult empty;
  CHECK_THROWS_AS(harness::write_results_csv(empty, "nope.csv"), ContractError);
  CHECK(!std::ifstream("nope.csv").good());
}

TEST_CASE("config: grammar, comments, overrides, unknown keys") {
  auto cfg = config::Config::parse_string(
      "# comment line\n"
      "env.kind = cartpole  # trailing comment\n"
      "agent.lr = 1e-3\n"
      "sweep.epsilons = 0, 0.02, 0.05\n"
      "agent.hard_sync = true\n");
  CHECK(cfg.get_string("env.kind", "") == "cartpole");
  CHECK(cfg.get_double("agent.lr", 0) == 1e-3);
  CHECK(cfg.get_bool("agent.hard_sync", false));
  CHECK(cfg.get_double_list("sweep.epsilons", {}) == std::vector<double>{0, 0.02, 0.05});

  cfg.set("agent.lr", "0.01");
  CHECK(cfg.get_double("agent.lr", 0) == 0.01);

  CHECK_THROWS_AS(cfg.validate_known({"env.kind", "agent.lr", "agent.hard_sync"}), ConfigError);
  CHECK_THROWS_AS(config::Config::parse_string("no_dot = 3\n"), ConfigError);
  CHECK_THROWS_AS(config::Config::parse_string("just some text\n"), ConfigError);
  CHECK_THROWS_AS(cfg.get_long("agent.lr", 0), ConfigError);
}

TEST_CASE("evaluate: deterministic greedy rollouts repeat exactly") {
  auto agent = small_cartpole_agent(5);
  agents::DdqnOracle oracle(agent);
  harness::EvalSpec spec;
  spec.episodes = 6;
  spec.seeds = {42};
  spec.parallel = false;
  const auto params = env::default_params(env::EnvKind::cartpole);
  auto a = harness::evaluate(oracle, env::EnvKind::cartpole, params, spec);
  auto b = harness::evaluate(oracle, env::EnvKind::cartpole, params, spec);
  CHECK(a.per_episode_returns == b.per_episode_returns);
  CHECK(a.mean == b.mean);
}

TEST_CASE("evaluate: parallel equals the serial reference") {
  auto agent = small_cartpole_agent(6);
  agents::DdqnOracle oracle(agent);
  harness::EvalSpec spec;
  spec.episodes = 10;
  spec.seeds = {1, 2, 3};
  spec.parallel = true;
  attacks::AttackConfig atk;
  atk.kind = attacks::AttackKind::gradient;
  atk.epsilon = 0.05;
  atk.n_samples = 10;
  spec.attack = atk;
  const auto params = env::default_params(env::EnvKind::cartpole);
  auto par = harness::evaluate(oracle, env::EnvKind::cartpole, params, spec);
  auto ser = harness::evaluate_serial(oracle, env::EnvKind::cartpole, params, spec);
  CHECK(par.per_episode_returns == ser.per_episode_returns);
  CHECK(par.mean == ser.mean);
  CHECK(par.stddev == ser.stddev);
}

TEST_CASE("evaluate: epsilon-zero attack equals no attack exactly") {
  auto agent = small_cartpole_agent(7);
  agents::DdqnOracle oracle(agent);
  harness::EvalSpec plain;
  plain.episodes = 5;
  plain.seeds = {9};
  plain.parallel = false;
  harness::EvalSpec attacked = plain;
  attacks::AttackConfig atk;
  atk.kind = attacks::AttackKind::gradient;
  atk.epsilon = 0.0;
  atk.n_samples = 50;
  attacked.attack = atk;
  const auto params = env::default_params(env::EnvKind::cartpole);
  auto a = harness::evaluate(oracle, env::EnvKind::cartpole, params, plain);
  auto b = harness::evaluate(oracle, env::EnvKind::cartpole, params, attacked);
  CHECK(a.per_episode_returns == b.per_episode_returns);
}

TEST_CASE("evaluate: wrong architecture fails before any rollout") {
  auto agent = small_cartpole_agent(8);  // 4-dim input
  agents::DdqnOracle oracle(agent);
  harness::EvalSpec spec;
  spec.episodes = 1;
  spec.seeds = {1};
  const auto params = env::default_params(env::EnvKind::mountain_car);
  CHECK_THROWS_AS(harness::evaluate(oracle, env::EnvKind::mountain_car, params, spec), ShapeError);
}

TEST_CASE("sweep_attack_magnitude: anchor row normalizes to exactly 1") {
  auto agent = small_cartpole_agent(9);
  agents::DdqnOracle oracle(agent);
  harness::EvalSpec spec;
  spec.episodes = 4;
  spec.seeds = {3, 4};
  attacks::AttackConfig base;
  base.n_samples = 10;
  auto res = harness::sweep_attack_magnitude(
      oracle, env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole),
      {attacks::AttackKind::naive, attacks::AttackKind::gradient}, {0.0, 0.05}, base, spec);
  CHECK(res.cell_count() == 4);
  CHECK(res.normalized(0) == 1.0);
  CHECK(res.normalized(2) == 1.0);  // second kind's anchor

  CHECK_THROWS_AS(harness::sweep_attack_magnitude(
                      oracle, env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole),
                      {attacks::AttackKind::naive}, {0.05, 0.0}, base, spec),
                  ContractError);
}

TEST_CASE("sweep_params_grid: degenerate 1x1 grid equals a plain evaluate") {
  auto agent = small_cartpole_agent(10);
  agents::DdqnOracle oracle(agent);
  harness::EvalSpec spec;
  spec.episodes = 5;
  spec.seeds = {11};
  const auto params = env::default_params(env::EnvKind::cartpole);
  harness::GridSpec grid;
  grid.axes.push_back({"cartpole.cart_mass", {params.cartpole.cart_mass}});
  auto res = harness::sweep_params_grid(oracle, env::EnvKind::cartpole, params, grid, spec);
  auto direct = harness::evaluate(oracle, env::EnvKind::cartpole, params, spec);
  CHECK(res.cells.size() == 1);
  CHECK(res.cells[0].mean_return == direct.mean);
  CHECK(res.baseline_return == direct.mean);
}

TEST_CASE("sweep_params_grid: rejects non-positive parameter values") {
  auto agent = small_cartpole_agent(12);
  agents::DdqnOracle oracle(agent);
  harness::EvalSpec spec;
  spec.episodes = 1;
  spec.seeds = {1};
  harness::GridSpec grid;
  grid.axes.push_back({"cartpole.cart_mass", {0.0, 1.0}});
  CHECK_THROWS_AS(harness::sweep_params_grid(oracle, env::EnvKind::cartpole,
                                             env::default_params(env::EnvKind::cartpole), grid,
                                             spec),
                  ContractError);
}

TEST_CASE("sweep csv bytes are identical across reruns") {
  auto agent = small_cartpole_agent(13);
  agents::DdqnOracle oracle(agent);
  harness::EvalSpec spec;
  spec.episodes = 3;
  spec.seeds = {5, 6};
  attacks::AttackConfig base;
  base.n_samples = 8;
  for (int run = 0; run < 2; ++run) {
    auto res = harness::sweep_attack_magnitude(
        oracle, env::EnvKind::cartpole, env::default_params(env::EnvKind::cartpole),
        {attacks::AttackKind::naive, attacks::AttackKind::gradient}, {0.0, 0.03, 0.08}, base,
        spec);
    harness::write_results_csv(res, run == 0 ? "rerun_a.csv" : "rerun_b.csv");
  }
  CHECK(slurp("rerun_a.csv") == slurp("rerun_b.csv"));
  CHECK(!slurp("rerun_a.csv").empty());
  std::remove("rerun_a.csv");
  std::remove("rerun_b.csv");
}

TEST_CASE("agent checkpoints: ddqn round trip preserves forward passes and config") {
  agents::DdqnConfig cfg;
  cfg.hidden = {8, 8};
  cfg.lr = 0.002;
  cfg.eps.anneal_steps = 1234;
  RngHandle rng(20);
  agents::DdqnAgent agent(4, 2, cfg, rng);
  agent.schedule_step = 777;
  const auto params = env::default_params(env::EnvKind::cartpole);
  harness::save_agent(agent, env::EnvKind::cartpole, params, "test_ddqn_ckpt");
  auto loaded = harness::load_agent("test_ddqn_ckpt");
  CHECK(loaded.kind == "ddqn");
  CHECK(loaded.env_kind == env::EnvKind::cartpole);
  CHECK(loaded.ddqn->schedule_step == 777);
  CHECK(loaded.ddqn->config().lr == 0.002);
  CHECK(loaded.ddqn->config().eps.anneal_steps == 1234);
  RngHandle srng(21);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> s = {srng.uniform01(), srng.uniform01(), srng.uniform01(),
                             srng.uniform01()};
    CHECK(nn::forward(agent.online(), s) == nn::forward(loaded.ddqn->online(), s));
    CHECK(nn::forward(agent.target(), s) == nn::forward(loaded.ddqn->target(), s));
  }
  for (const char* suffix : {".online.net", ".target.net", ".json"}) {
    std::remove((std::string("test_ddqn_ckpt") + suffix).c_str());
  }
}

TEST_CASE("agent checkpoints: ddpg and rbf round trips") {
  agents::DdpgConfig dcfg;
  dcfg.hidden = {6};
  RngHandle rng(22);
  agents::DdpgAgent ddpg(3, 1, 2.0, dcfg, rng);
  harness::save_agent(ddpg, env::EnvKind::pendulum, env::default_params(env::EnvKind::pendulum),
                      "test_ddpg_ckpt");
  auto loaded = harness::load_agent("test_ddpg_ckpt");
  CHECK(loaded.kind == "ddpg");
  CHECK(loaded.ddpg->action_bound() == 2.0);
  std::vector<double> s = {0.2, 0.5, 0.8};
  CHECK(loaded.ddpg->actor_action(loaded.ddpg->actor(), s) == ddpg.actor_action(ddpg.actor(), s));
  auto oracle = loaded.make_oracle();
  CHECK_FALSE(oracle->is_discrete());
  for (const char* suffix : {".actor.net", ".critic.net", ".actor_t.net", ".critic_t.net", ".json"}) {
    std::remove((std::string("test_ddpg_ckpt") + suffix).c_str());
  }

  agents::RbfAgentConfig rcfg;
  rcfg.bins = 3;
  agents::RbfAgent rbfa(2, 3, rcfg);
  RngHandle wrng(23);
  for (auto& w : rbfa.net_mut().output_weights) w = wrng.uniform(-1, 1);
  harness::save_agent(rbfa, env::EnvKind::mountain_car,
                      env::default_params(env::EnvKind::mountain_car), "test_rbf_ckpt");
  auto loaded_rbf = harness::load_agent("test_rbf_ckpt");
  CHECK(loaded_rbf.kind == "rbf");
  CHECK(loaded_rbf.rbf->net().output_weights == rbfa.net().output_weights);
  for (const char* suffix : {".rbf", ".json"}) {
    std::remove((std::string("test_rbf_ckpt") + suffix).c_str());
  }
}

TEST_CASE("agent checkpoints: missing sidecar is an I/O error") {
  CHECK_THROWS_AS(harness::load_agent("no_such_prefix"), IoError);
}

TEST_CASE("default grids: 9 values spanning half to one-and-a-half of defaults") {
  auto grid = harness::default_grid(env::EnvKind::cartpole);
  REQUIRE(grid.axes.size() == 2);
  CHECK(grid.axes[0].param == "cartpole.cart_mass");
  CHECK(grid.axes[0].values.size() == 9);
  CHECK(grid.axes[0].values.front() == doctest::Approx(0.5));
  CHECK(grid.axes[0].values.back() == doctest::Approx(1.5));
  CHECK(grid.axes[1].param == "cartpole.pole_length");
  CHECK(grid.axes[1].values.front() == doctest::Approx(0.25));
}

TEST_CASE("env_param_ptr: every documented path resolves, unknown paths throw") {
  env::EnvParams p;
  for (const auto& path : harness::env_param_paths()) {
    CHECK(harness::env_param_ptr(p, path) != nullptr);
  }
  CHECK_THROWS_AS(harness::env_param_ptr(p, "cartpole.bogus"), ConfigError);
}
