#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrl/agents.hpp"
#include "rrl/attacks.hpp"
#include "rrl/env.hpp"

namespace rrl::harness {

struct EvalSpec {
  int episodes = 100;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
  std::optional<attacks::AttackConfig> attack;
  bool greedy = true;    // evaluation is greedy; rollouts never explore
  bool parallel = true;  // OpenMP over episodes; results are merge-by-index
};

struct EvalResult {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over all episodes
  std::vector<double> per_episode_returns;  // seed-major order
  std::vector<double> per_seed_means;
};

// Rolls out one greedy episode; the per-episode stream seed covers the reset
// draw and every attack draw, so parallel and serial execution agree.
double rollout_episode(const agents::AgentOracle& oracle, env::EnvKind kind,
                       const env::EnvParams& params, const attacks::AttackConfig* attack,
                       std::uint64_t stream_seed);

// Per-episode stream: derive_seed(seed_value, {stream_salt, episode_index}).
// Sweeps leave the salt at 0 for every cell, so cells are compared on common
// episode randomness (paired starts); distinct experiments can pass their own
// salt to decouple streams.
EvalResult evaluate(const agents::AgentOracle& oracle, env::EnvKind kind,
                    const env::EnvParams& params, const EvalSpec& spec,
                    std::uint64_t stream_salt = 0);

// Plain-loop reference implementation; must match evaluate() exactly.
EvalResult evaluate_serial(const agents::AgentOracle& oracle, env::EnvKind kind,
                           const env::EnvParams& params, const EvalSpec& spec,
                           std::uint64_t stream_salt = 0);

struct SweepAxis {
  std::string name;
  std::vector<std::string> labels;  // printed as-is in the CSV
};

struct SweepCell {
  double mean_return = 0.0;
  double std_return = 0.0;
  std::vector<double> per_seed_means;
  long n = 0;  // episodes * seeds
};

struct SweepResult {
  std::vector<SweepAxis> axes;
  std::vector<SweepCell> cells;  // row-major over the axis grid
  double baseline_return = 0.0;  // unattacked default-parameter mean

  std::size_t cell_count() const { return cells.size(); }
  double normalized(std::size_t idx) const;
};

// One evaluate per (kind, epsilon); epsilons must be ascending with a leading
// 0. The epsilon=0 column is evaluated once and shared across kinds, so every
// kind's normalized return is exactly 1 there.
SweepResult sweep_attack_magnitude(const agents::AgentOracle& oracle, env::EnvKind kind,
                                   const env::EnvParams& params,
                                   const std::vector<attacks::AttackKind>& kinds,
                                   const std::vector<double>& epsilons,
                                   const attacks::AttackConfig& base_attack, const EvalSpec& spec);

struct GridAxis {
  std::string param;  // e.g. "cartpole.cart_mass"
  std::vector<double> values;
};

struct GridSpec {
  std::vector<GridAxis> axes;
};

// Named access into EnvParams for grid sweeps and config files.
double* env_param_ptr(env::EnvParams& params, const std::string& path);
std::vector<std::string> env_param_paths();

// Default sweep axes for an environment kind: two axes, 9 values each,
// spanning +/-50% around the default parameter values.
GridSpec default_grid(env::EnvKind kind);

// One unattacked evaluate per grid cell; the baseline is the default-parameter
// evaluation with the same spec.
SweepResult sweep_params_grid(const agents::AgentOracle& oracle, env::EnvKind kind,
                              const env::EnvParams& base_params, const GridSpec& grid,
                              const EvalSpec& spec);

struct CvarResult {
  double threshold_beta = 0.0;
  double cvar = 0.0;
};

// threshold = lower-interpolation alpha-quantile; cvar = mean of all returns
// <= threshold, summed in ascending order.
CvarResult cvar_statistic(std::span<const double> returns, double alpha);

// Header "axis...,mean,std,n", one row per cell in lexicographic axis-index
// order, floats with 17 significant digits.
void write_results_csv(const SweepResult& result, const std::string& path);

// --- agent checkpoints -----------------------------------------------------
// A checkpoint is <prefix>.<net>.net files in the nn/rbf formats plus a
// <prefix>.json sidecar holding agent kind, hyperparameters, environment kind
// and parameters, and the exploration schedule position.

void save_agent(const agents::DdqnAgent& agent, env::EnvKind env_kind,
                const env::EnvParams& env_params, const std::string& prefix);
void save_agent(const agents::DdpgAgent& agent, env::EnvKind env_kind,
                const env::EnvParams& env_params, const std::string& prefix);
void save_agent(const agents::RbfAgent& agent, env::EnvKind env_kind,
                const env::EnvParams& env_params, const std::string& prefix);

struct LoadedAgent {
  std::string kind;  // "ddqn" | "ddpg" | "rbf"
  std::unique_ptr<agents::DdqnAgent> ddqn;
  std::unique_ptr<agents::DdpgAgent> ddpg;
  std::unique_ptr<agents::RbfAgent> rbf;
  env::EnvKind env_kind = env::EnvKind::cartpole;
  env::EnvParams env_params;

  // Oracle view over the loaded agent; the LoadedAgent must outlive it.
  std::unique_ptr<agents::AgentOracle> make_oracle() const;
};

LoadedAgent load_agent(const std::string& prefix);

}  // namespace rrl::harness
