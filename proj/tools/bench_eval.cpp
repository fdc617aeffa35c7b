// Benchmark comparing the serial reference evaluation loop against the
// OpenMP-parallel one on identical work, and checking they agree exactly.

#include <omp.h>

#include <cstdio>
#include <cstdlib>

#include "rrl/agents.hpp"
#include "rrl/env.hpp"
#include "rrl/harness.hpp"

using namespace rrl;

int main(int argc, char** argv) {
  const int episodes = argc > 1 ? std::atoi(argv[1]) : 60;
  const int attack_samples = argc > 2 ? std::atoi(argv[2]) : 50;

  const auto kind = env::EnvKind::cartpole;
  const auto params = env::default_params(kind);
  agents::DdqnConfig cfg;
  RngHandle rng(12345);
  agents::DdqnAgent agent(env::obs_dim(kind), env::num_actions(kind), cfg, rng);
  agents::DdqnOracle oracle(agent);

  harness::EvalSpec spec;
  spec.episodes = episodes;
  spec.seeds = {1, 2, 3, 4};
  attacks::AttackConfig atk;
  atk.kind = attacks::AttackKind::gradient;
  atk.epsilon = 0.05;
  atk.n_samples = attack_samples;
  spec.attack = atk;

  std::printf("evaluating %d episodes x %zu seeds, gradient attack n=%d, threads=%d\n",
              spec.episodes, spec.seeds.size(), atk.n_samples, omp_get_max_threads());

  const double t0 = omp_get_wtime();
  const auto serial = harness::evaluate_serial(oracle, kind, params, spec);
  const double t1 = omp_get_wtime();
  spec.parallel = true;
  const auto parallel = harness::evaluate(oracle, kind, params, spec);
  const double t2 = omp_get_wtime();

  const bool identical = serial.per_episode_returns == parallel.per_episode_returns;
  std::printf("serial reference: %8.3f s  (mean return %.3f)\n", t1 - t0, serial.mean);
  std::printf("openmp parallel : %8.3f s  (mean return %.3f)\n", t2 - t1, parallel.mean);
  std::printf("speedup %.2fx, results %s\n", (t1 - t0) / (t2 - t1),
              identical ? "identical" : "DIFFER");
  return identical ? 0 : 1;
}
