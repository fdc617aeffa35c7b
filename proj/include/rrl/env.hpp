#pragma once

#include <span>
#include <string>
#include <vector>

#include "rrl/rng.hpp"

namespace rrl::env {

enum class EnvKind { cartpole, mountain_car, mountain_car_continuous, pendulum };

const char* env_kind_name(EnvKind k);
EnvKind env_kind_from_name(const std::string& name);

struct CartpoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_length = 0.5;  // pivot-to-center distance, as in the classic task
  double gravity = 9.8;
  double force_mag = 10.0;
  double dt = 0.02;
};

struct MountainCarParams {
  double power = 0.001;        // force coefficient; 0.0015 for the continuous variant
  double gravity_scale = 1.0;  // multiplier on the standard 0.0025 gravity term
};

struct PendulumParams {
  double mass = 1.0;
  double length = 1.0;
  double max_torque = 2.0;
  double dt = 0.05;
};

struct EnvParams {
  CartpoleParams cartpole;
  MountainCarParams mountain_car;
  PendulumParams pendulum;
};

// Classic-control standard values; the continuous mountain car gets its own
// power coefficient.
EnvParams default_params(EnvKind kind);

struct StepOutcome {
  std::vector<double> obs;  // normalized, in [0,1]^d
  double reward = 0.0;
  bool done = false;       // terminal state reached
  bool truncated = false;  // episode cap reached without termination
};

// Deterministic parameterized physics with observations normalized to [0,1].
// An instance owns its state; instances on different threads never interact.
class EnvInstance {
 public:
  EnvInstance(EnvKind kind, const EnvParams& params);

  EnvKind kind() const { return kind_; }
  const EnvParams& params() const { return params_; }
  int obs_dim() const;
  bool discrete_actions() const;
  int num_actions() const;      // discrete kinds only
  double action_bound() const;  // continuous kinds: actions in [-bound, bound]
  int episode_cap() const;
  long step_count() const { return step_count_; }

  // Draws the standard small uniform initial state; returns the normalized
  // observation. Resets the step counter and the done flag.
  std::vector<double> reset(RngHandle& rng);

  StepOutcome step(int action);     // discrete kinds
  StepOutcome step(double action);  // continuous kinds

  // Componentwise affine map between raw observation units and [0,1].
  std::vector<double> normalize_obs(std::span<const double> raw) const;
  std::vector<double> denormalize_obs(std::span<const double> normalized) const;

  std::span<const double> raw_state() const { return internal_state_; }
  std::vector<double> observation() const;  // normalized obs of current state

  std::span<const double> obs_low() const { return obs_low_; }
  std::span<const double> obs_high() const { return obs_high_; }

 private:
  StepOutcome finish_step(double reward, bool terminal);
  std::vector<double> raw_observation() const;

  EnvKind kind_;
  EnvParams params_;
  std::vector<double> internal_state_;
  std::vector<double> obs_low_, obs_high_;
  long step_count_ = 0;
  bool episode_over_ = true;
};

int obs_dim(EnvKind kind);
bool discrete_actions(EnvKind kind);
int num_actions(EnvKind kind);

}  // namespace rrl::env
