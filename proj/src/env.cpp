#include "rrl/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rrl/errors.hpp"

namespace rrl::env {

namespace {

constexpr double kCartXLimit = 2.4;
constexpr double kCartThetaLimit = 12.0 * std::numbers::pi / 180.0;
constexpr double kMcMinPos = -1.2;
constexpr double kMcMaxPos = 0.6;
constexpr double kMcMaxSpeed = 0.07;
constexpr double kMcGoal = 0.5;
constexpr double kMccGoal = 0.45;
constexpr double kMcGravity = 0.0025;
constexpr double kPendulumGravity = 10.0;
constexpr double kPendulumMaxSpeed = 8.0;

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double wrap_pi(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta + std::numbers::pi, two_pi);
  if (t < 0) t += two_pi;
  return t - std::numbers::pi;
}

}  // namespace

const char* env_kind_name(EnvKind k) {
  switch (k) {
    case EnvKind::cartpole: return "cartpole";
    case EnvKind::mountain_car: return "mountain_car";
    case EnvKind::mountain_car_continuous: return "mountain_car_continuous";
    case EnvKind::pendulum: return "pendulum";
  }
  return "cartpole";
}

EnvKind env_kind_from_name(const std::string& name) {
  if (name == "cartpole") return EnvKind::cartpole;
  if (name == "mountain_car") return EnvKind::mountain_car;
  if (name == "mountain_car_continuous") return EnvKind::mountain_car_continuous;
  if (name == "pendulum") return EnvKind::pendulum;
  throw ConfigError("unknown environment kind: " + name);
}

EnvParams default_params(EnvKind kind) {
  EnvParams p;
  if (kind == EnvKind::mountain_car_continuous) p.mountain_car.power = 0.0015;
  return p;
}

int obs_dim(EnvKind kind) {
  switch (kind) {
    case EnvKind::cartpole: return 4;
    case EnvKind::mountain_car: return 2;
    case EnvKind::mountain_car_continuous: return 2;
    case EnvKind::pendulum: return 3;  // cos(theta), sin(theta), theta_dot
  }
  return 0;
}

bool discrete_actions(EnvKind kind) {
  return kind == EnvKind::cartpole || kind == EnvKind::mountain_car;
}

int num_actions(EnvKind kind) {
  switch (kind) {
    case EnvKind::cartpole: return 2;
    case EnvKind::mountain_car: return 3;
    default: return 0;
  }
}

EnvInstance::EnvInstance(EnvKind kind, const EnvParams& params) : kind_(kind), params_(params) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string("environment parameter must be positive: ") + what);
  };
  positive(params.cartpole.cart_mass, "cartpole.cart_mass");
  positive(params.cartpole.pole_mass, "cartpole.pole_mass");
  positive(params.cartpole.pole_length, "cartpole.pole_length");
  positive(params.cartpole.gravity, "cartpole.gravity");
  positive(params.cartpole.force_mag, "cartpole.force_mag");
  positive(params.cartpole.dt, "cartpole.dt");
  positive(params.mountain_car.power, "mountain_car.power");
  positive(params.mountain_car.gravity_scale, "mountain_car.gravity_scale");
  positive(params.pendulum.mass, "pendulum.mass");
  positive(params.pendulum.length, "pendulum.length");
  positive(params.pendulum.max_torque, "pendulum.max_torque");
  positive(params.pendulum.dt, "pendulum.dt");

  switch (kind_) {
    case EnvKind::cartpole:
      obs_low_ = {-kCartXLimit, -3.0, -kCartThetaLimit, -3.0};
      obs_high_ = {kCartXLimit, 3.0, kCartThetaLimit, 3.0};
      internal_state_.assign(4, 0.0);
      break;
    case EnvKind::mountain_car:
    case EnvKind::mountain_car_continuous:
      obs_low_ = {kMcMinPos, -kMcMaxSpeed};
      obs_high_ = {kMcMaxPos, kMcMaxSpeed};
      internal_state_.assign(2, 0.0);
      break;
    case EnvKind::pendulum:
      obs_low_ = {-1.0, -1.0, -kPendulumMaxSpeed};
      obs_high_ = {1.0, 1.0, kPendulumMaxSpeed};
      internal_state_.assign(2, 0.0);  // theta, theta_dot
      break;
  }
}

int EnvInstance::obs_dim() const { return env::obs_dim(kind_); }
bool EnvInstance::discrete_actions() const { return env::discrete_actions(kind_); }
int EnvInstance::num_actions() const { return env::num_actions(kind_); }

double EnvInstance::action_bound() const {
  switch (kind_) {
    case EnvKind::mountain_car_continuous: return 1.0;
    case EnvKind::pendulum: return params_.pendulum.max_torque;
    default: throw ContractError("action_bound: discrete environment");
  }
}

int EnvInstance::episode_cap() const { return kind_ == EnvKind::pendulum ? 200 : 500; }

std::vector<double> EnvInstance::reset(RngHandle& rng) {
  switch (kind_) {
    case EnvKind::cartpole:
      for (double& v : internal_state_) v = rng.uniform(-0.05, 0.05);
      break;
    case EnvKind::mountain_car:
    case EnvKind::mountain_car_continuous:
      internal_state_[0] = rng.uniform(-0.6, -0.4);
      internal_state_[1] = 0.0;
      break;
    case EnvKind::pendulum:
      internal_state_[0] = rng.uniform(-std::numbers::pi, std::numbers::pi);
      internal_state_[1] = rng.uniform(-1.0, 1.0);
      break;
  }
  step_count_ = 0;
  episode_over_ = false;
  return observation();
}

std::vector<double> EnvInstance::raw_observation() const {
  if (kind_ == EnvKind::pendulum) {
    return {std::cos(internal_state_[0]), std::sin(internal_state_[0]), internal_state_[1]};
  }
  return internal_state_;
}

std::vector<double> EnvInstance::observation() const { return normalize_obs(raw_observation()); }

std::vector<double> EnvInstance::normalize_obs(std::span<const double> raw) const {
  if (raw.size() != obs_low_.size()) throw ShapeError("normalize_obs: wrong dimension");
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double c = clip(raw[i], obs_low_[i], obs_high_[i]);
    out[i] = (c - obs_low_[i]) / (obs_high_[i] - obs_low_[i]);
  }
  return out;
}

std::vector<double> EnvInstance::denormalize_obs(std::span<const double> normalized) const {
  if (normalized.size() != obs_low_.size()) throw ShapeError("denormalize_obs: wrong dimension");
  std::vector<double> out(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    out[i] = obs_low_[i] + normalized[i] * (obs_high_[i] - obs_low_[i]);
  }
  return out;
}

StepOutcome EnvInstance::finish_step(double reward, bool terminal) {
  step_count_ += 1;
  StepOutcome out;
  out.obs = observation();
  out.reward = reward;
  out.done = terminal;
  out.truncated = !terminal && step_count_ >= episode_cap();
  episode_over_ = out.done || out.truncated;
  return out;
}

StepOutcome EnvInstance::step(int action) {
  if (!discrete_actions()) throw ContractError("step(int): continuous environment");
  if (episode_over_) throw ContractError("step: episode already finished; call reset");
  if (action < 0 || action >= num_actions()) throw ContractError("step: action index out of range");

  if (kind_ == EnvKind::cartpole) {
    const CartpoleParams& p = params_.cartpole;
    double x = internal_state_[0], x_dot = internal_state_[1];
    double theta = internal_state_[2], theta_dot = internal_state_[3];
    const double force = action == 1 ? p.force_mag : -p.force_mag;
    const double cos_t = std::cos(theta), sin_t = std::sin(theta);
    const double total_mass = p.cart_mass + p.pole_mass;
    const double polemass_length = p.pole_mass * p.pole_length;
    const double temp = (force + polemass_length * theta_dot * theta_dot * sin_t) / total_mass;
    const double theta_acc = (p.gravity * sin_t - cos_t * temp) /
                             (p.pole_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
    x += p.dt * x_dot;
    x_dot += p.dt * x_acc;
    theta += p.dt * theta_dot;
    theta_dot += p.dt * theta_acc;
    internal_state_ = {x, x_dot, theta, theta_dot};
    const bool terminal = std::abs(x) > kCartXLimit || std::abs(theta) > kCartThetaLimit;
    return finish_step(1.0, terminal);
  }

  // discrete mountain car
  const MountainCarParams& p = params_.mountain_car;
  double pos = internal_state_[0], vel = internal_state_[1];
  vel += (action - 1) * p.power - kMcGravity * p.gravity_scale * std::cos(3.0 * pos);
  vel = clip(vel, -kMcMaxSpeed, kMcMaxSpeed);
  pos += vel;
  pos = clip(pos, kMcMinPos, kMcMaxPos);
  if (pos <= kMcMinPos && vel < 0.0) vel = 0.0;
  internal_state_ = {pos, vel};
  return finish_step(-1.0, pos >= kMcGoal);
}

StepOutcome EnvInstance::step(double action) {
  if (discrete_actions()) throw ContractError("step(double): discrete environment");
  if (episode_over_) throw ContractError("step: episode already finished; call reset");

  if (kind_ == EnvKind::mountain_car_continuous) {
    const MountainCarParams& p = params_.mountain_car;
    const double force = clip(action, -1.0, 1.0);
    double pos = internal_state_[0], vel = internal_state_[1];
    vel += force * p.power - kMcGravity * p.gravity_scale * std::cos(3.0 * pos);
    vel = clip(vel, -kMcMaxSpeed, kMcMaxSpeed);
    pos += vel;
    pos = clip(pos, kMcMinPos, kMcMaxPos);
    if (pos <= kMcMinPos && vel < 0.0) vel = 0.0;
    internal_state_ = {pos, vel};
    const bool terminal = pos >= kMccGoal;
    return finish_step(terminal ? 99.0 : -1.0, terminal);
  }

  // pendulum swing-up; velocity-first Euler as in the classic task, with the
  // quadratic cost charged on the pre-step state
  const PendulumParams& p = params_.pendulum;
  const double u = clip(action, -p.max_torque, p.max_torque);
  double theta = internal_state_[0], theta_dot = internal_state_[1];
  const double tn = wrap_pi(theta);
  const double cost = tn * tn + 0.1 * theta_dot * theta_dot + 0.001 * u * u;
  const double g = kPendulumGravity;
  const double acc = 3.0 * g / (2.0 * p.length) * std::sin(theta) +
                     3.0 / (p.mass * p.length * p.length) * u;
  theta_dot = clip(theta_dot + acc * p.dt, -kPendulumMaxSpeed, kPendulumMaxSpeed);
  theta = theta + theta_dot * p.dt;
  internal_state_ = {theta, theta_dot};
  return finish_step(-cost, false);
}

}  // namespace rrl::env
