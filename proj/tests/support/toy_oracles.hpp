#pragma once

// Analytic toy oracles for exercising the attack operations independently of
// the network code: a linear-softmax discrete policy and a quadratic-bowl
// continuous value.

#include <algorithm>
#include <cmath>
#include <vector>

#include "rrl/agents.hpp"
#include "rrl/nn.hpp"
#include "rrl/rng.hpp"

namespace testsupport {

class LinearSoftmaxOracle : public rrl::agents::AgentOracle {
 public:
  // q_a(s) = A[a] . s + c[a]; the same table serves as online and target.
  LinearSoftmaxOracle(std::vector<std::vector<double>> A, std::vector<double> c)
      : A_(std::move(A)), c_(std::move(c)) {}

  static LinearSoftmaxOracle random(rrl::RngHandle& rng, int dim, int actions, double scale = 2.0) {
    std::vector<std::vector<double>> A(actions, std::vector<double>(dim));
    std::vector<double> c(actions);
    for (int a = 0; a < actions; ++a) {
      for (int d = 0; d < dim; ++d) A[a][d] = rng.uniform(-scale, scale);
      c[a] = rng.uniform(-1, 1);
    }
    return LinearSoftmaxOracle(std::move(A), std::move(c));
  }

  std::vector<double> q(std::span<const double> s) const {
    std::vector<double> out(A_.size());
    for (std::size_t a = 0; a < A_.size(); ++a) {
      double v = c_[a];
      for (std::size_t d = 0; d < s.size(); ++d) v += A_[a][d] * s[d];
      out[a] = v;
    }
    return out;
  }

  int state_dim() const override { return static_cast<int>(A_[0].size()); }
  bool is_discrete() const override { return true; }
  int num_actions() const override { return static_cast<int>(A_.size()); }

  std::vector<double> policy_action(std::span<const double> s) const override {
    const auto qv = q(s);
    return {static_cast<double>(rrl::agents::argmax_lowest(qv))};
  }
  double action_value(std::span<const double> s, std::span<const double> a) const override {
    return q(s)[static_cast<int>(a[0])];
  }
  double best_value(std::span<const double> s) const override {
    const auto qv = q(s);
    return *std::max_element(qv.begin(), qv.end());
  }
  std::vector<double> q_target(std::span<const double> s) const override { return q(s); }
  std::vector<double> q_online(std::span<const double> s) const override { return q(s); }

  // grad of -log softmax(q(s))[action] = sum_a (pmf_a - onehot_a) A_a
  std::vector<double> ce_gradient_target(std::span<const double> s, int action) const override {
    const auto pmf = rrl::nn::softmax(q(s));
    std::vector<double> g(state_dim(), 0.0);
    for (std::size_t a = 0; a < A_.size(); ++a) {
      const double w = pmf.probs[a] - (static_cast<int>(a) == action ? 1.0 : 0.0);
      for (int d = 0; d < state_dim(); ++d) g[d] += w * A_[a][d];
    }
    return g;
  }
  std::vector<double> ce_gradient_online(std::span<const double> s, int action) const override {
    return ce_gradient_target(s, action);
  }

  const std::vector<std::vector<double>>& rows() const { return A_; }

 private:
  std::vector<std::vector<double>> A_;
  std::vector<double> c_;
};

// Continuous-action stand-in whose attack loss is the quadratic bowl
// |s - minimizer|^2; its gradient is exact.
class QuadraticValueOracle : public rrl::agents::AgentOracle {
 public:
  explicit QuadraticValueOracle(std::vector<double> minimizer) : m_(std::move(minimizer)) {}

  int state_dim() const override { return static_cast<int>(m_.size()); }
  bool is_discrete() const override { return false; }

  double loss(std::span<const double> s) const {
    double v = 0;
    for (std::size_t d = 0; d < m_.size(); ++d) v += (s[d] - m_[d]) * (s[d] - m_[d]);
    return v;
  }
  std::vector<double> policy_action(std::span<const double>) const override { return {0.0}; }
  double action_value(std::span<const double> s, std::span<const double>) const override {
    return loss(s);
  }
  double best_value(std::span<const double> s) const override { return loss(s); }
  std::vector<double> value_gradient(std::span<const double> s) const override {
    std::vector<double> g(m_.size());
    for (std::size_t d = 0; d < m_.size(); ++d) g[d] = 2.0 * (s[d] - m_[d]);
    return g;
  }

 private:
  std::vector<double> m_;
};

}  // namespace testsupport
