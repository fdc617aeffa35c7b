#pragma once

#include <span>
#include <string>
#include <vector>

namespace rrl::rbf {

// Gaussian-kernel RBF Q network over the normalized state cube. Centroids sit
// on a b^state_dim grid of bin centers; only the linear output weights train.
struct RbfNet {
  int bins_per_dim = 0;
  int state_dim = 0;
  int num_actions = 0;
  double kernel_variance = 0.0;            // 2 / b^2 at construction
  std::vector<double> centroids;           // K x state_dim, row-major
  std::vector<double> output_weights;      // num_actions x K, row-major

  int feature_count() const { return static_cast<int>(centroids.size()) / std::max(state_dim, 1); }
  double& w(int action, int k) {
    return output_weights[static_cast<std::size_t>(action) * feature_count() + k];
  }
  double w(int action, int k) const {
    return output_weights[static_cast<std::size_t>(action) * feature_count() + k];
  }
};

RbfNet make_rbf(int bins_per_dim, int state_dim, int num_actions);

// phi_k(s) = exp(-|s - c_k|^2 / (2 var)), after clipping s into [0,1]^d.
// clipped_flag reports whether any component was out of range.
std::vector<double> rbf_features(const RbfNet& net, std::span<const double> s,
                                 bool* clipped_flag = nullptr);

// Q = output_weights * phi(s), one value per action.
std::vector<double> rbf_q_values(const RbfNet& net, std::span<const double> s,
                                 bool* clipped_flag = nullptr);

// d/ds of <upstream, Q(s)>. Components clipped at the [0,1] boundary carry
// zero gradient.
std::vector<double> rbf_input_gradient(const RbfNet& net, std::span<const double> s,
                                       std::span<const double> upstream);

// One TD(0) update: delta = r + (done ? 0 : gamma max_a' Q(s',a')) - Q(s,a);
// output_weights[a] += lr * delta * phi(s). Only row a changes.
// Returns delta.
double rbf_td_update(RbfNet& net, std::span<const double> s, int a, double r,
                     std::span<const double> s_next, bool done, double gamma, double lr);

// Checkpoint: "RRLRBF v1 <b>;<state_dim>;<num_actions>;<variance>\n" header,
// then output_weights row-major as little-endian 64-bit floats.
void save_rbf(const RbfNet& net, const std::string& path);
RbfNet load_rbf(const std::string& path);

}  // namespace rrl::rbf
