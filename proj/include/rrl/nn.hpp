#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rrl/rng.hpp"

namespace rrl::nn {

enum class Activation { relu, tanh, identity };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
  int in_dim = 0;
  int out_dim = 0;
  Activation act = Activation::identity;
  std::vector<double> weights;  // out_dim x in_dim, row-major
  std::vector<double> bias;     // out_dim

  double& w(int row, int col) { return weights[static_cast<std::size_t>(row) * in_dim + col]; }
  double w(int row, int col) const { return weights[static_cast<std::size_t>(row) * in_dim + col]; }
};

// Fixed-topology MLP. Layer i's input dimension equals layer i-1's output
// dimension; construction and checkpoint loading both enforce it.
struct DenseNet {
  std::vector<DenseLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
  std::size_t param_count() const;
};

// Builds a net with the given hidden sizes, relu hidden units and the given
// output activation. Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
// biases zero.
DenseNet make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                  Activation output_act, RngHandle& rng);

// Per-layer pre/post activations from one forward pass; consumed by backward.
struct ForwardCache {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

// Output of the net at x. If cache is non-null it is filled for backward.
std::vector<double> forward(const DenseNet& net, std::span<const double> x,
                            ForwardCache* cache = nullptr);

struct NetGradients {
  std::vector<std::vector<double>> weight_grads;
  std::vector<std::vector<double>> bias_grads;
  std::vector<double> input_grad;
};

NetGradients zero_gradients(const DenseNet& net);

// Exact gradients of <upstream, net(x)> with respect to parameters and input.
// Scalar losses pass their output-gradient as upstream; the same mechanism
// serves both training and input-space attacks.
NetGradients backward(const DenseNet& net, const ForwardCache& cache,
                      std::span<const double> upstream);

// As backward, but adds scale * gradients into acc (input_grad ignored).
// Used to accumulate minibatch parameter gradients without reallocation.
void backward_accumulate(const DenseNet& net, const ForwardCache& cache,
                         std::span<const double> upstream, double scale, NetGradients& acc);

// Input gradient only; cheaper when parameters are not being trained.
std::vector<double> input_gradient(const DenseNet& net, const ForwardCache& cache,
                                   std::span<const double> upstream);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_stab = 1e-8;
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> m_w, v_w;  // first/second moments, weights
  std::vector<std::vector<double>> m_b, v_b;  // first/second moments, biases
};

AdamState make_adam(const DenseNet& net, double learning_rate);

// Flat Adam kernel with bias correction; step_count must already be advanced.
void adam_update(std::span<double> params, std::span<const double> grads,
                 std::span<double> m, std::span<double> v, std::int64_t step_count,
                 double lr, double beta1, double beta2, double eps);

// One bias-corrected Adam step on every parameter of the net.
void adam_step(DenseNet& net, const NetGradients& grads, AdamState& state);

struct PolicyPmf {
  std::vector<double> probs;
};

// Max-shifted softmax; entries sum to 1 and survive large logits.
PolicyPmf softmax(std::span<const double> q);

struct WorstActionLoss {
  double loss = 0.0;
  std::vector<double> logit_grad;  // d loss / d q through the softmax
  bool clamped = false;
};

// Cross entropy between the point mass on worst_index and pmf:
// loss = -log pmf[worst_index], logit_grad = pmf - onehot(worst_index).
WorstActionLoss worst_action_loss(const PolicyPmf& pmf, int worst_index);

// One draw from Beta(alpha_b, beta_b) via two gamma draws.
double sample_beta(RngHandle& rng, double alpha_b, double beta_b);

// Checkpoint format: ASCII header "RRLCKPT v1 in:<d>;layers:<out>:<act>,...\n"
// followed by all weights (layer by layer, row-major) then all biases
// (layer by layer), as little-endian 64-bit floats.
void save_net(const DenseNet& net, const std::string& path);
DenseNet load_net(const std::string& path);
void write_net(const DenseNet& net, std::ostream& out);
DenseNet read_net(std::istream& in);

}  // namespace rrl::nn
