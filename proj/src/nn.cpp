#include "rrl/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rrl/errors.hpp"

namespace rrl::nn {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::tanh: return std::tanh(z);
    case Activation::identity: return z;
  }
  return z;
}

double activate_deriv(Activation a, double z, double post) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - post * post;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

void check_cache(const DenseNet& net, const ForwardCache& cache) {
  if (cache.pre.size() != net.layers.size() || cache.post.size() != net.layers.size() ||
      static_cast<int>(cache.input.size()) != net.input_dim()) {
    throw ContractError("backward: cache does not match net");
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (static_cast<int>(cache.pre[i].size()) != net.layers[i].out_dim) {
      throw ContractError("backward: cache layer size mismatch");
    }
  }
}

void write_le_doubles(std::ostream& out, const std::vector<double>& vals) {
  for (double d : vals) {
    std::uint64_t u = std::bit_cast<std::uint64_t>(d);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw IoError("checkpoint write failed");
}

void read_le_doubles(std::istream& in, std::vector<double>& vals) {
  for (double& d : vals) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw IoError("checkpoint truncated: expected more float data");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    d = std::bit_cast<double>(u);
  }
}

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw IoError("unknown activation name: " + name);
}

std::size_t DenseNet::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

DenseNet make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                  Activation output_act, RngHandle& rng) {
  if (input_dim <= 0 || output_dim <= 0) throw ShapeError("make_mlp: dimensions must be positive");
  DenseNet net;
  int prev = input_dim;
  auto add_layer = [&](int out, Activation act) {
    DenseLayer l;
    l.in_dim = prev;
    l.out_dim = out;
    l.act = act;
    l.weights.resize(static_cast<std::size_t>(out) * prev);
    l.bias.assign(out, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
    for (double& w : l.weights) w = rng.uniform(-bound, bound);
    net.layers.push_back(std::move(l));
    prev = out;
  };
  for (int h : hidden) {
    if (h <= 0) throw ShapeError("make_mlp: hidden sizes must be positive");
    add_layer(h, Activation::relu);
  }
  add_layer(output_dim, output_act);
  return net;
}

std::vector<double> forward(const DenseNet& net, std::span<const double> x, ForwardCache* cache) {
  if (net.layers.empty()) throw ShapeError("forward: empty net");
  if (static_cast<int>(x.size()) != net.input_dim()) {
    throw ShapeError("forward: input has size " + std::to_string(x.size()) + ", net expects " +
                     std::to_string(net.input_dim()));
  }
  if (cache) {
    cache->input.assign(x.begin(), x.end());
    cache->pre.resize(net.layers.size());
    cache->post.resize(net.layers.size());
  }
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const DenseLayer& l = net.layers[li];
    next.assign(l.out_dim, 0.0);
    for (int r = 0; r < l.out_dim; ++r) {
      const double* wrow = l.weights.data() + static_cast<std::size_t>(r) * l.in_dim;
      double z = l.bias[r];
      for (int c = 0; c < l.in_dim; ++c) z += wrow[c] * cur[c];
      next[r] = z;
    }
    if (cache) cache->pre[li] = next;
    for (int r = 0; r < l.out_dim; ++r) next[r] = activate(l.act, next[r]);
    if (cache) cache->post[li] = next;
    cur.swap(next);
  }
  return cur;
}

NetGradients zero_gradients(const DenseNet& net) {
  NetGradients g;
  g.weight_grads.reserve(net.layers.size());
  g.bias_grads.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    g.weight_grads.emplace_back(l.weights.size(), 0.0);
    g.bias_grads.emplace_back(l.bias.size(), 0.0);
  }
  g.input_grad.assign(net.input_dim(), 0.0);
  return g;
}

namespace {

// Shared backward pass; when acc is null only the input gradient is computed,
// when scale==0 the parameter gradients are skipped entirely.
std::vector<double> backward_impl(const DenseNet& net, const ForwardCache& cache,
                                  std::span<const double> upstream, double scale,
                                  NetGradients* acc) {
  check_cache(net, cache);
  if (static_cast<int>(upstream.size()) != net.output_dim()) {
    throw ContractError("backward: upstream size does not match output_dim");
  }
  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> prev_delta;
  for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
    const DenseLayer& l = net.layers[li];
    for (int r = 0; r < l.out_dim; ++r) {
      delta[r] *= activate_deriv(l.act, cache.pre[li][r], cache.post[li][r]);
    }
    const std::vector<double>& layer_in = (li == 0) ? cache.input : cache.post[li - 1];
    if (acc) {
      std::vector<double>& wg = acc->weight_grads[li];
      std::vector<double>& bg = acc->bias_grads[li];
      for (int r = 0; r < l.out_dim; ++r) {
        const double dz = delta[r] * scale;
        double* wrow = wg.data() + static_cast<std::size_t>(r) * l.in_dim;
        for (int c = 0; c < l.in_dim; ++c) wrow[c] += dz * layer_in[c];
        bg[r] += dz;
      }
    }
    prev_delta.assign(l.in_dim, 0.0);
    for (int r = 0; r < l.out_dim; ++r) {
      const double dz = delta[r];
      const double* wrow = l.weights.data() + static_cast<std::size_t>(r) * l.in_dim;
      for (int c = 0; c < l.in_dim; ++c) prev_delta[c] += dz * wrow[c];
    }
    delta.swap(prev_delta);
  }
  return delta;
}

}  // namespace

NetGradients backward(const DenseNet& net, const ForwardCache& cache,
                      std::span<const double> upstream) {
  NetGradients g = zero_gradients(net);
  g.input_grad = backward_impl(net, cache, upstream, 1.0, &g);
  return g;
}

void backward_accumulate(const DenseNet& net, const ForwardCache& cache,
                         std::span<const double> upstream, double scale, NetGradients& acc) {
  backward_impl(net, cache, upstream, scale, &acc);
}

std::vector<double> input_gradient(const DenseNet& net, const ForwardCache& cache,
                                   std::span<const double> upstream) {
  return backward_impl(net, cache, upstream, 0.0, nullptr);
}

AdamState make_adam(const DenseNet& net, double learning_rate) {
  AdamState st;
  st.learning_rate = learning_rate;
  for (const auto& l : net.layers) {
    st.m_w.emplace_back(l.weights.size(), 0.0);
    st.v_w.emplace_back(l.weights.size(), 0.0);
    st.m_b.emplace_back(l.bias.size(), 0.0);
    st.v_b.emplace_back(l.bias.size(), 0.0);
  }
  return st;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::int64_t step_count, double lr, double beta1,
                 double beta2, double eps) {
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void adam_step(DenseNet& net, const NetGradients& grads, AdamState& state) {
  if (grads.weight_grads.size() != net.layers.size() || state.m_w.size() != net.layers.size()) {
    throw ContractError("adam_step: gradient/state shape mismatch");
  }
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    for (double g : grads.weight_grads[li]) {
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite weight gradient");
    }
    for (double g : grads.bias_grads[li]) {
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite bias gradient");
    }
  }
  state.step_count += 1;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    DenseLayer& l = net.layers[li];
    adam_update(l.weights, grads.weight_grads[li], state.m_w[li], state.v_w[li], state.step_count,
                state.learning_rate, state.beta1, state.beta2, state.epsilon_stab);
    adam_update(l.bias, grads.bias_grads[li], state.m_b[li], state.v_b[li], state.step_count,
                state.learning_rate, state.beta1, state.beta2, state.epsilon_stab);
  }
}

PolicyPmf softmax(std::span<const double> q) {
  if (q.empty()) throw ShapeError("softmax: empty input");
  const double qmax = *std::max_element(q.begin(), q.end());
  PolicyPmf pmf;
  pmf.probs.resize(q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    pmf.probs[i] = std::exp(q[i] - qmax);
    sum += pmf.probs[i];
  }
  for (double& p : pmf.probs) p /= sum;
  return pmf;
}

WorstActionLoss worst_action_loss(const PolicyPmf& pmf, int worst_index) {
  if (worst_index < 0 || worst_index >= static_cast<int>(pmf.probs.size())) {
    throw ContractError("worst_action_loss: worst_index out of range");
  }
  WorstActionLoss out;
  double p = pmf.probs[worst_index];
  constexpr double kFloor = 1e-12;
  if (p < kFloor) {
    p = kFloor;
    out.clamped = true;
  }
  out.loss = -std::log(p);
  out.logit_grad = pmf.probs;
  out.logit_grad[worst_index] -= 1.0;
  return out;
}

double sample_beta(RngHandle& rng, double alpha_b, double beta_b) {
  return rng.beta(alpha_b, beta_b);
}

namespace {

std::string arch_descriptor(const DenseNet& net) {
  std::ostringstream os;
  os << "in:" << net.input_dim() << ";layers:";
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (i) os << ',';
    os << net.layers[i].out_dim << ':' << activation_name(net.layers[i].act);
  }
  return os.str();
}

}  // namespace

void write_net(const DenseNet& net, std::ostream& out) {
  out << "RRLCKPT v1 " << arch_descriptor(net) << "\n";
  for (const auto& l : net.layers) write_le_doubles(out, l.weights);
  for (const auto& l : net.layers) write_le_doubles(out, l.bias);
}

DenseNet read_net(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw IoError("checkpoint truncated: missing header");
  std::istringstream hs(header);
  std::string magic, version, arch;
  hs >> magic >> version >> arch;
  if (magic != "RRLCKPT") {
    throw IoError("checkpoint format error: expected magic RRLCKPT, found '" + magic + "'");
  }
  if (version != "v1") {
    throw IoError("checkpoint format error: expected version v1, found '" + version + "'");
  }
  if (arch.rfind("in:", 0) != 0) throw IoError("checkpoint format error: bad arch descriptor");
  const std::size_t semi = arch.find(";layers:");
  if (semi == std::string::npos) throw IoError("checkpoint format error: bad arch descriptor");
  DenseNet net;
  int prev = std::stoi(arch.substr(3, semi - 3));
  std::string layer_list = arch.substr(semi + 8);
  std::istringstream ls(layer_list);
  std::string item;
  while (std::getline(ls, item, ',')) {
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos) throw IoError("checkpoint format error: bad layer entry");
    DenseLayer l;
    l.in_dim = prev;
    l.out_dim = std::stoi(item.substr(0, colon));
    if (l.out_dim <= 0 || l.in_dim <= 0) throw IoError("checkpoint format error: bad layer dims");
    l.act = activation_from_name(item.substr(colon + 1));
    l.weights.resize(static_cast<std::size_t>(l.out_dim) * l.in_dim);
    l.bias.resize(l.out_dim);
    prev = l.out_dim;
    net.layers.push_back(std::move(l));
  }
  if (net.layers.empty()) throw IoError("checkpoint format error: no layers");
  for (auto& l : net.layers) read_le_doubles(in, l.weights);
  for (auto& l : net.layers) read_le_doubles(in, l.bias);
  return net;
}

void save_net(const DenseNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_net(net, out);
  if (!out) throw IoError("write failed: " + path);
}

DenseNet load_net(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return read_net(in);
}

}  // namespace rrl::nn
