#include "rrl/rbf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "rrl/errors.hpp"

namespace rrl::rbf {

namespace {

std::vector<double> clip_unit(std::span<const double> s, bool* clipped_flag) {
  std::vector<double> c(s.begin(), s.end());
  bool clipped = false;
  for (double& v : c) {
    if (v < 0.0) {
      v = 0.0;
      clipped = true;
    } else if (v > 1.0) {
      v = 1.0;
      clipped = true;
    }
  }
  if (clipped_flag) *clipped_flag = clipped;
  return c;
}

}  // namespace

RbfNet make_rbf(int bins_per_dim, int state_dim, int num_actions) {
  if (bins_per_dim <= 0 || state_dim <= 0 || num_actions <= 0) {
    throw ShapeError("make_rbf: dimensions must be positive");
  }
  RbfNet net;
  net.bins_per_dim = bins_per_dim;
  net.state_dim = state_dim;
  net.num_actions = num_actions;
  net.kernel_variance = 2.0 / (static_cast<double>(bins_per_dim) * bins_per_dim);

  std::size_t K = 1;
  for (int d = 0; d < state_dim; ++d) K *= static_cast<std::size_t>(bins_per_dim);
  net.centroids.resize(K * state_dim);
  // Bin centers: dimension j of centroid k cycles through (i + 0.5) / b.
  std::vector<int> idx(state_dim, 0);
  for (std::size_t k = 0; k < K; ++k) {
    for (int d = 0; d < state_dim; ++d) {
      net.centroids[k * state_dim + d] = (idx[d] + 0.5) / bins_per_dim;
    }
    for (int d = state_dim - 1; d >= 0; --d) {
      if (++idx[d] < bins_per_dim) break;
      idx[d] = 0;
    }
  }
  net.output_weights.assign(static_cast<std::size_t>(num_actions) * K, 0.0);
  return net;
}

std::vector<double> rbf_features(const RbfNet& net, std::span<const double> s, bool* clipped_flag) {
  if (static_cast<int>(s.size()) != net.state_dim) {
    throw ShapeError("rbf_features: state has wrong dimension");
  }
  const std::vector<double> sc = clip_unit(s, clipped_flag);
  const int K = net.feature_count();
  std::vector<double> phi(K);
  for (int k = 0; k < K; ++k) {
    const double* c = net.centroids.data() + static_cast<std::size_t>(k) * net.state_dim;
    double d2 = 0.0;
    for (int d = 0; d < net.state_dim; ++d) {
      const double diff = sc[d] - c[d];
      d2 += diff * diff;
    }
    phi[k] = std::exp(-d2 / (2.0 * net.kernel_variance));
  }
  return phi;
}

std::vector<double> rbf_q_values(const RbfNet& net, std::span<const double> s, bool* clipped_flag) {
  const std::vector<double> phi = rbf_features(net, s, clipped_flag);
  const int K = net.feature_count();
  std::vector<double> q(net.num_actions, 0.0);
  for (int a = 0; a < net.num_actions; ++a) {
    const double* wrow = net.output_weights.data() + static_cast<std::size_t>(a) * K;
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += wrow[k] * phi[k];
    q[a] = sum;
  }
  return q;
}

std::vector<double> rbf_input_gradient(const RbfNet& net, std::span<const double> s,
                                       std::span<const double> upstream) {
  if (static_cast<int>(upstream.size()) != net.num_actions) {
    throw ShapeError("rbf_input_gradient: upstream has wrong dimension");
  }
  bool clipped = false;
  const std::vector<double> phi = rbf_features(net, s, &clipped);
  const std::vector<double> sc = clip_unit(s, nullptr);
  const int K = net.feature_count();
  // <upstream, Q> = sum_k (sum_a upstream_a w[a,k]) phi_k
  std::vector<double> coeff(K, 0.0);
  for (int a = 0; a < net.num_actions; ++a) {
    const double* wrow = net.output_weights.data() + static_cast<std::size_t>(a) * K;
    for (int k = 0; k < K; ++k) coeff[k] += upstream[a] * wrow[k];
  }
  std::vector<double> grad(net.state_dim, 0.0);
  for (int k = 0; k < K; ++k) {
    const double* c = net.centroids.data() + static_cast<std::size_t>(k) * net.state_dim;
    const double scale = coeff[k] * phi[k] / net.kernel_variance;
    for (int d = 0; d < net.state_dim; ++d) grad[d] += scale * (c[d] - sc[d]);
  }
  // Clipped components do not move with s.
  for (int d = 0; d < net.state_dim; ++d) {
    if (s[d] < 0.0 || s[d] > 1.0) grad[d] = 0.0;
  }
  return grad;
}

double rbf_td_update(RbfNet& net, std::span<const double> s, int a, double r,
                     std::span<const double> s_next, bool done, double gamma, double lr) {
  if (a < 0 || a >= net.num_actions) throw ContractError("rbf_td_update: action out of range");
  const std::vector<double> phi = rbf_features(net, s);
  const int K = net.feature_count();
  const double* wrow = net.output_weights.data() + static_cast<std::size_t>(a) * K;
  double q_sa = 0.0;
  for (int k = 0; k < K; ++k) q_sa += wrow[k] * phi[k];

  double target = r;
  if (!done) {
    const std::vector<double> q_next = rbf_q_values(net, s_next);
    target += gamma * *std::max_element(q_next.begin(), q_next.end());
  }
  const double delta = target - q_sa;
  double* wmut = net.output_weights.data() + static_cast<std::size_t>(a) * K;
  for (int k = 0; k < K; ++k) wmut[k] += lr * delta * phi[k];
  return delta;
}

void save_rbf(const RbfNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  std::ostringstream hs;
  hs.precision(17);
  hs << "RRLRBF v1 " << net.bins_per_dim << ';' << net.state_dim << ';' << net.num_actions << ';'
     << net.kernel_variance;
  out << hs.str() << "\n";
  for (double d : net.output_weights) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(d);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw IoError("write failed: " + path);
}

RbfNet load_rbf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("checkpoint truncated: missing header");
  std::istringstream hs(header);
  std::string magic, version, desc;
  hs >> magic >> version >> desc;
  if (magic != "RRLRBF") {
    throw IoError("checkpoint format error: expected magic RRLRBF, found '" + magic + "'");
  }
  if (version != "v1") {
    throw IoError("checkpoint format error: expected version v1, found '" + version + "'");
  }
  std::istringstream ds(desc);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ds, part, ';')) parts.push_back(part);
  if (parts.size() != 4) throw IoError("checkpoint format error: bad RBF descriptor");
  RbfNet net = make_rbf(std::stoi(parts[0]), std::stoi(parts[1]), std::stoi(parts[2]));
  net.kernel_variance = std::stod(parts[3]);
  for (double& d : net.output_weights) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw IoError("checkpoint truncated: expected more float data");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    d = std::bit_cast<double>(u);
  }
  return net;
}

}  // namespace rrl::rbf
