#pragma once

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lipcert/model.hpp"

namespace lipcert::testing {

inline ConvLayerSpec conv_layer(std::vector<Eigen::MatrixXd> taps, Activation act) {
  ConvLayerSpec c;
  c.kernel = std::move(taps);
  c.bias = Eigen::VectorXd::Zero(c.kernel.front().rows());
  c.activation = act;
  return c;
}

inline DenseLayerSpec dense_layer(Eigen::MatrixXd w, Activation act) {
  DenseLayerSpec d;
  d.bias = Eigen::VectorXd::Zero(w.rows());
  d.weight = std::move(w);
  d.activation = act;
  return d;
}

inline NetworkSpec single_dense(const Eigen::MatrixXd& w) {
  NetworkSpec s;
  s.input_channels = static_cast<int>(w.cols());
  s.layers.emplace_back(dense_layer(w, Activation::kLinear));
  return s;
}

inline NetworkSpec single_conv(std::vector<Eigen::MatrixXd> taps) {
  NetworkSpec s;
  s.input_channels = static_cast<int>(taps.front().cols());
  s.layers.emplace_back(conv_layer(std::move(taps), Activation::kLinear));
  return s;
}

/// identity conv (c channels) -> pool(l) -> flatten -> identity dense.
inline NetworkSpec identity_pool_net(PoolKind kind, int window, int channels, int n0,
                                     Activation act = Activation::kRelu) {
  NetworkSpec s;
  s.input_channels = channels;
  s.layers.emplace_back(conv_layer({Eigen::MatrixXd::Identity(channels, channels)}, act));
  s.layers.emplace_back(PoolLayerSpec{kind, window});
  s.layers.emplace_back(FlattenMarker{});
  const int width = channels * n0 / window;
  s.layers.emplace_back(dense_layer(Eigen::MatrixXd::Identity(width, width), Activation::kLinear));
  return s;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = g(gen);
  return m;
}

inline NetworkSpec random_single_conv(std::uint64_t seed, int max_channels, int max_taps) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> ch(1, max_channels), tp(1, max_taps);
  const int cin = ch(gen), cout = ch(gen), taps = tp(gen);
  std::vector<Eigen::MatrixXd> k;
  for (int j = 0; j < taps; ++j) k.push_back(random_matrix(gen, cout, cin, 0.5));
  return single_conv(std::move(k));
}

inline NetworkSpec random_mlp(std::uint64_t seed, int max_width) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> w(1, max_width);
  int n = w(gen);
  NetworkSpec s;
  s.input_channels = n;
  for (int k = 0; k < 3; ++k) {
    const int out = w(gen);
    s.layers.emplace_back(
        dense_layer(random_matrix(gen, out, n, 1.0 / std::sqrt(n)), k == 2 ? Activation::kLinear : Activation::kRelu));
    n = out;
  }
  return s;
}

/// A seeded random CNN: 1-2 conv layers, optional avg/max pooling, optional
/// dense head. At most 6 layers, channels at most 16. Returns the spec and
/// an input length that fits it.
struct CorpusEntry {
  NetworkSpec spec;
  int n0 = 0;
};

inline CorpusEntry corpus_network(std::uint64_t index) {
  std::mt19937_64 gen(1000 + index);
  auto pick = [&gen](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };

  ArchDescriptor arch;
  arch.hidden_activation = index % 2 == 0 ? Activation::kRelu : Activation::kTanh;
  const int n_conv = pick(1, 2);
  const bool head = pick(0, 2) > 0;
  arch.channels.push_back(pick(1, 3));
  for (int i = 0; i < n_conv; ++i) {
    arch.channels.push_back(index % 10 == 3 && i == 0 ? 16 : pick(1, 8));
    arch.kernels.push_back(pick(1, 4));
    const bool last_conv = i + 1 == n_conv;
    if (head || !last_conv) {
      const int p = pick(0, 2);
      if (p == 0) {
        arch.pools.emplace_back(std::nullopt);
      } else {
        arch.pools.emplace_back(PoolLayerSpec{p == 1 ? PoolKind::kAverage : PoolKind::kMaximum, 2});
      }
    }
  }
  int factor = 1;
  for (const auto& p : arch.pools)
    if (p) factor *= p->window;
  const int n0 = 8 * factor;
  if (head) {
    const int n_dense = pick(1, 2);
    for (int k = 0; k < n_dense; ++k) arch.dense_widths.push_back(pick(1, 8));
    arch.input_length = n0;
  }
  return {random_network(arch, index), n0};
}

inline NetworkSpec scale_terminal(NetworkSpec spec, double alpha) {
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    if (auto* d = std::get_if<DenseLayerSpec>(&*it)) {
      d->weight *= alpha;
      return spec;
    }
    if (auto* c = std::get_if<ConvLayerSpec>(&*it)) {
      for (auto& k : c->kernel) k *= alpha;
      return spec;
    }
  }
  return spec;
}

/// Operator norm of the zero-padded convolution at a long horizon, computed
/// from a dense convolution matrix built directly from the taps.
inline double toeplitz_gain(const ConvLayerSpec& conv, int horizon) {
  const int ci = conv.in_channels(), co = conv.out_channels();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(co * horizon, ci * horizon);
  for (int k = 0; k < horizon; ++k)
    for (int j = 0; j < conv.taps() && j <= k; ++j) t.block(k * co, (k - j) * ci, co, ci) = conv.kernel[j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
  return svd.singularValues()(0);
}

}  // namespace lipcert::testing
