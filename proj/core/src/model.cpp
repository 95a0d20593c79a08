#include "lipcert/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "lipcert/error.hpp"

namespace lipcert {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string layer_label(int i) { return "layer " + std::to_string(i); }

void require_finite(const Eigen::MatrixXd& m, int i, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kInvalidValue, layer_label(i) + ": non-finite " + what);
  }
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kLinear: return "linear";
  }
  return "linear";
}

std::optional<Activation> parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "linear") return Activation::kLinear;
  return std::nullopt;
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kTanh: return std::tanh(x);
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::kLinear: return x;
  }
  return x;
}

bool ValidatedNetwork::has_max_pool() const {
  for (int i : pool_layers_) {
    if (std::get<PoolLayerSpec>(layer(i)).kind == PoolKind::kMaximum) return true;
  }
  return false;
}

int ValidatedNetwork::boundary_channels() const {
  if (flatten_index_) return channels_before(*flatten_index_);
  if (!has_dense_part()) return channels_before(num_layers());
  return spec_.input_channels;
}

int ValidatedNetwork::total_pool_factor() const {
  int factor = 1;
  for (int i : pool_layers_) factor *= std::get<PoolLayerSpec>(layer(i)).window;
  return factor;
}

std::optional<int> ValidatedNetwork::implied_input_length() const {
  if (!has_dense_part()) return std::nullopt;
  const auto& first = std::get<DenseLayerSpec>(layer(dense_layers_.front()));
  const int n_in = static_cast<int>(first.weight.cols());
  return n_in / boundary_channels() * total_pool_factor();
}

ValidatedNetwork validate_network(NetworkSpec spec) {
  if (spec.input_channels < 1) {
    throw Error(ErrorCode::kInvalidValue, "input_channels must be positive");
  }
  if (spec.layers.empty()) {
    throw Error(ErrorCode::kGrammarViolation, "network has no layers");
  }

  ValidatedNetwork net;
  enum class Phase { kStart, kConv, kAfterFlatten, kDense };
  Phase phase = Phase::kStart;
  bool prev_is_conv = false;
  int channels = spec.input_channels;
  int prev_width = -1;  // dense part width
  net.channels_before_.reserve(spec.layers.size() + 1);

  for (int i = 0; i < static_cast<int>(spec.layers.size()); ++i) {
    const LayerSpec& layer = spec.layers[static_cast<std::size_t>(i)];
    net.channels_before_.push_back(phase == Phase::kDense ? prev_width : channels);

    std::visit(
        Overloaded{
            [&](const ConvLayerSpec& conv) {
              if (phase == Phase::kAfterFlatten || phase == Phase::kDense) {
                throw Error(ErrorCode::kGrammarViolation,
                            layer_label(i) + ": convolution after the dense part");
              }
              if (conv.kernel.empty()) {
                throw Error(ErrorCode::kInvalidValue, layer_label(i) + ": kernel has no taps");
              }
              const auto rows = conv.kernel.front().rows();
              const auto cols = conv.kernel.front().cols();
              if (rows < 1 || cols < 1) {
                throw Error(ErrorCode::kInvalidValue, layer_label(i) + ": empty kernel tap");
              }
              for (const auto& tap : conv.kernel) {
                if (tap.rows() != rows || tap.cols() != cols) {
                  throw Error(ErrorCode::kDimensionMismatch, layer_label(i) + ": ragged kernel taps");
                }
                require_finite(tap, i, "kernel entry");
              }
              if (conv.bias.size() != rows) {
                throw Error(ErrorCode::kDimensionMismatch, layer_label(i) + ": bias length != c_out");
              }
              require_finite(conv.bias, i, "bias");
              if (cols != channels) {
                throw Error(ErrorCode::kDimensionMismatch,
                            layer_label(i) + ": expects " + std::to_string(cols) +
                                " input channels, got " + std::to_string(channels));
              }
              channels = static_cast<int>(rows);
              net.conv_layers_.push_back(i);
              phase = Phase::kConv;
              prev_is_conv = true;
            },
            [&](const PoolLayerSpec& pool) {
              if (!prev_is_conv) {
                throw Error(ErrorCode::kGrammarViolation,
                            layer_label(i) + ": pooling must directly follow a convolution");
              }
              if (pool.window < 1) {
                throw Error(ErrorCode::kInvalidValue, layer_label(i) + ": pooling window must be >= 1");
              }
              net.pool_layers_.push_back(i);
              prev_is_conv = false;
            },
            [&](const FlattenMarker&) {
              if (phase != Phase::kConv) {
                throw Error(ErrorCode::kGrammarViolation,
                            layer_label(i) + ": flatten must close a convolutional part");
              }
              net.flatten_index_ = i;
              phase = Phase::kAfterFlatten;
              prev_is_conv = false;
            },
            [&](const DenseLayerSpec& dense) {
              if (phase == Phase::kConv) {
                throw Error(ErrorCode::kGrammarViolation,
                            layer_label(i) + ": missing flatten between conv and dense parts");
              }
              const auto n_out = dense.weight.rows();
              const auto n_in = dense.weight.cols();
              if (n_out < 1 || n_in < 1) {
                throw Error(ErrorCode::kInvalidValue, layer_label(i) + ": empty weight matrix");
              }
              require_finite(dense.weight, i, "weight");
              if (dense.bias.size() != n_out) {
                throw Error(ErrorCode::kDimensionMismatch, layer_label(i) + ": bias length != n_out");
              }
              require_finite(dense.bias, i, "bias");
              if (phase == Phase::kDense) {
                if (n_in != prev_width) {
                  throw Error(ErrorCode::kDimensionMismatch,
                              layer_label(i) + ": expects " + std::to_string(n_in) +
                                  " inputs, previous layer has " + std::to_string(prev_width));
                }
              } else if (n_in % channels != 0) {
                throw Error(phase == Phase::kAfterFlatten ? ErrorCode::kFlattenMismatch
                                                          : ErrorCode::kDimensionMismatch,
                            layer_label(i) + ": input width " + std::to_string(n_in) +
                                " is not a multiple of " + std::to_string(channels) + " channels");
              }
              prev_width = static_cast<int>(n_out);
              net.dense_layers_.push_back(i);
              phase = Phase::kDense;
              prev_is_conv = false;
            },
        },
        layer);
  }
  net.channels_before_.push_back(phase == Phase::kDense ? prev_width : channels);

  if (phase == Phase::kAfterFlatten) {
    throw Error(ErrorCode::kGrammarViolation, "flatten is not followed by a dense layer");
  }

  net.terminal_layer_ = net.has_dense_part() ? net.dense_layers_.back() : net.conv_layers_.back();
  const LayerSpec& terminal = spec.layers[static_cast<std::size_t>(net.terminal_layer_)];
  const Activation terminal_act = std::holds_alternative<DenseLayerSpec>(terminal)
                                      ? std::get<DenseLayerSpec>(terminal).activation
                                      : std::get<ConvLayerSpec>(terminal).activation;
  if (terminal_act != Activation::kLinear) {
    throw Error(ErrorCode::kGrammarViolation,
                layer_label(net.terminal_layer_) + ": final layer must have linear activation");
  }

  net.spec_ = std::move(spec);
  return net;
}

DimTrace infer_dims(const ValidatedNetwork& net, int n0) {
  if (n0 < 1) throw Error(ErrorCode::kInvalidValue, "input length must be positive");
  DimTrace trace;
  trace.input = {net.spec().input_channels, n0};
  SignalShape shape = trace.input;
  if (!net.has_conv_part()) shape = {shape.size(), 1};

  for (int i = 0; i < net.num_layers(); ++i) {
    std::visit(Overloaded{
                   [&](const ConvLayerSpec& conv) { shape.channels = conv.out_channels(); },
                   [&](const PoolLayerSpec& pool) {
                     if (shape.length % pool.window != 0) {
                       throw Error(ErrorCode::kIndivisiblePooling,
                                   layer_label(i) + ": window " + std::to_string(pool.window) +
                                       " does not divide length " + std::to_string(shape.length));
                     }
                     shape.length /= pool.window;
                   },
                   [&](const FlattenMarker&) {
                     trace.flatten_size = shape.size();
                     shape = {shape.size(), 1};
                   },
                   [&](const DenseLayerSpec& dense) {
                     if (dense.weight.cols() != shape.size()) {
                       throw Error(ErrorCode::kFlattenMismatch,
                                   layer_label(i) + ": expects " + std::to_string(dense.weight.cols()) +
                                       " inputs, signal has " + std::to_string(shape.size()));
                     }
                     shape = {static_cast<int>(dense.weight.rows()), 1};
                   },
               },
               net.layer(i));
    trace.layers.push_back(shape);
  }
  return trace;
}

Eigen::VectorXd flatten_signal(const Eigen::MatrixXd& signal) {
  return Eigen::Map<const Eigen::VectorXd>(signal.data(), signal.size());
}

Eigen::MatrixXd unflatten_signal(const Eigen::VectorXd& flat, int channels) {
  if (channels < 1 || flat.size() % channels != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "cannot unflatten into the requested channel count");
  }
  return Eigen::Map<const Eigen::MatrixXd>(flat.data(), channels, flat.size() / channels);
}

Eigen::MatrixXd convolve(const ConvLayerSpec& conv, const Eigen::MatrixXd& input) {
  if (input.rows() != conv.in_channels()) {
    throw Error(ErrorCode::kDimensionMismatch, "convolution input channel count mismatch");
  }
  const Eigen::Index n = input.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(conv.out_channels(), n);
  for (int j = 0; j < conv.taps(); ++j) {
    if (j >= n) break;
    out.rightCols(n - j).noalias() += conv.kernel[static_cast<std::size_t>(j)] * input.leftCols(n - j);
  }
  return out;
}

Eigen::MatrixXd pool(const PoolLayerSpec& pool, const Eigen::MatrixXd& input) {
  if (pool.window < 1 || input.cols() % pool.window != 0) {
    throw Error(ErrorCode::kIndivisiblePooling, "pooling window does not divide the signal length");
  }
  const Eigen::Index n_out = input.cols() / pool.window;
  Eigen::MatrixXd out(input.rows(), n_out);
  for (Eigen::Index k = 0; k < n_out; ++k) {
    auto window = input.middleCols(k * pool.window, pool.window);
    if (pool.kind == PoolKind::kAverage) {
      out.col(k) = window.rowwise().mean();
    } else {
      out.col(k) = window.rowwise().maxCoeff();
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> forward_trace(const ValidatedNetwork& net, const Eigen::MatrixXd& input) {
  if (input.rows() != net.spec().input_channels) {
    throw Error(ErrorCode::kDimensionMismatch, "input has " + std::to_string(input.rows()) +
                                                   " channels, network expects " +
                                                   std::to_string(net.spec().input_channels));
  }
  infer_dims(net, static_cast<int>(input.cols()));

  std::vector<Eigen::MatrixXd> signals;
  signals.reserve(static_cast<std::size_t>(net.num_layers()) + 1);
  signals.push_back(input);
  Eigen::MatrixXd w = net.has_conv_part() ? input : Eigen::MatrixXd(flatten_signal(input));

  for (int i = 0; i < net.num_layers(); ++i) {
    std::visit(Overloaded{
                   [&](const ConvLayerSpec& conv) {
                     Eigen::MatrixXd y = convolve(conv, w);
                     y.colwise() += conv.bias;
                     w = y.unaryExpr([a = conv.activation](double v) { return activate(a, v); });
                   },
                   [&](const PoolLayerSpec& p) { w = pool(p, w); },
                   [&](const FlattenMarker&) { w = flatten_signal(w); },
                   [&](const DenseLayerSpec& dense) {
                     Eigen::VectorXd y = dense.weight * w.col(0) + dense.bias;
                     w = y.unaryExpr([a = dense.activation](double v) { return activate(a, v); });
                   },
               },
               net.layer(i));
    signals.push_back(w);
  }
  return signals;
}

Eigen::VectorXd forward(const ValidatedNetwork& net, const Eigen::MatrixXd& input) {
  return flatten_signal(forward_trace(net, input).back());
}

NetworkSpec random_network(const ArchDescriptor& arch, std::uint64_t seed) {
  if (arch.channels.empty() || arch.channels.size() != arch.kernels.size() + 1) {
    throw Error(ErrorCode::kInvalidValue, "architecture needs channels.size() == kernels.size() + 1");
  }
  const std::size_t n_conv = arch.kernels.size();
  if (n_conv == 0 && arch.dense_widths.empty()) {
    throw Error(ErrorCode::kInvalidValue, "architecture has no layers");
  }

  std::mt19937_64 gen(seed);
  auto uniform = [&gen](double bound) {
    return std::uniform_real_distribution<double>(-bound, bound)(gen);
  };

  NetworkSpec spec;
  spec.input_channels = arch.channels.front();
  int pool_factor = 1;
  for (std::size_t i = 0; i < n_conv; ++i) {
    const int c_in = arch.channels[i];
    const int c_out = arch.channels[i + 1];
    const int taps = arch.kernels[i];
    if (c_in < 1 || c_out < 1 || taps < 1) {
      throw Error(ErrorCode::kInvalidValue, "conv channels and kernel sizes must be positive");
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(taps * c_in));
    ConvLayerSpec conv;
    conv.kernel.resize(static_cast<std::size_t>(taps));
    for (auto& tap : conv.kernel) {
      tap.resize(c_out, c_in);
      for (int r = 0; r < c_out; ++r)
        for (int c = 0; c < c_in; ++c) tap(r, c) = uniform(bound);
    }
    conv.bias = Eigen::VectorXd::Zero(c_out);
    const bool terminal = arch.dense_widths.empty() && i + 1 == n_conv;
    conv.activation = terminal ? Activation::kLinear : arch.hidden_activation;
    spec.layers.emplace_back(std::move(conv));
    if (i < arch.pools.size() && arch.pools[i]) {
      spec.layers.emplace_back(*arch.pools[i]);
      pool_factor *= arch.pools[i]->window;
    }
  }

  if (!arch.dense_widths.empty()) {
    if (arch.input_length < 1 || arch.input_length % pool_factor != 0) {
      throw Error(ErrorCode::kInvalidValue, "input_length must be positive and divisible by the pooling factor");
    }
    int n_in = arch.channels.back() * (arch.input_length / pool_factor);
    if (n_conv > 0) spec.layers.emplace_back(FlattenMarker{});
    for (std::size_t i = 0; i < arch.dense_widths.size(); ++i) {
      const int n_out = arch.dense_widths[i];
      if (n_out < 1) throw Error(ErrorCode::kInvalidValue, "dense widths must be positive");
      const double bound = 1.0 / std::sqrt(static_cast<double>(n_in));
      DenseLayerSpec dense;
      dense.weight.resize(n_out, n_in);
      for (int r = 0; r < n_out; ++r)
        for (int c = 0; c < n_in; ++c) dense.weight(r, c) = uniform(bound);
      dense.bias = Eigen::VectorXd::Zero(n_out);
      dense.activation =
          i + 1 == arch.dense_widths.size() ? Activation::kLinear : arch.hidden_activation;
      spec.layers.emplace_back(std::move(dense));
      n_in = n_out;
    }
  }
  return spec;
}

ArchDescriptor fully_convolutional_arch() {
  ArchDescriptor arch;
  arch.channels = {1, 3, 5, 10};
  arch.kernels = {3, 3, 3};
  return arch;
}

ArchDescriptor two_stage_pooling_arch(int c1, int c2, int input_length, int classes) {
  ArchDescriptor arch;
  arch.channels = {1, c1, c2};
  arch.kernels = {3, 3};
  arch.pools = {PoolLayerSpec{PoolKind::kAverage, 2}, PoolLayerSpec{PoolKind::kAverage, 2}};
  arch.dense_widths = {classes};
  arch.input_length = input_length;
  return arch;
}

}  // namespace lipcert
